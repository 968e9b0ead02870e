#ifndef CROP_POLICY_NET_HPP
#define CROP_POLICY_NET_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crop/random.hpp"

namespace crop {

struct DenseLayer {
    Eigen::MatrixXd weight;  // rows = outputs, cols = inputs
    Eigen::VectorXd bias;
};

// Feed-forward network, ReLU on hidden layers, identity on the output.
// Batched calls take one sample per column.
class Mlp {
public:
    struct Cache {
        // inputs[l] is the (post-activation) input of layer l.
        std::vector<Eigen::MatrixXd> inputs;
    };

    Mlp() = default;
    explicit Mlp(std::vector<DenseLayer> layers);
    // Uniform fan-in initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    static Mlp random(std::span<const int> sizes, Rng& rng);

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache& cache) const;
    // Gradient of sum(d_out .* output) w.r.t. all parameters, flattened in
    // parameter order (layer by layer, row-major weight then bias).
    Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& d_out) const;

    std::size_t parameter_count() const;
    Eigen::VectorXd flatten() const;
    void assign(const Eigen::VectorXd& params);

    bool all_finite() const;

private:
    std::vector<DenseLayer> layers_;
};

struct NetworkShape {
    int inputs = 23;
    std::vector<int> hidden = {64, 64};
    int actions = 6;
};

struct PolicyOutput {
    Eigen::VectorXd logits;
    double value = 0.0;
};

struct ActionSample {
    int action = 0;
    double log_prob = 0.0;
};

// Separate actor (inputs -> hidden -> actions) and critic (inputs -> hidden -> 1) trunks.
class PolicyNetwork {
public:
    PolicyNetwork() = default;
    PolicyNetwork(Mlp actor, Mlp critic);
    static PolicyNetwork make(const NetworkShape& shape, std::uint64_t seed);
    // Every parameter zero.
    static PolicyNetwork zeros(const NetworkShape& shape);

    const Mlp& actor() const noexcept { return actor_; }
    const Mlp& critic() const noexcept { return critic_; }
    Mlp& actor() noexcept { return actor_; }
    Mlp& critic() noexcept { return critic_; }

    std::size_t input_dim() const { return actor_.input_dim(); }
    std::size_t num_actions() const { return actor_.output_dim(); }

    PolicyOutput forward(std::span<const double> obs) const;
    Eigen::VectorXd logits(std::span<const double> obs) const;
    double value(std::span<const double> obs) const;

    friend bool operator==(const PolicyNetwork& a, const PolicyNetwork& b);

private:
    Mlp actor_;
    Mlp critic_;
};

// Index of the largest entry; ties go to the lowest index.
int argmax(const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::VectorXd log_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

int act_deterministic(const PolicyNetwork& net, std::span<const double> obs);
ActionSample act_stochastic(const PolicyNetwork& net, std::span<const double> obs, Rng& rng);

// Gradients w.r.t. the flattened actor / critic parameters.
Eigen::VectorXd log_prob_gradient(const PolicyNetwork& net, std::span<const double> obs, int action);
Eigen::VectorXd value_gradient(const PolicyNetwork& net, std::span<const double> obs);

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// JSON container; see docs/checkpoint-format.md.
std::string checkpoint_to_string(const PolicyNetwork& net);
PolicyNetwork checkpoint_from_string(const std::string& text);
void save_checkpoint(const PolicyNetwork& net, const std::string& path);
PolicyNetwork load_checkpoint(const std::string& path);

}  // namespace crop

#endif  // CROP_POLICY_NET_HPP
