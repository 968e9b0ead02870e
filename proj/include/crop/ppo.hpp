#ifndef CROP_PPO_HPP
#define CROP_PPO_HPP

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "crop/policy_net.hpp"

namespace crop {

struct GaeStep {
    double reward = 0.0;  // reward the advantage is computed on (already shaped)
    double value = 0.0;   // V(s_t)
    bool done = false;    // episode ended after this step
    bool terminal = false;  // ended in an absorbing state: no bootstrap
    double bootstrap_value = 0.0;  // V(s_{t+1}) for done && !terminal (time-limit)
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

// Generalized advantage estimation; `last_value` bootstraps a trajectory
// cut mid-episode. Advantages are returned unnormalized. Throws on empty input.
GaeResult compute_gae(std::span<const GaeStep> steps, double last_value, double gamma, double lambda);

// In-place shift to mean 0 and scale to std 1 (std floor 1e-8).
void normalize_advantages(std::vector<double>& adv);

struct PpoConfig {
    double clip_ratio = 0.2;
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    int epochs = 4;
    int minibatch = 256;
    double entropy_coef = 0.01;
    double max_grad_norm = 0.5;
};

struct PpoBatch {
    Eigen::MatrixXd obs;  // one observation per column
    std::vector<int> actions;
    Eigen::VectorXd old_log_probs;
    Eigen::VectorXd advantages;
    Eigen::VectorXd returns;

    Eigen::Index size() const { return obs.cols(); }
};

struct LossAndGrad {
    double loss = 0.0;
    Eigen::VectorXd grad;
    double entropy = 0.0;         // mean policy entropy (actor only)
    double clip_fraction = 0.0;   // share of samples on the clipped branch (actor only)
    double approx_kl = 0.0;       // mean(old_logp - new_logp) (actor only)
};

// Clipped-surrogate loss -mean(min(r A, clip(r) A)) - c_ent * mean(H) and
// its gradient w.r.t. the flattened actor parameters. `idx` selects columns.
LossAndGrad actor_loss(const Mlp& actor, const PpoBatch& batch, std::span<const Eigen::Index> idx,
                       double clip_ratio, double entropy_coef);

// 0.5 * mean((V - R)^2) and its gradient w.r.t. the flattened critic parameters.
LossAndGrad critic_loss(const Mlp& critic, const PpoBatch& batch, std::span<const Eigen::Index> idx);

class Adam {
public:
    Adam() = default;
    Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-5);
    // Returns the updated parameter vector.
    Eigen::VectorXd step(const Eigen::VectorXd& params, const Eigen::VectorXd& grad);

private:
    double lr_ = 0.0;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-5;
    long t_ = 0;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
};

struct PpoDiagnostics {
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double entropy = 0.0;
    double approx_kl = 0.0;
    double clip_fraction = 0.0;
    int minibatches = 0;
};

class NonFiniteLossError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Owns the Adam state for one network across updates.
class PpoOptimizer {
public:
    PpoOptimizer(const PolicyNetwork& net, const PpoConfig& cfg);

    // Runs cfg.epochs passes of shuffled minibatches over the batch.
    // Throws NonFiniteLossError if any loss or gradient stops being finite.
    PpoDiagnostics update(PolicyNetwork& net, const PpoBatch& batch, Rng& rng);

    const PpoConfig& config() const noexcept { return cfg_; }

private:
    PpoConfig cfg_;
    Adam actor_opt_;
    Adam critic_opt_;
};

}  // namespace crop

#endif  // CROP_PPO_HPP
