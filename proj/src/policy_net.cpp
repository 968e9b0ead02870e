#include "crop/policy_net.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crop/constants.hpp"

namespace crop {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x)
{
    return {x.data(), static_cast<Eigen::Index>(x.size())};
}

}  // namespace

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers))
{
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.bias.size() != layer.weight.rows()) {
            throw std::invalid_argument("layer " + std::to_string(l) + ": bias/weight row mismatch");
        }
        if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows()) {
            throw std::invalid_argument("layer " + std::to_string(l) + ": input width " +
                                        std::to_string(layer.weight.cols()) +
                                        " does not match previous output " +
                                        std::to_string(layers_[l - 1].weight.rows()));
        }
    }
}

Mlp Mlp::random(std::span<const int> sizes, Rng& rng)
{
    if (sizes.size() < 2) {
        throw std::invalid_argument("an MLP needs at least input and output sizes");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        if (fan_in <= 0 || fan_out <= 0) {
            throw std::invalid_argument("layer sizes must be positive");
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd(fan_out)};
        // Row-major fill order keeps initialization independent of Eigen's storage.
        for (int i = 0; i < fan_out; ++i) {
            for (int j = 0; j < fan_in; ++j) {
                layer.weight(i, j) = dist(rng);
            }
        }
        for (int i = 0; i < fan_out; ++i) {
            layer.bias(i) = dist(rng);
        }
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

std::size_t Mlp::input_dim() const
{
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

std::size_t Mlp::output_dim() const
{
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const
{
    Eigen::MatrixXd h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::MatrixXd z = layers_[l].weight * h;
        z.colwise() += layers_[l].bias;
        if (l + 1 < layers_.size()) {
            z = z.cwiseMax(0.0);
        }
        h = std::move(z);
    }
    return h;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache& cache) const
{
    cache.inputs.clear();
    cache.inputs.reserve(layers_.size());
    Eigen::MatrixXd h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        cache.inputs.push_back(h);
        Eigen::MatrixXd z = layers_[l].weight * h;
        z.colwise() += layers_[l].bias;
        if (l + 1 < layers_.size()) {
            z = z.cwiseMax(0.0);
        }
        h = std::move(z);
    }
    return h;
}

Eigen::VectorXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& d_out) const
{
    Eigen::VectorXd grad(static_cast<Eigen::Index>(parameter_count()));
    std::vector<Eigen::Index> offsets(layers_.size());
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        offsets[l] = off;
        off += layers_[l].weight.size() + layers_[l].bias.size();
    }

    Eigen::MatrixXd delta = d_out;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& layer = layers_[l];
        const RowMajorMatrix dw = delta * cache.inputs[l].transpose();
        const Eigen::Index nw = dw.size();
        grad.segment(offsets[l], nw) = Eigen::Map<const Eigen::VectorXd>(dw.data(), nw);
        grad.segment(offsets[l] + nw, layer.bias.size()) = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = layer.weight.transpose() * delta;
            delta = (cache.inputs[l].array() > 0.0).select(back, 0.0);
        }
    }
    return grad;
}

std::size_t Mlp::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& layer : layers_) {
        n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    }
    return n;
}

Eigen::VectorXd Mlp::flatten() const
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index off = 0;
    for (const auto& layer : layers_) {
        const RowMajorMatrix w = layer.weight;
        out.segment(off, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
        off += w.size();
        out.segment(off, layer.bias.size()) = layer.bias;
        off += layer.bias.size();
    }
    return out;
}

void Mlp::assign(const Eigen::VectorXd& params)
{
    if (static_cast<std::size_t>(params.size()) != parameter_count()) {
        throw std::invalid_argument("parameter vector size mismatch");
    }
    Eigen::Index off = 0;
    for (auto& layer : layers_) {
        const Eigen::Index r = layer.weight.rows();
        const Eigen::Index c = layer.weight.cols();
        layer.weight = Eigen::Map<const RowMajorMatrix>(params.data() + off, r, c);
        off += r * c;
        layer.bias = params.segment(off, r);
        off += r;
    }
}

bool Mlp::all_finite() const
{
    for (const auto& layer : layers_) {
        if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
            return false;
        }
    }
    return true;
}

PolicyNetwork::PolicyNetwork(Mlp actor, Mlp critic) : actor_(std::move(actor)), critic_(std::move(critic))
{
    if (actor_.input_dim() != critic_.input_dim()) {
        throw std::invalid_argument("actor and critic input widths differ");
    }
    if (critic_.output_dim() != 1) {
        throw std::invalid_argument("critic must have exactly one output");
    }
}

PolicyNetwork PolicyNetwork::make(const NetworkShape& shape, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<int> actor_sizes{shape.inputs};
    actor_sizes.insert(actor_sizes.end(), shape.hidden.begin(), shape.hidden.end());
    std::vector<int> critic_sizes = actor_sizes;
    actor_sizes.push_back(shape.actions);
    critic_sizes.push_back(1);

    Mlp actor = Mlp::random(actor_sizes, rng);
    Mlp critic = Mlp::random(critic_sizes, rng);
    // Near-uniform initial policy.
    actor.layers().back().weight *= 0.01;
    actor.layers().back().bias.setZero();
    return PolicyNetwork(std::move(actor), std::move(critic));
}

PolicyNetwork PolicyNetwork::zeros(const NetworkShape& shape)
{
    PolicyNetwork net = make(shape, 0);
    for (auto* mlp : {&net.actor_, &net.critic_}) {
        for (auto& layer : mlp->layers()) {
            layer.weight.setZero();
            layer.bias.setZero();
        }
    }
    return net;
}

PolicyOutput PolicyNetwork::forward(std::span<const double> obs) const
{
    return {logits(obs), value(obs)};
}

Eigen::VectorXd PolicyNetwork::logits(std::span<const double> obs) const
{
    if (obs.size() != input_dim()) {
        throw std::invalid_argument("observation has " + std::to_string(obs.size()) +
                                    " entries, network expects " + std::to_string(input_dim()));
    }
    return actor_.forward(as_vector(obs));
}

double PolicyNetwork::value(std::span<const double> obs) const
{
    if (obs.size() != input_dim()) {
        throw std::invalid_argument("observation has " + std::to_string(obs.size()) +
                                    " entries, network expects " + std::to_string(input_dim()));
    }
    return critic_.forward(as_vector(obs))(0, 0);
}

bool operator==(const PolicyNetwork& a, const PolicyNetwork& b)
{
    auto same = [](const Mlp& x, const Mlp& y) {
        if (x.layers().size() != y.layers().size()) {
            return false;
        }
        for (std::size_t l = 0; l < x.layers().size(); ++l) {
            const auto& lx = x.layers()[l];
            const auto& ly = y.layers()[l];
            if (lx.weight.rows() != ly.weight.rows() || lx.weight.cols() != ly.weight.cols() ||
                lx.weight != ly.weight || lx.bias != ly.bias) {
                return false;
            }
        }
        return true;
    };
    return same(a.actor_, b.actor_) && same(a.critic_, b.critic_);
}

int argmax(const Eigen::Ref<const Eigen::VectorXd>& v)
{
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v(i) > v(best)) {
            best = static_cast<int>(i);
        }
    }
    return best;
}

Eigen::VectorXd log_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits)
{
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    return logits.array() - lse;
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits)
{
    Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
}

int act_deterministic(const PolicyNetwork& net, std::span<const double> obs)
{
    return argmax(net.logits(obs));
}

ActionSample act_stochastic(const PolicyNetwork& net, std::span<const double> obs, Rng& rng)
{
    const Eigen::VectorXd logp = log_softmax(net.logits(obs));
    const Eigen::VectorXd p = logp.array().exp();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    int action = static_cast<int>(p.size()) - 1;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        acc += p(i);
        if (u < acc) {
            action = static_cast<int>(i);
            break;
        }
    }
    return {action, logp(action)};
}

Eigen::VectorXd log_prob_gradient(const PolicyNetwork& net, std::span<const double> obs, int action)
{
    Mlp::Cache cache;
    const Eigen::VectorXd logits = net.actor().forward(as_vector(obs), cache);
    Eigen::VectorXd d = -softmax(logits);
    d(action) += 1.0;
    return net.actor().backward(cache, d);
}

Eigen::VectorXd value_gradient(const PolicyNetwork& net, std::span<const double> obs)
{
    Mlp::Cache cache;
    net.critic().forward(as_vector(obs), cache);
    return net.critic().backward(cache, Eigen::MatrixXd::Ones(1, 1));
}

namespace {

constexpr const char* kCheckpointFormat = "crop-policy-checkpoint";
constexpr int kCheckpointVersion = 1;

nlohmann::ordered_json layers_to_json(const Mlp& mlp, const std::string& prefix)
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
        const auto& layer = mlp.layers()[l];
        const RowMajorMatrix w = layer.weight;
        nlohmann::ordered_json j;
        j["name"] = prefix + "." + std::to_string(l);
        j["rows"] = w.rows();
        j["cols"] = w.cols();
        j["weight"] = std::vector<double>(w.data(), w.data() + w.size());
        j["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
        arr.push_back(j);
    }
    return arr;
}

Mlp layers_from_json(const nlohmann::json& arr, const std::string& prefix, std::size_t expected_outputs)
{
    if (!arr.is_array() || arr.empty()) {
        throw CheckpointError(prefix + ": missing or empty layer list");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < arr.size(); ++l) {
        const auto& j = arr[l];
        const std::string name = prefix + "." + std::to_string(l);
        const bool is_output = l + 1 == arr.size();
        const std::string label = is_output ? name + " (" + prefix + " output layer)" : name;
        try {
            const auto rows = j.at("rows").get<Eigen::Index>();
            const auto cols = j.at("cols").get<Eigen::Index>();
            const auto w = j.at("weight").get<std::vector<double>>();
            const auto b = j.at("bias").get<std::vector<double>>();
            if (rows <= 0 || cols <= 0) {
                throw CheckpointError(label + ": non-positive shape");
            }
            if (static_cast<Eigen::Index>(w.size()) != rows * cols) {
                throw CheckpointError(label + ": weight has " + std::to_string(w.size()) +
                                      " values, shape says " + std::to_string(rows * cols));
            }
            if (static_cast<Eigen::Index>(b.size()) != rows) {
                throw CheckpointError(label + ": bias has " + std::to_string(b.size()) +
                                      " values, expected " + std::to_string(rows));
            }
            if (!layers.empty() && cols != layers.back().weight.rows()) {
                throw CheckpointError(label + ": shape mismatch, takes " + std::to_string(cols) +
                                      " inputs but previous layer emits " +
                                      std::to_string(layers.back().weight.rows()));
            }
            if (is_output && static_cast<std::size_t>(rows) != expected_outputs) {
                throw CheckpointError(label + ": shape mismatch, " + std::to_string(cols) + "->" +
                                      std::to_string(rows) + " but expected " +
                                      std::to_string(expected_outputs) + " outputs");
            }
            DenseLayer layer{Eigen::Map<const RowMajorMatrix>(w.data(), rows, cols),
                             Eigen::Map<const Eigen::VectorXd>(b.data(), rows)};
            if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
                throw CheckpointError(label + ": non-finite parameter");
            }
            layers.push_back(std::move(layer));
        } catch (const nlohmann::json::exception& e) {
            throw CheckpointError(label + ": " + e.what());
        }
    }
    return Mlp(std::move(layers));
}

}  // namespace

std::string checkpoint_to_string(const PolicyNetwork& net)
{
    nlohmann::ordered_json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kCheckpointVersion;
    j["actor"] = layers_to_json(net.actor(), "actor");
    j["critic"] = layers_to_json(net.critic(), "critic");
    return j.dump() + "\n";
}

PolicyNetwork checkpoint_from_string(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != kCheckpointFormat) {
        throw CheckpointError("not a policy checkpoint");
    }
    if (j.value("version", 0) != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version");
    }
    if (!j.contains("actor") || !j.contains("critic")) {
        throw CheckpointError("checkpoint lacks actor or critic");
    }
    Mlp actor = layers_from_json(j["actor"], "actor", static_cast<std::size_t>(kNumActions));
    Mlp critic = layers_from_json(j["critic"], "critic", 1);
    if (actor.input_dim() != critic.input_dim()) {
        throw CheckpointError("actor.0 and critic.0 take different input widths");
    }
    return PolicyNetwork(std::move(actor), std::move(critic));
}

void save_checkpoint(const PolicyNetwork& net, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw CheckpointError("cannot write checkpoint " + path);
    }
    out << checkpoint_to_string(net);
    if (!out) {
        throw CheckpointError("failed writing checkpoint " + path);
    }
}

PolicyNetwork load_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_string(ss.str());
}

}  // namespace crop
