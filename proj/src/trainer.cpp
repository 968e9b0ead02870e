#include "crop/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "crop/constants.hpp"
#include "crop/violation.hpp"

namespace crop {

std::string to_string(Algo algo)
{
    switch (algo) {
    case Algo::ppo_cost: return "ppo_cost";
    case Algo::ppo_violation: return "ppo_violation";
    case Algo::ppo_crop: return "ppo_crop";
    case Algo::lppo: return "lppo";
    }
    return "?";
}

Algo parse_algo(const std::string& name)
{
    if (name == "ppo_cost") return Algo::ppo_cost;
    if (name == "ppo_violation") return Algo::ppo_violation;
    if (name == "ppo_crop") return Algo::ppo_crop;
    if (name == "lppo") return Algo::lppo;
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

void TrainConfig::validate() const
{
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("train.gamma must be in (0, 1]");
    }
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
        throw std::invalid_argument("train.gae_lambda must be in [0, 1]");
    }
    if (!(ppo.clip_ratio > 0.0)) {
        throw std::invalid_argument("train.clip_ratio must be > 0");
    }
    if (!(ppo.actor_lr > 0.0) || !(ppo.critic_lr > 0.0)) {
        throw std::invalid_argument("learning rates must be > 0");
    }
    if (ppo.epochs < 1 || ppo.minibatch < 1 || batch_size < 1) {
        throw std::invalid_argument("epochs, minibatch and batch_size must be >= 1");
    }
    if (ppo.entropy_coef < 0.0 || ppo.max_grad_norm < 0.0) {
        throw std::invalid_argument("entropy_coef and max_grad_norm must be >= 0");
    }
    if (penalty_weight < 0.0) {
        throw std::invalid_argument("train.penalty_weight must be >= 0");
    }
    if (!(cost_threshold >= 0.0)) {
        throw std::invalid_argument("train.cost_threshold must be >= 0");
    }
    if (multiplier_lr < 0.0 || initial_multiplier < 0.0) {
        throw std::invalid_argument("multiplier settings must be >= 0");
    }
    if (total_steps < 1) {
        throw std::invalid_argument("train.total_steps must be >= 1");
    }
    if (cloud_size < 1) {
        throw std::invalid_argument("train.cloud_size must be >= 1");
    }
    if (hidden.empty() || std::any_of(hidden.begin(), hidden.end(), [](int h) { return h < 1; })) {
        throw std::invalid_argument("train.hidden must list positive layer widths");
    }
}

double shaped_reward(const Transition& t, Algo algo, double penalty_weight, double violation_at_t)
{
    switch (algo) {
    case Algo::ppo_cost:
        return t.reward - penalty_weight * static_cast<double>(t.cost);
    case Algo::ppo_violation:
    case Algo::ppo_crop:
        return t.cost > 0 ? t.reward - penalty_weight * violation_at_t : t.reward;
    case Algo::lppo:
        return t.reward;
    }
    return t.reward;
}

double lagrangian_update(double multiplier, double mean_episode_cost, double threshold, double lr)
{
    if (multiplier < 0.0) {
        throw std::invalid_argument("Lagrange multiplier must be >= 0");
    }
    return std::max(0.0, multiplier + lr * (mean_episode_cost - threshold));
}

double lagrangian_reward(double reward, int cost, double multiplier)
{
    return (reward - multiplier * static_cast<double>(cost)) / (1.0 + multiplier);
}

namespace {

// Per-property violation counts for the current policy parameters. The
// policy only changes at PPO updates, so a property's sampled ratio can be
// reused until then.
class ViolationCache {
public:
    ViolationCache(int cloud_size, std::uint64_t seed) : cloud_size_(cloud_size), seed_(seed) {}

    void invalidate() { entries_.clear(); }

    double aggregate(const PolicyNetwork& net, std::span<const SafetyProperty> props)
    {
        std::vector<PropertyViolation> per;
        per.reserve(props.size());
        for (const auto& p : props) {
            std::vector<double> key;
            key.reserve(2 * p.domain.size() + 1);
            key.push_back(static_cast<double>(p.forbidden_action));
            for (const auto& iv : p.domain) {
                key.push_back(iv.lo());
                key.push_back(iv.hi());
            }
            auto it = entries_.find(key);
            if (it == entries_.end()) {
                const auto pv = estimate_property_violation(net, p, cloud_size_, mix_seed(seed_, counter_++));
                it = entries_.emplace(std::move(key), pv).first;
            }
            per.push_back(it->second);
        }
        return pool(std::move(per)).aggregate_ratio;
    }

private:
    int cloud_size_;
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    std::map<std::vector<double>, PropertyViolation> entries_;
};

}  // namespace

TrainResult train(Algo algo, EnvKind env_kind, const TrainConfig& cfg, const CropConfig& crop_cfg,
                  const EnvConfig& env_cfg, const TrainCallbacks& callbacks)
{
    return train(algo, make_env(env_kind, cfg.seed, env_cfg), cfg, crop_cfg, callbacks);
}

TrainResult train(Algo algo, NavEnv env, const TrainConfig& cfg, const CropConfig& crop_cfg,
                  const TrainCallbacks& callbacks)
{
    cfg.validate();
    if (algo == Algo::ppo_crop) {
        crop_cfg.validate();
        if (crop_cfg.dims() != kObsDim) {
            throw std::invalid_argument("CROP observation domain must have 23 dimensions");
        }
    }

    const NetworkShape shape{static_cast<int>(kObsDim), cfg.hidden, kNumActions};
    TrainResult result;
    result.net = PolicyNetwork::make(shape, mix_seed(cfg.seed, 10));
    PolicyNetwork& net = result.net;
    PpoOptimizer optimizer(net, cfg.ppo);
    Rng act_rng(mix_seed(cfg.seed, 11));
    Rng update_rng(mix_seed(cfg.seed, 12));
    ViolationCache violations(cfg.cloud_size, mix_seed(cfg.seed, 13));

    const std::vector<SafetyProperty> static_set = hardcoded_property_set();
    PropertyBuffer buffer;
    double multiplier = algo == Algo::lppo ? cfg.initial_multiplier : 0.0;

    std::vector<Transition> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    std::vector<int> batch_episode_costs;

    Observation obs = env.reset();
    EpisodeMetrics episode;

    for (std::int64_t step = 1; step <= cfg.total_steps; ++step) {
        const ActionSample sample = act_stochastic(net, obs, act_rng);
        Transition t;
        t.obs.assign(obs.begin(), obs.end());
        t.action = sample.action;
        t.log_prob = sample.log_prob;
        t.value = net.value(obs);

        const StepResult res = env.step(sample.action);
        t.reward = res.reward;
        t.cost = res.cost;
        t.done = res.done;
        t.terminal = res.info.goal_reached;
        if (res.info.truncated) {
            t.bootstrap_value = net.value(res.observation);
        }

        double violation = 0.0;
        if (res.cost > 0) {
            if (algo == Algo::ppo_crop) {
                buffer.record_unsafe(obs, sample.action, crop_cfg);
                violation = violations.aggregate(net, buffer.properties());
            } else if (algo == Algo::ppo_violation) {
                violation = violations.aggregate(net, static_set);
            }
        }
        t.penalty = t.reward - shaped_reward(t, algo, cfg.penalty_weight, violation);

        episode.ret += res.reward;
        episode.episode_cost += res.cost;
        episode.episode_violation += violation;
        batch.push_back(std::move(t));

        if (res.done) {
            episode.step = step;
            episode.success = res.info.goal_reached ? 1 : 0;
            episode.multiplier = multiplier;
            if (algo == Algo::ppo_crop) {
                episode.n_properties = buffer.size();
                if (callbacks.on_episode_properties) {
                    callbacks.on_episode_properties(episode.episode, buffer.properties());
                }
                buffer.reset();
            } else if (algo == Algo::ppo_violation) {
                episode.n_properties = static_set.size();
            }
            if (callbacks.on_episode) {
                callbacks.on_episode(episode);
            }
            result.episodes.push_back(episode);
            batch_episode_costs.push_back(episode.episode_cost);
            const std::int64_t next_id = episode.episode + 1;
            episode = EpisodeMetrics{};
            episode.episode = next_id;
            obs = env.reset();
        } else {
            obs = res.observation;
        }

        if (static_cast<int>(batch.size()) == cfg.batch_size || step == cfg.total_steps) {
            if (algo == Algo::lppo && !batch_episode_costs.empty()) {
                double mean_cost = 0.0;
                for (int c : batch_episode_costs) {
                    mean_cost += c;
                }
                mean_cost /= static_cast<double>(batch_episode_costs.size());
                multiplier = lagrangian_update(multiplier, mean_cost, cfg.cost_threshold, cfg.multiplier_lr);
            }
            batch_episode_costs.clear();

            std::vector<GaeStep> gae_steps;
            gae_steps.reserve(batch.size());
            for (const auto& tr : batch) {
                const double r = algo == Algo::lppo ? lagrangian_reward(tr.reward, tr.cost, multiplier) : tr.shaped();
                gae_steps.push_back({r, tr.value, tr.done, tr.terminal, tr.bootstrap_value});
            }
            const double last_value = batch.back().done ? 0.0 : net.value(obs);
            GaeResult gae = compute_gae(gae_steps, last_value, cfg.gamma, cfg.gae_lambda);
            normalize_advantages(gae.advantages);

            PpoBatch pb;
            const auto n = static_cast<Eigen::Index>(batch.size());
            pb.obs.resize(static_cast<Eigen::Index>(kObsDim), n);
            pb.actions.resize(batch.size());
            pb.old_log_probs.resize(n);
            pb.advantages.resize(n);
            pb.returns.resize(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& tr = batch[static_cast<std::size_t>(i)];
                pb.obs.col(i) = Eigen::Map<const Eigen::VectorXd>(tr.obs.data(), static_cast<Eigen::Index>(tr.obs.size()));
                pb.actions[static_cast<std::size_t>(i)] = tr.action;
                pb.old_log_probs(i) = tr.log_prob;
                pb.advantages(i) = gae.advantages[static_cast<std::size_t>(i)];
                pb.returns(i) = gae.returns[static_cast<std::size_t>(i)];
            }
            const PpoDiagnostics diag = optimizer.update(net, pb, update_rng);
            violations.invalidate();
            if (callbacks.on_update) {
                callbacks.on_update(step, diag);
            }
            batch.clear();
        }
    }
    result.multiplier = multiplier;
    return result;
}

void write_metrics_header(std::ostream& os)
{
    os << "step,episode,return,success,episode_cost,episode_violation,n_properties,multiplier\n";
}

void write_metrics_row(std::ostream& os, const EpisodeMetrics& m)
{
    const auto old = os.precision(12);
    os << m.step << ',' << m.episode << ',' << m.ret << ',' << m.success << ',' << m.episode_cost << ','
       << m.episode_violation << ',' << m.n_properties << ',' << m.multiplier << '\n';
    os.precision(old);
}

EvalSummary evaluate_policy(const PolicyNetwork& net, NavEnv& env, int episodes, int cloud_size,
                            std::uint64_t seed)
{
    if (episodes < 1) {
        throw std::invalid_argument("evaluation needs at least one episode");
    }
    const auto props = hardcoded_property_set();
    // The policy is frozen, so one estimate serves every unsafe step.
    const double ratio = estimate_violation(net, props, cloud_size, mix_seed(seed, 20)).aggregate_ratio;

    EvalSummary summary;
    summary.episodes = episodes;
    summary.hardcoded_ratio = ratio;
    for (int e = 0; e < episodes; ++e) {
        Observation obs = env.reset();
        EpisodeMetrics m;
        m.episode = e;
        m.n_properties = props.size();
        for (;;) {
            const StepResult res = env.step(act_deterministic(net, obs));
            ++m.step;
            m.ret += res.reward;
            m.episode_cost += res.cost;
            if (res.cost > 0) {
                m.episode_violation += ratio;
            }
            obs = res.observation;
            if (res.done) {
                m.success = res.info.goal_reached ? 1 : 0;
                break;
            }
        }
        summary.mean_success += m.success;
        summary.mean_cost += m.episode_cost;
        summary.mean_violation += m.episode_violation;
        summary.rollouts.push_back(m);
    }
    summary.mean_success /= episodes;
    summary.mean_cost /= episodes;
    summary.mean_violation /= episodes;
    return summary;
}

}  // namespace crop
