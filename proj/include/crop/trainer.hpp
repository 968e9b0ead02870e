#ifndef CROP_TRAINER_HPP
#define CROP_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "crop/nav_sim.hpp"
#include "crop/policy_net.hpp"
#include "crop/ppo.hpp"
#include "crop/property.hpp"

namespace crop {

enum class Algo { ppo_cost, ppo_violation, ppo_crop, lppo };

std::string to_string(Algo algo);
Algo parse_algo(const std::string& name);

struct Transition {
    std::vector<double> obs;
    int action = 0;
    double log_prob = 0.0;
    double reward = 0.0;   // raw R(s, a)
    int cost = 0;
    double penalty = 0.0;  // Z applied on this step
    double value = 0.0;
    bool done = false;
    bool terminal = false;
    double bootstrap_value = 0.0;

    double shaped() const noexcept { return reward - penalty; }
};

struct TrainConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    PpoConfig ppo;
    int batch_size = 2048;
    double penalty_weight = 1.0;   // w_Z
    double cost_threshold = 5.0;   // d, Lagrangian only
    double multiplier_lr = 0.05;   // Lagrangian only
    double initial_multiplier = 0.0;
    std::int64_t total_steps = 300000;
    std::uint64_t seed = 0;
    int cloud_size = 10000;        // m
    std::vector<int> hidden = {64, 64};

    void validate() const;
};

struct EpisodeMetrics {
    std::int64_t step = 0;  // environment steps taken when the episode ended
    std::int64_t episode = 0;
    double ret = 0.0;        // raw reward sum
    int success = 0;
    int episode_cost = 0;
    double episode_violation = 0.0;  // sum of the violation penalties' ratios over unsafe steps
    std::size_t n_properties = 0;
    double multiplier = 0.0;
};

// Z for one step. Violation variants only pay when the step was unsafe.
double shaped_reward(const Transition& t, Algo algo, double penalty_weight, double violation_at_t);

// Projected ascent: max(0, multiplier + lr * (mean_episode_cost - d)).
double lagrangian_update(double multiplier, double mean_episode_cost, double threshold, double lr);

// (r - lambda * cost) / (1 + lambda).
double lagrangian_reward(double reward, int cost, double multiplier);

// Directional properties over the 23-dim navigation observation: five
// frontal/lateral ones and two covering the back for in-place rotations.
std::vector<SafetyProperty> hardcoded_property_set();
// Human-readable names matching hardcoded_property_set() order.
std::vector<std::string> hardcoded_property_names();

struct TrainCallbacks {
    std::function<void(const EpisodeMetrics&)> on_episode;
    // Buffer contents right before the per-episode reset (CROP only).
    std::function<void(std::int64_t episode, std::span<const SafetyProperty>)> on_episode_properties;
    std::function<void(std::int64_t step, const PpoDiagnostics&)> on_update;
};

struct TrainResult {
    PolicyNetwork net;
    std::vector<EpisodeMetrics> episodes;
    double multiplier = 0.0;
};

TrainResult train(Algo algo, EnvKind env_kind, const TrainConfig& cfg, const CropConfig& crop_cfg,
                  const EnvConfig& env_cfg, const TrainCallbacks& callbacks = {});

// Same, on an explicit environment (e.g. a loaded scenario).
TrainResult train(Algo algo, NavEnv env, const TrainConfig& cfg, const CropConfig& crop_cfg,
                  const TrainCallbacks& callbacks = {});

// step,episode,return,success,episode_cost,episode_violation,n_properties,multiplier
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const EpisodeMetrics& m);

struct EvalSummary {
    int episodes = 0;
    double mean_success = 0.0;  // fraction of episodes reaching the goal
    double mean_cost = 0.0;
    double mean_violation = 0.0;  // per-episode sum over unsafe steps
    double hardcoded_ratio = 0.0;  // aggregate violation ratio of the policy on the hard-coded set
    std::vector<EpisodeMetrics> rollouts;
};

// Deterministic-policy rollouts; violation is measured on the hard-coded set
// at every unsafe step.
EvalSummary evaluate_policy(const PolicyNetwork& net, NavEnv& env, int episodes, int cloud_size,
                            std::uint64_t seed);

}  // namespace crop

#endif  // CROP_TRAINER_HPP
