#include "crop/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "crop/constants.hpp"

namespace crop {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v)
{
    Int out{};
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
    return out;
}

std::string fmt(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(v);
    while (std::getline(ss, item, ',')) {
        out.push_back(trim(item));
    }
    return out;
}

std::optional<Interval> parse_psi(const std::string& key, const std::string& v)
{
    if (v == "none") {
        return std::nullopt;
    }
    std::string s = v;
    for (char& c : s) {
        if (c == ',') {
            c = ' ';
        }
    }
    std::istringstream ss(s);
    std::string a;
    std::string b;
    std::string extra;
    if (!(ss >> a >> b) || (ss >> extra)) {
        throw ConfigError(key + ": expected 'lo hi' or 'none', got '" + v + "'");
    }
    try {
        return Interval(to_double(key, a), to_double(key, b));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

std::string fmt_psi(const std::optional<Interval>& psi)
{
    return psi ? fmt(psi->lo()) + " " + fmt(psi->hi()) : "none";
}

struct Setting {
    const char* key;
    std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define CROP_DOUBLE(KEY, FIELD)                                                                  \
    Setting{KEY, [](ExperimentConfig& c, const std::string& k, const std::string& v) {            \
                c.FIELD = to_double(k, v);                                                        \
            },                                                                                    \
            [](const ExperimentConfig& c) { return fmt(c.FIELD); }}

#define CROP_INT(KEY, FIELD, TYPE)                                                               \
    Setting{KEY, [](ExperimentConfig& c, const std::string& k, const std::string& v) {            \
                c.FIELD = to_int<TYPE>(k, v);                                                     \
            },                                                                                    \
            [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }}

const std::vector<Setting>& settings()
{
    static const std::vector<Setting> table = {
        Setting{"run.algo",
                [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                    try {
                        c.algo = parse_algo(v);
                    } catch (const std::invalid_argument& e) {
                        throw ConfigError(k + ": " + e.what());
                    }
                },
                [](const ExperimentConfig& c) { return c.algo ? to_string(*c.algo) : std::string("unset"); }},
        Setting{"run.env",
                [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                    try {
                        c.env = parse_env_kind(v);
                    } catch (const std::invalid_argument& e) {
                        throw ConfigError(k + ": " + e.what());
                    }
                },
                [](const ExperimentConfig& c) { return to_string(c.env); }},
        Setting{"run.seed",
                [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                    c.seeds = {to_int<std::uint64_t>(k, v)};
                },
                [](const ExperimentConfig& c) { return std::to_string(c.seeds.empty() ? 0 : c.seeds.front()); }},
        Setting{"run.seeds",
                [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                    c.seeds.clear();
                    for (const auto& s : split_list(v)) {
                        c.seeds.push_back(to_int<std::uint64_t>(k, s));
                    }
                },
                nullptr},
        Setting{"run.out", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
                nullptr},
        Setting{"run.scenario",
                [](ExperimentConfig& c, const std::string&, const std::string& v) {
                    c.scenario_path = v == "none" ? std::string() : v;
                },
                [](const ExperimentConfig& c) { return c.scenario_path.empty() ? std::string("none") : c.scenario_path; }},
        CROP_INT("run.eval_episodes", eval_episodes, int),

        CROP_DOUBLE("train.gamma", train.gamma),
        CROP_DOUBLE("train.gae_lambda", train.gae_lambda),
        CROP_DOUBLE("train.clip_ratio", train.ppo.clip_ratio),
        CROP_DOUBLE("train.actor_lr", train.ppo.actor_lr),
        CROP_DOUBLE("train.critic_lr", train.ppo.critic_lr),
        CROP_INT("train.epochs", train.ppo.epochs, int),
        CROP_INT("train.batch_size", train.batch_size, int),
        CROP_INT("train.minibatch", train.ppo.minibatch, int),
        CROP_DOUBLE("train.entropy_coef", train.ppo.entropy_coef),
        CROP_DOUBLE("train.max_grad_norm", train.ppo.max_grad_norm),
        CROP_DOUBLE("train.penalty_weight", train.penalty_weight),
        CROP_DOUBLE("train.cost_threshold", train.cost_threshold),
        CROP_DOUBLE("train.multiplier_lr", train.multiplier_lr),
        CROP_DOUBLE("train.initial_multiplier", train.initial_multiplier),
        CROP_INT("train.total_steps", train.total_steps, std::int64_t),
        CROP_INT("train.cloud_size", train.cloud_size, int),
        Setting{"train.hidden",
                [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                    c.train.hidden.clear();
                    for (const auto& s : split_list(v)) {
                        c.train.hidden.push_back(to_int<int>(k, s));
                    }
                },
                [](const ExperimentConfig& c) {
                    std::string s;
                    for (std::size_t i = 0; i < c.train.hidden.size(); ++i) {
                        s += (i ? "," : "") + std::to_string(c.train.hidden[i]);
                    }
                    return s;
                }},

        CROP_DOUBLE("crop.epsilon", crop.epsilon),
        CROP_DOUBLE("crop.beta", crop.beta),
        Setting{"crop.psi_lidar",
                [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                    const auto psi = parse_psi(k, v);
                    for (std::size_t i = 0; i < kNumLidar; ++i) {
                        c.crop.psi[i] = psi;
                    }
                },
                [](const ExperimentConfig& c) { return fmt_psi(c.crop.psi[0]); }},
        Setting{"crop.psi_goal",
                [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                    const auto psi = parse_psi(k, v);
                    c.crop.psi[kGoalDistanceIndex] = psi;
                    c.crop.psi[kGoalHeadingIndex] = psi;
                },
                [](const ExperimentConfig& c) { return fmt_psi(c.crop.psi[kGoalDistanceIndex]); }},

        CROP_DOUBLE("env.arena_size", env_cfg.arena_size),
        CROP_DOUBLE("env.agent_radius", env_cfg.agent_radius),
        CROP_DOUBLE("env.v_max", env_cfg.v_max),
        CROP_DOUBLE("env.w_max", env_cfg.w_max),
        CROP_DOUBLE("env.dt", env_cfg.dt),
        CROP_DOUBLE("env.lidar_range", env_cfg.lidar_range),
        CROP_DOUBLE("env.goal_threshold", env_cfg.goal_threshold),
        CROP_INT("env.horizon", env_cfg.horizon, int),
        CROP_DOUBLE("env.reward_scale", env_cfg.reward_scale),
        CROP_DOUBLE("env.goal_bonus", env_cfg.goal_bonus),
        CROP_INT("env.fixed_obstacles", env_cfg.fixed_obstacles, int),
        CROP_INT("env.dynamic_obstacles", env_cfg.dynamic_obstacles, int),
        CROP_DOUBLE("env.dynamic_speed", env_cfg.dynamic_speed),
        CROP_DOUBLE("env.dynamic_radius", env_cfg.dynamic_radius),
        CROP_DOUBLE("env.min_goal_distance", env_cfg.min_goal_distance),
    };
    return table;
}

#undef CROP_DOUBLE
#undef CROP_INT

}  // namespace

void ExperimentConfig::validate() const
{
    try {
        train.validate();
        crop.validate();
        env_cfg.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (seeds.empty()) {
        throw ConfigError("run.seeds must list at least one seed");
    }
    if (eval_episodes < 1) {
        throw ConfigError("run.eval_episodes must be >= 1");
    }
}

std::map<std::string, std::string> parse_key_values(std::istream& is)
{
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        }
        if (!kv.emplace(key, value).second) {
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
    }
    return kv;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value)
{
    for (const auto& s : settings()) {
        if (key == s.key) {
            s.set(cfg, key, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv)
{
    for (const auto& [k, v] : kv) {
        apply_setting(cfg, k, v);
    }
}

ExperimentConfig load_experiment_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    ExperimentConfig cfg;
    apply_settings(cfg, parse_key_values(in));
    return cfg;
}

void write_experiment_config(std::ostream& os, const ExperimentConfig& cfg, std::uint64_t seed)
{
    ExperimentConfig one = cfg;
    one.seeds = {seed};
    os << "# resolved crop run configuration\n";
    for (const auto& s : settings()) {
        if (!s.get) {
            continue;
        }
        if (std::string(s.key) == "run.algo" && !one.algo) {
            continue;
        }
        os << s.key << " = " << s.get(one) << '\n';
    }
}

}  // namespace crop
