#ifndef CROP_CONFIG_HPP
#define CROP_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crop/nav_sim.hpp"
#include "crop/property.hpp"
#include "crop/trainer.hpp"

namespace crop {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Everything one `train` invocation needs; see docs/config.md for the keys.
struct ExperimentConfig {
    std::optional<Algo> algo;
    EnvKind env = EnvKind::fixed;
    std::vector<std::uint64_t> seeds = {0};
    TrainConfig train;
    CropConfig crop = CropConfig::navigation_defaults();
    EnvConfig env_cfg;
    std::string scenario_path;  // empty: generate the layout from env + seed
    std::string out_dir;
    int eval_episodes = 10;

    // Throws ConfigError describing the first invalid field.
    void validate() const;
};

// Parses `section.key = value` lines ('#' comments, blank lines allowed).
// Duplicate keys are rejected.
std::map<std::string, std::string> parse_key_values(std::istream& is);

// Applies overrides; unknown keys and malformed values throw ConfigError.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv);

ExperimentConfig load_experiment_config(const std::string& path);

// Resolved snapshot with every key, doubles printed round-trip exact.
// Reading it back yields an identical configuration for the given seed.
void write_experiment_config(std::ostream& os, const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace crop

#endif  // CROP_CONFIG_HPP
