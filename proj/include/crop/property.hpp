#ifndef CROP_PROPERTY_HPP
#define CROP_PROPERTY_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crop/interval.hpp"

namespace crop {

enum class PropertyOrigin { online, hardcoded };

std::string to_string(PropertyOrigin origin);
PropertyOrigin parse_origin(const std::string& s);

// Input box paired with one action the policy must never select inside it.
struct SafetyProperty {
    IntervalBox domain;
    int forbidden_action = 0;
    PropertyOrigin origin = PropertyOrigin::online;
    int merge_count = 1;

    // Throws std::invalid_argument if the action is out of range or merge_count < 1.
    void validate() const;

    friend bool operator==(const SafetyProperty&, const SafetyProperty&) = default;
};

struct CropConfig {
    double epsilon = 0.05;
    double beta = 0.1;
    // Unsafe-range marker per observation dimension; empty entries never
    // participate in the not-similar test.
    std::vector<std::optional<Interval>> psi;
    IntervalBox obs_domain;

    // Navigation defaults: psi = [0, 0.09] on the 21 lidar beams, none on
    // the goal dimensions; lidar in [0, 1], goal dimensions in [-1, 1].
    static CropConfig navigation_defaults();

    std::size_t dims() const noexcept { return obs_domain.size(); }
    void validate() const;
};

// Box [max(s_i - eps, floor_i), s_i] per dimension, forbidding `prev_action`.
SafetyProperty generate_property(std::span<const double> prev_state, int prev_action,
                                 const CropConfig& cfg);

// True iff some psi-gated dimension has one interval inside psi and a
// Moore-difference mignitude above beta. Properties must share the action.
bool is_not_similar(const SafetyProperty& p, const SafetyProperty& q, const CropConfig& cfg);

// Per-dimension hull of two similar properties with the same action.
SafetyProperty refine(const SafetyProperty& p, const SafetyProperty& q, const CropConfig& cfg);

// Episode-scoped collection of online properties.
class PropertyBuffer {
public:
    const std::vector<SafetyProperty>& properties() const noexcept { return properties_; }
    std::size_t size() const noexcept { return properties_.size(); }
    bool empty() const noexcept { return properties_.empty(); }
    std::int64_t episode_id() const noexcept { return episode_id_; }

    // Stored properties whose domain contains the state and whose forbidden
    // action equals the action, in insertion order.
    std::vector<const SafetyProperty*> find_matching(std::span<const double> prev_state,
                                                     int prev_action) const;

    // Generates a property from the unsafe transition and either appends it
    // or merges it with every similar same-action property. Returns the
    // index of the inserted or merged property.
    std::size_t record_unsafe(std::span<const double> prev_state, int prev_action,
                              const CropConfig& cfg);

    void reset();

private:
    std::vector<SafetyProperty> properties_;
    std::int64_t episode_id_ = 0;
};

// One JSON object per line:
// {episode, forbidden_action, merge_count, origin, domain: [[lo, hi], ...]}
std::string to_jsonl_line(const SafetyProperty& p, std::int64_t episode);
SafetyProperty parse_property_line(const std::string& line);
void write_properties_jsonl(std::ostream& os, std::span<const SafetyProperty> props,
                            std::int64_t episode);
std::vector<SafetyProperty> read_properties_jsonl(std::istream& is);
std::vector<SafetyProperty> load_properties_jsonl(const std::string& path);

}  // namespace crop

#endif  // CROP_PROPERTY_HPP
