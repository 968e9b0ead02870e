#ifndef CROP_VIOLATION_HPP
#define CROP_VIOLATION_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "crop/policy_net.hpp"
#include "crop/property.hpp"

namespace crop {

struct PropertyViolation {
    std::int64_t samples = 0;
    std::int64_t violating = 0;
    double ratio = 0.0;
};

struct ViolationReport {
    std::vector<PropertyViolation> per_property;
    double aggregate_ratio = 0.0;  // pooled: sum violating / sum samples
    std::int64_t total_samples = 0;
};

inline constexpr int kDefaultCloudSize = 10000;

// Samples `m` points uniformly from one property's box and counts the ones
// where the deterministic policy picks the forbidden action.
PropertyViolation estimate_property_violation(const PolicyNetwork& net, const SafetyProperty& p,
                                              int m, std::uint64_t seed);

// Property i is sampled with seed mix_seed(seed, i).
ViolationReport estimate_violation(const PolicyNetwork& net, std::span<const SafetyProperty> properties,
                                   int m, std::uint64_t seed);

// Pools per-property counts into a report.
ViolationReport pool(std::vector<PropertyViolation> per_property);

// property_id,samples,violating,ratio rows, then an "ALL" aggregate row.
void write_violation_csv(std::ostream& os, const ViolationReport& report);

}  // namespace crop

#endif  // CROP_VIOLATION_HPP
