#ifndef CROP_VERIFIER_HPP
#define CROP_VERIFIER_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "crop/interval.hpp"
#include "crop/policy_net.hpp"
#include "crop/property.hpp"

namespace crop {

struct OutputBounds {
    std::vector<Interval> logits;
};

enum class BoxVerdict { safe, unsafe, unknown };

// Interval bound propagation through the actor: affine layers split by
// weight sign, ReLU clamps both bounds at zero.
OutputBounds ibp_bounds(const PolicyNetwork& net, const IntervalBox& box);

// safe: some other logit provably beats the forbidden one.
// unsafe: the forbidden logit provably beats every other one.
// Exact ties are left unknown.
BoxVerdict classify_box(const OutputBounds& bounds, int forbidden_action);

struct VerifierOptions {
    double min_width = 1.0 / 64.0;  // on normalized [0, 1] axes
    std::int64_t budget = 1000000;  // IBP evaluations
};

struct CertifiedViolation {
    SafetyProperty property;
    double lower = 0.0;
    double upper = 1.0;
    double unknown_fraction = 1.0;
    std::int64_t boxes_explored = 0;
};

// Bisects the property domain along its widest normalized axis until every
// leaf is decided, narrower than min_width, or the budget runs out. Volume
// fractions are exact dyadic numbers so safe + unsafe + unknown = 1.
CertifiedViolation verify_property(const PolicyNetwork& net, const SafetyProperty& p,
                                   const VerifierOptions& opts = {});

struct VerificationRow {
    std::string property_id;
    CertifiedViolation result;
    double seconds = 0.0;
};

// property_id,lower,upper,unknown,boxes_explored,seconds,midpoint rows
// followed by a SUM row.
void write_verification_csv(std::ostream& os, const std::vector<VerificationRow>& rows);

}  // namespace crop

#endif  // CROP_VERIFIER_HPP
