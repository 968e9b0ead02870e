#include "crop/violation.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace crop {

namespace {

constexpr int kChunk = 2048;

}  // namespace

PropertyViolation estimate_property_violation(const PolicyNetwork& net, const SafetyProperty& p,
                                              int m, std::uint64_t seed)
{
    if (m < 1) {
        throw std::invalid_argument("violation cloud size must be >= 1");
    }
    const auto dims = static_cast<Eigen::Index>(p.domain.size());
    if (static_cast<std::size_t>(dims) != net.input_dim()) {
        throw std::invalid_argument("property dimension does not match the network input");
    }
    if (p.forbidden_action < 0 || static_cast<std::size_t>(p.forbidden_action) >= net.num_actions()) {
        throw std::invalid_argument("forbidden action outside the network's action range");
    }

    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd lo(dims);
    Eigen::VectorXd width(dims);
    for (Eigen::Index d = 0; d < dims; ++d) {
        lo(d) = p.domain[static_cast<std::size_t>(d)].lo();
        width(d) = p.domain[static_cast<std::size_t>(d)].width();
    }

    PropertyViolation out;
    Eigen::MatrixXd x;
    for (int start = 0; start < m; start += kChunk) {
        const int n = std::min(kChunk, m - start);
        x.resize(dims, n);
        for (int s = 0; s < n; ++s) {
            for (Eigen::Index d = 0; d < dims; ++d) {
                // Degenerate axes collapse to their single value.
                x(d, s) = width(d) > 0.0 ? lo(d) + width(d) * unit(rng) : lo(d);
            }
        }
        const Eigen::MatrixXd logits = net.actor().forward(x);
        for (int s = 0; s < n; ++s) {
            if (argmax(logits.col(s)) == p.forbidden_action) {
                ++out.violating;
            }
        }
    }
    out.samples = m;
    out.ratio = static_cast<double>(out.violating) / static_cast<double>(out.samples);
    return out;
}

ViolationReport pool(std::vector<PropertyViolation> per_property)
{
    ViolationReport report;
    std::int64_t violating = 0;
    for (const auto& pv : per_property) {
        report.total_samples += pv.samples;
        violating += pv.violating;
    }
    report.aggregate_ratio = report.total_samples > 0
                                 ? static_cast<double>(violating) / static_cast<double>(report.total_samples)
                                 : 0.0;
    report.per_property = std::move(per_property);
    return report;
}

ViolationReport estimate_violation(const PolicyNetwork& net, std::span<const SafetyProperty> properties,
                                   int m, std::uint64_t seed)
{
    if (m < 1) {
        throw std::invalid_argument("violation cloud size must be >= 1");
    }
    std::vector<PropertyViolation> per;
    per.reserve(properties.size());
    for (std::size_t i = 0; i < properties.size(); ++i) {
        per.push_back(estimate_property_violation(net, properties[i], m, mix_seed(seed, i)));
    }
    return pool(std::move(per));
}

void write_violation_csv(std::ostream& os, const ViolationReport& report)
{
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    os << "property_id,samples,violating,ratio\n";
    std::int64_t violating = 0;
    for (std::size_t i = 0; i < report.per_property.size(); ++i) {
        const auto& pv = report.per_property[i];
        violating += pv.violating;
        os << i << ',' << pv.samples << ',' << pv.violating << ',' << pv.ratio << '\n';
    }
    os << "ALL," << report.total_samples << ',' << violating << ',' << report.aggregate_ratio << '\n';
    os.precision(old_precision);
}

}  // namespace crop
