#include "crop/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace crop {

namespace {

struct SignSplitLayer {
    Eigen::MatrixXd pos;
    Eigen::MatrixXd neg;
    Eigen::VectorXd bias;
};

std::vector<SignSplitLayer> split_layers(const Mlp& mlp)
{
    std::vector<SignSplitLayer> out;
    out.reserve(mlp.layers().size());
    for (const auto& layer : mlp.layers()) {
        out.push_back({layer.weight.cwiseMax(0.0), layer.weight.cwiseMin(0.0), layer.bias});
    }
    return out;
}

void propagate(const std::vector<SignSplitLayer>& layers, Eigen::VectorXd& lo, Eigen::VectorXd& hi)
{
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& L = layers[l];
        Eigen::VectorXd new_lo = L.pos * lo + L.neg * hi + L.bias;
        Eigen::VectorXd new_hi = L.pos * hi + L.neg * lo + L.bias;
        if (l + 1 < layers.size()) {
            new_lo = new_lo.cwiseMax(0.0);
            new_hi = new_hi.cwiseMax(0.0);
        }
        lo = std::move(new_lo);
        hi = std::move(new_hi);
    }
}

OutputBounds to_bounds(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
    OutputBounds out;
    out.logits.reserve(static_cast<std::size_t>(lo.size()));
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        // Rounding can leave lo a hair above hi on zero-width paths.
        out.logits.emplace_back(std::min(lo(i), hi(i)), std::max(lo(i), hi(i)));
    }
    return out;
}

// Exact sum of dyadic fractions 2^-depth, kept as per-depth counts.
class DyadicSum {
public:
    void add(std::size_t depth)
    {
        if (depth >= counts_.size()) {
            counts_.resize(depth + 1, 0);
        }
        ++counts_[depth];
    }

    void add(const DyadicSum& other)
    {
        if (other.counts_.size() > counts_.size()) {
            counts_.resize(other.counts_.size(), 0);
        }
        for (std::size_t d = 0; d < other.counts_.size(); ++d) {
            counts_[d] += other.counts_[d];
        }
    }

    double value() const
    {
        // Carry into shallower depths first so each depth holds one bit,
        // then sum the bits from smallest to largest.
        std::vector<std::uint64_t> c = counts_;
        for (std::size_t d = c.size(); d-- > 1;) {
            c[d - 1] += c[d] / 2;
            c[d] %= 2;
        }
        double v = 0.0;
        for (std::size_t d = c.size(); d-- > 0;) {
            v += static_cast<double>(c[d]) * std::ldexp(1.0, -static_cast<int>(d));
        }
        return v;
    }

private:
    std::vector<std::uint64_t> counts_;
};

struct PendingBox {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    std::size_t depth = 0;
};

}  // namespace

OutputBounds ibp_bounds(const PolicyNetwork& net, const IntervalBox& box)
{
    if (box.size() != net.input_dim()) {
        throw std::invalid_argument("ibp_bounds: box has " + std::to_string(box.size()) +
                                    " dims, network expects " + std::to_string(net.input_dim()));
    }
    const auto n = static_cast<Eigen::Index>(box.size());
    Eigen::VectorXd lo(n);
    Eigen::VectorXd hi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        lo(i) = box[static_cast<std::size_t>(i)].lo();
        hi(i) = box[static_cast<std::size_t>(i)].hi();
    }
    propagate(split_layers(net.actor()), lo, hi);
    return to_bounds(lo, hi);
}

BoxVerdict classify_box(const OutputBounds& bounds, int forbidden_action)
{
    const auto k = static_cast<std::size_t>(forbidden_action);
    if (forbidden_action < 0 || k >= bounds.logits.size()) {
        throw std::invalid_argument("classify_box: forbidden action out of range");
    }
    const Interval& fk = bounds.logits[k];
    bool beats_all = true;
    for (std::size_t j = 0; j < bounds.logits.size(); ++j) {
        if (j == k) {
            continue;
        }
        if (bounds.logits[j].lo() > fk.hi()) {
            return BoxVerdict::safe;
        }
        if (!(fk.lo() > bounds.logits[j].hi())) {
            beats_all = false;
        }
    }
    return beats_all ? BoxVerdict::unsafe : BoxVerdict::unknown;
}

CertifiedViolation verify_property(const PolicyNetwork& net, const SafetyProperty& p, const VerifierOptions& opts)
{
    if (!(opts.min_width > 0.0)) {
        throw std::invalid_argument("verify_property: min_width must be > 0");
    }
    if (opts.budget < 1) {
        throw std::invalid_argument("verify_property: budget must be >= 1");
    }
    if (p.domain.size() != net.input_dim()) {
        throw std::invalid_argument("verify_property: property dimension does not match the network");
    }
    if (p.forbidden_action < 0 || static_cast<std::size_t>(p.forbidden_action) >= net.num_actions()) {
        throw std::invalid_argument("verify_property: forbidden action out of range");
    }

    const auto layers = split_layers(net.actor());
    const auto n = static_cast<Eigen::Index>(p.domain.size());
    Eigen::VectorXd span(n);
    PendingBox root;
    root.lo.resize(n);
    root.hi.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& iv = p.domain[static_cast<std::size_t>(i)];
        root.lo(i) = iv.lo();
        root.hi(i) = iv.hi();
        span(i) = iv.width();
    }

    DyadicSum safe;
    DyadicSum unsafe;
    DyadicSum unknown;
    std::int64_t explored = 0;
    std::vector<PendingBox> stack;
    stack.push_back(std::move(root));

    while (!stack.empty()) {
        PendingBox box = std::move(stack.back());
        stack.pop_back();
        if (explored >= opts.budget) {
            unknown.add(box.depth);
            continue;
        }
        ++explored;

        Eigen::VectorXd lo = box.lo;
        Eigen::VectorXd hi = box.hi;
        propagate(layers, lo, hi);
        const BoxVerdict verdict = classify_box(to_bounds(lo, hi), p.forbidden_action);
        if (verdict == BoxVerdict::safe) {
            safe.add(box.depth);
            continue;
        }
        if (verdict == BoxVerdict::unsafe) {
            unsafe.add(box.depth);
            continue;
        }

        Eigen::Index axis = -1;
        double widest = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (span(i) <= 0.0) {
                continue;
            }
            const double w = (box.hi(i) - box.lo(i)) / span(i);
            if (w > widest) {
                widest = w;
                axis = i;
            }
        }
        if (axis < 0 || widest <= opts.min_width) {
            unknown.add(box.depth);
            continue;
        }

        const double mid = box.lo(axis) + 0.5 * (box.hi(axis) - box.lo(axis));
        PendingBox upper_half{box.lo, box.hi, box.depth + 1};
        upper_half.lo(axis) = mid;
        PendingBox lower_half{std::move(box.lo), std::move(box.hi), box.depth + 1};
        lower_half.hi(axis) = mid;
        stack.push_back(std::move(upper_half));
        stack.push_back(std::move(lower_half));
    }

    CertifiedViolation out;
    out.property = p;
    out.boxes_explored = explored;
    out.lower = unsafe.value();
    out.unknown_fraction = unknown.value();
    DyadicSum maybe = unsafe;
    maybe.add(unknown);
    out.upper = maybe.value();
    return out;
}

void write_verification_csv(std::ostream& os, const std::vector<VerificationRow>& rows)
{
    const auto old = os.precision(10);
    os << "property_id,lower,upper,unknown,boxes_explored,seconds,midpoint\n";
    double lo = 0.0;
    double up = 0.0;
    double unk = 0.0;
    double secs = 0.0;
    double mid = 0.0;
    std::int64_t boxes = 0;
    for (const auto& r : rows) {
        const auto& c = r.result;
        const double m = 0.5 * (c.lower + c.upper);
        os << r.property_id << ',' << c.lower << ',' << c.upper << ',' << c.unknown_fraction << ','
           << c.boxes_explored << ',' << r.seconds << ',' << m << '\n';
        lo += c.lower;
        up += c.upper;
        unk += c.unknown_fraction;
        boxes += c.boxes_explored;
        secs += r.seconds;
        mid += m;
    }
    os << "SUM," << lo << ',' << up << ',' << unk << ',' << boxes << ',' << secs << ',' << mid << '\n';
    os.precision(old);
}

}  // namespace crop
