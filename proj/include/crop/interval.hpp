#ifndef CROP_INTERVAL_HPP
#define CROP_INTERVAL_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <json.hpp>

namespace crop {

// Closed real interval [lo, hi].
// NOTE: bounds are plain doubles without outward rounding, so every result
// below is exact only up to one rounding of the underlying subtraction.
class Interval {
public:
    Interval() = default;
    explicit Interval(double point) : Interval(point, point) {}
    // Throws std::invalid_argument when lo > hi or either bound is NaN.
    Interval(double lo, double hi);

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    double width() const noexcept { return hi_ - lo_; }
    double midpoint() const noexcept { return lo_ + 0.5 * (hi_ - lo_); }

    bool contains(double x) const noexcept { return lo_ <= x && x <= hi_; }
    bool contains_zero() const noexcept { return contains(0.0); }

    friend bool operator==(const Interval&, const Interval&) = default;

private:
    double lo_ = 0.0;
    double hi_ = 0.0;
};

// Moore subtraction: [a.lo - b.hi, a.hi - b.lo].
Interval sub(const Interval& a, const Interval& b) noexcept;

// Smallest absolute value attained on the interval.
double mignitude(const Interval& a) noexcept;

// min over x in a, y in b of |x - y|.
double mig_abs_diff(const Interval& a, const Interval& b) noexcept;

Interval hull(const Interval& a, const Interval& b) noexcept;

// a is a subset of b.
bool is_subset(const Interval& a, const Interval& b) noexcept;

bool overlaps(const Interval& a, const Interval& b) noexcept;

// Per-dimension box of closed intervals.
class IntervalBox {
public:
    IntervalBox() = default;
    explicit IntervalBox(std::vector<Interval> dims) : dims_(std::move(dims)) {}
    IntervalBox(std::initializer_list<Interval> dims) : dims_(dims) {}

    // Box with the same interval repeated `n` times.
    static IntervalBox uniform(std::size_t n, const Interval& iv);
    // Zero-width box around a point.
    static IntervalBox point(std::span<const double> x);

    std::size_t size() const noexcept { return dims_.size(); }
    const Interval& operator[](std::size_t i) const { return dims_[i]; }
    Interval& operator[](std::size_t i) { return dims_[i]; }
    const std::vector<Interval>& dims() const noexcept { return dims_; }

    auto begin() const noexcept { return dims_.begin(); }
    auto end() const noexcept { return dims_.end(); }

    // Closed membership. Throws std::invalid_argument on dimension mismatch.
    bool contains(std::span<const double> point) const;
    // Per-dimension subset test; dimensions must agree.
    bool is_subset_of(const IntervalBox& other) const;

    friend bool operator==(const IntervalBox&, const IntervalBox&) = default;

private:
    std::vector<Interval> dims_;
};

// Per-dimension hull. Throws std::invalid_argument on dimension mismatch.
IntervalBox hull(const IntervalBox& a, const IntervalBox& b);

// [lo, hi] pairs.
void to_json(nlohmann::json& j, const Interval& iv);
void from_json(const nlohmann::json& j, Interval& iv);
void to_json(nlohmann::json& j, const IntervalBox& box);
void from_json(const nlohmann::json& j, IntervalBox& box);

}  // namespace crop

#endif  // CROP_INTERVAL_HPP
