#include "crop/interval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace crop {

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi)
{
    if (std::isnan(lo) || std::isnan(hi)) {
        throw std::invalid_argument("interval bound is NaN");
    }
    if (lo > hi) {
        throw std::invalid_argument("interval lower bound " + std::to_string(lo) +
                                    " exceeds upper bound " + std::to_string(hi));
    }
}

Interval sub(const Interval& a, const Interval& b) noexcept
{
    // Rounding is monotone, so lo <= hi survives the two subtractions.
    return Interval(a.lo() - b.hi(), a.hi() - b.lo());
}

double mignitude(const Interval& a) noexcept
{
    if (a.contains_zero()) {
        return 0.0;
    }
    return std::min(std::abs(a.lo()), std::abs(a.hi()));
}

double mig_abs_diff(const Interval& a, const Interval& b) noexcept
{
    return mignitude(sub(a, b));
}

Interval hull(const Interval& a, const Interval& b) noexcept
{
    return Interval(std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

bool is_subset(const Interval& a, const Interval& b) noexcept
{
    return b.lo() <= a.lo() && a.hi() <= b.hi();
}

bool overlaps(const Interval& a, const Interval& b) noexcept
{
    return a.lo() <= b.hi() && b.lo() <= a.hi();
}

IntervalBox IntervalBox::uniform(std::size_t n, const Interval& iv)
{
    return IntervalBox(std::vector<Interval>(n, iv));
}

IntervalBox IntervalBox::point(std::span<const double> x)
{
    std::vector<Interval> dims;
    dims.reserve(x.size());
    for (double v : x) {
        dims.emplace_back(v);
    }
    return IntervalBox(std::move(dims));
}

bool IntervalBox::contains(std::span<const double> point) const
{
    if (point.size() != dims_.size()) {
        throw std::invalid_argument("box_contains: point has " + std::to_string(point.size()) +
                                    " dims, box has " + std::to_string(dims_.size()));
    }
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (!dims_[i].contains(point[i])) {
            return false;
        }
    }
    return true;
}

bool IntervalBox::is_subset_of(const IntervalBox& other) const
{
    if (other.size() != size()) {
        throw std::invalid_argument("box subset: dimension mismatch");
    }
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (!is_subset(dims_[i], other[i])) {
            return false;
        }
    }
    return true;
}

IntervalBox hull(const IntervalBox& a, const IntervalBox& b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("box hull: dimension mismatch");
    }
    std::vector<Interval> dims;
    dims.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        dims.push_back(hull(a[i], b[i]));
    }
    return IntervalBox(std::move(dims));
}

void to_json(nlohmann::json& j, const Interval& iv)
{
    j = nlohmann::json::array({iv.lo(), iv.hi()});
}

void from_json(const nlohmann::json& j, Interval& iv)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw std::invalid_argument("interval must be a [lo, hi] number pair");
    }
    iv = Interval(j[0].get<double>(), j[1].get<double>());
}

void to_json(nlohmann::json& j, const IntervalBox& box)
{
    j = nlohmann::json::array();
    for (const auto& iv : box) {
        j.push_back(iv);
    }
}

void from_json(const nlohmann::json& j, IntervalBox& box)
{
    if (!j.is_array()) {
        throw std::invalid_argument("interval box must be an array of [lo, hi] pairs");
    }
    std::vector<Interval> dims;
    dims.reserve(j.size());
    for (const auto& e : j) {
        dims.push_back(e.get<Interval>());
    }
    box = IntervalBox(std::move(dims));
}

}  // namespace crop
