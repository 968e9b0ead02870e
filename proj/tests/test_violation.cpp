#include <doctest.h>

#include <sstream>

#include "crop/violation.hpp"
#include "support/oracles.hpp"

using namespace crop;

namespace {

SafetyProperty full_box(int action)
{
    SafetyProperty p;
    p.domain = CropConfig::navigation_defaults().obs_domain;
    p.forbidden_action = action;
    return p;
}

PolicyNetwork biased(int winner)
{
    PolicyNetwork net = PolicyNetwork::zeros(NetworkShape{});
    net.actor().layers().back().bias(winner) = 5.0;
    return net;
}

}  // namespace

TEST_CASE("saturated policies give ratio one or zero")
{
    const PolicyNetwork net = biased(2);
    const auto hit = estimate_property_violation(net, full_box(2), 1000, 1);
    CHECK(hit.samples == 1000);
    CHECK(hit.violating == 1000);
    CHECK(hit.ratio == 1.0);
    const auto miss = estimate_property_violation(net, full_box(3), 1000, 1);
    CHECK(miss.violating == 0);
    CHECK(miss.ratio == 0.0);

    // All-zero logits tie, and ties pick action 0.
    const PolicyNetwork zero = PolicyNetwork::zeros(NetworkShape{});
    CHECK(estimate_property_violation(zero, full_box(0), 500, 3).ratio == 1.0);
    CHECK(estimate_property_violation(zero, full_box(5), 500, 3).ratio == 0.0);
}

TEST_CASE("empty property list")
{
    const PolicyNetwork net = biased(1);
    const ViolationReport r = estimate_violation(net, std::span<const SafetyProperty>{}, 100, 0);
    CHECK(r.per_property.empty());
    CHECK(r.total_samples == 0);
    CHECK(r.aggregate_ratio == 0.0);
}

TEST_CASE("argument checks")
{
    const PolicyNetwork net = biased(1);
    CHECK_THROWS_AS(estimate_property_violation(net, full_box(1), 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(estimate_property_violation(net, full_box(6), 10, 0), std::invalid_argument);
    SafetyProperty small;
    small.domain = IntervalBox::uniform(5, Interval(0.0, 1.0));
    CHECK_THROWS_AS(estimate_property_violation(net, small, 10, 0), std::invalid_argument);
}

TEST_CASE("a point box is all or nothing")
{
    Rng rng(4);
    for (int k = 0; k < 20; ++k) {
        const PolicyNetwork net = oracle::random_policy({23, 8, 8, 6}, rng, 1.0);
        std::vector<double> x(kObsDim);
        for (auto& v : x) {
            v = oracle::uniform(rng, 0.0, 1.0);
        }
        const auto ref = oracle::mlp_forward(net.actor(), x);
        const int chosen = oracle::first_argmax(ref.data(), ref.size());
        SafetyProperty p;
        p.domain = IntervalBox::point(x);
        for (int a = 0; a < 6; ++a) {
            p.forbidden_action = a;
            REQUIRE(estimate_property_violation(net, p, 50, 9).ratio == (a == chosen ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("same seed, same counts")
{
    Rng rng(5);
    const PolicyNetwork net = oracle::random_policy({23, 16, 6}, rng, 1.0);
    const SafetyProperty p = full_box(1);
    const auto a = estimate_property_violation(net, p, 5000, 77);
    const auto b = estimate_property_violation(net, p, 5000, 77);
    CHECK(a.violating == b.violating);
    // Chunking must not change the stream: prefix counts never exceed the total.
    CHECK(estimate_property_violation(net, p, 2048, 77).violating <= a.violating);
}

TEST_CASE("estimate agrees with a grid on two free axes")
{
    Rng rng(6);
    int informative = 0;
    for (int k = 0; k < 10; ++k) {
        const PolicyNetwork net = oracle::random_policy({23, 8, 8, 6}, rng, 1.5);
        SafetyProperty p;
        std::vector<double> centre(kObsDim);
        for (auto& v : centre) {
            v = oracle::uniform(rng, 0.0, 1.0);
        }
        p.domain = IntervalBox::point(centre);
        p.domain[3] = Interval(centre[3] - 1.0, centre[3] + 1.0);
        p.domain[11] = Interval(centre[11] - 1.0, centre[11] + 1.0);
        const auto ref = oracle::mlp_forward(net.actor(), centre);
        p.forbidden_action = oracle::first_argmax(ref.data(), ref.size());

        constexpr int kSamples = 40000;
        const double mc = estimate_property_violation(net, p, kSamples, 100 + k).ratio;
        const double grid = oracle::grid_violation_2d(net, p, 3, 11, 400);
        const double q = std::max(mc, grid);
        const double tol = 4.0 * std::sqrt(std::max(q * (1 - q), 1e-4) / kSamples) + 1e-3;
        CHECK(std::abs(mc - grid) <= tol);
        informative += (grid > 0.0 && grid < 1.0) ? 1 : 0;
    }
    CHECK(informative >= 3);
}

TEST_CASE("pooled aggregate")
{
    std::vector<PropertyViolation> per{{100, 10, 0.1}, {300, 0, 0.0}, {100, 100, 1.0}};
    const ViolationReport r = pool(per);
    CHECK(r.total_samples == 500);
    CHECK(r.aggregate_ratio == doctest::Approx(110.0 / 500.0));
    CHECK(r.per_property.size() == 3);

    // Pooling differs from averaging the ratios.
    CHECK(r.aggregate_ratio != doctest::Approx((0.1 + 0.0 + 1.0) / 3.0));

    const PolicyNetwork net = biased(0);
    std::vector<SafetyProperty> ps{full_box(0), full_box(1), full_box(0)};
    const ViolationReport e = estimate_violation(net, ps, 200, 1);
    CHECK(e.total_samples == 600);
    CHECK(e.aggregate_ratio == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("violation csv")
{
    const ViolationReport r = pool({{3, 1, 1.0 / 3.0}, {4, 4, 1.0}});
    std::ostringstream os;
    write_violation_csv(os, r);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "property_id,samples,violating,ratio");
    std::getline(is, line);
    CHECK(line.rfind("0,3,1,", 0) == 0);
    CHECK(std::stod(line.substr(6)) == 1.0 / 3.0);
    std::getline(is, line);
    CHECK(line == "1,4,4,1");
    std::getline(is, line);
    CHECK(line.rfind("ALL,7,5,", 0) == 0);
    CHECK(std::stod(line.substr(8)) == 5.0 / 7.0);
}
