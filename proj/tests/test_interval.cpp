#include <doctest.h>

#include <json.hpp>

#include "crop/interval.hpp"
#include "support/oracles.hpp"

using namespace crop;

TEST_CASE("interval construction")
{
    CHECK_THROWS_AS(Interval(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Interval(std::nan(""), 1.0), std::invalid_argument);
    const Interval p(0.25);
    CHECK(p.lo() == 0.25);
    CHECK(p.hi() == 0.25);
    CHECK(p.width() == 0.0);
    CHECK(Interval(-1.0, 3.0).midpoint() == 1.0);
    CHECK(Interval(-1.0, 3.0).contains(3.0));
    CHECK_FALSE(Interval(-1.0, 3.0).contains(3.0000001));
}

TEST_CASE("moore subtraction")
{
    CHECK(sub(Interval(1.0, 2.0), Interval(0.5, 0.75)) == Interval(0.25, 1.5));
    CHECK(sub(Interval(0.0, 0.0), Interval(0.0, 0.0)) == Interval(0.0));
    // a - a is not {0} in interval arithmetic.
    CHECK(sub(Interval(0.0, 1.0), Interval(0.0, 1.0)) == Interval(-1.0, 1.0));
}

TEST_CASE("sub contains every pointwise difference")
{
    Rng rng(11);
    for (int k = 0; k < 10000; ++k) {
        const double a0 = oracle::uniform(rng, -3, 3);
        const double b0 = oracle::uniform(rng, -3, 3);
        const Interval a(a0, a0 + oracle::uniform(rng, 0, 2));
        const Interval b(b0, b0 + oracle::uniform(rng, 0, 2));
        const Interval d = sub(a, b);
        const double x = oracle::uniform(rng, a.lo(), a.hi());
        const double y = oracle::uniform(rng, b.lo(), b.hi());
        REQUIRE(d.contains(x - y));
        REQUIRE(d.contains(a.lo() - b.hi()));
        REQUIRE(d.contains(a.hi() - b.lo()));
    }
}

TEST_CASE("mignitude")
{
    CHECK(mignitude(Interval(-1.0, 2.0)) == 0.0);
    CHECK(mignitude(Interval(0.5, 2.0)) == 0.5);
    CHECK(mignitude(Interval(-3.0, -0.25)) == 0.25);
    CHECK(mignitude(Interval(0.0)) == 0.0);
}

TEST_CASE("mig of the difference on the worked pair")
{
    CHECK(mig_abs_diff(Interval(0.0, 0.05), Interval(0.91, 0.96)) == doctest::Approx(0.86).epsilon(1e-12));
    CHECK(mig_abs_diff(Interval(0.91, 0.96), Interval(0.0, 0.05)) == doctest::Approx(0.86).epsilon(1e-12));
    CHECK(mig_abs_diff(Interval(0.0, 0.5), Interval(0.4, 0.9)) == 0.0);
    CHECK(mig_abs_diff(Interval(0.0, 0.5), Interval(0.5, 0.9)) == 0.0);
}

TEST_CASE("mig matches brute-force minimum")
{
    Rng rng(12);
    for (int k = 0; k < 20000; ++k) {
        const double a0 = oracle::uniform(rng, -2, 2);
        const double b0 = oracle::uniform(rng, -2, 2);
        const Interval a(a0, a0 + oracle::uniform(rng, 0, 1));
        const Interval b(b0, b0 + oracle::uniform(rng, 0, 1));
        REQUIRE(std::abs(mig_abs_diff(a, b) - oracle::grid_min_abs_diff(a, b)) <= 1e-9);
    }
}

TEST_CASE("hull laws")
{
    Rng rng(13);
    auto draw = [&] {
        const double c = oracle::uniform(rng, -2, 2);
        return Interval(c, c + oracle::uniform(rng, 0, 1));
    };
    for (int k = 0; k < 5000; ++k) {
        const Interval a = draw();
        const Interval b = draw();
        const Interval c = draw();
        REQUIRE(hull(a, b) == hull(b, a));
        REQUIRE(hull(hull(a, b), c) == hull(a, hull(b, c)));
        REQUIRE(hull(a, a) == a);
        REQUIRE(is_subset(a, hull(a, b)));
        REQUIRE(is_subset(b, hull(a, b)));
    }
}

TEST_CASE("subset and overlap")
{
    CHECK(is_subset(Interval(0.0, 0.05), Interval(0.0, 0.09)));
    CHECK_FALSE(is_subset(Interval(0.0, 0.1), Interval(0.0, 0.09)));
    CHECK(overlaps(Interval(0.0, 1.0), Interval(1.0, 2.0)));
    CHECK_FALSE(overlaps(Interval(0.0, 1.0), Interval(1.5, 2.0)));
}

TEST_CASE("boxes")
{
    const IntervalBox a{Interval(0.0, 1.0), Interval(2.0, 3.0)};
    const IntervalBox b{Interval(0.5, 1.5), Interval(-1.0, 2.5)};
    CHECK(hull(a, b) == IntervalBox{Interval(0.0, 1.5), Interval(-1.0, 3.0)});
    CHECK(a.contains(std::vector<double>{1.0, 2.0}));
    CHECK_FALSE(a.contains(std::vector<double>{1.0, 3.5}));
    CHECK_THROWS_AS(a.contains(std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(hull(a, IntervalBox{Interval(0.0)}), std::invalid_argument);
    CHECK(a.is_subset_of(hull(a, b)));

    const std::vector<double> x{0.1, 0.2, 0.3};
    const IntervalBox p = IntervalBox::point(x);
    CHECK(p.size() == 3);
    CHECK(p[1] == Interval(0.2));
    CHECK(IntervalBox::uniform(4, Interval(0.0, 1.0)).size() == 4);
}

TEST_CASE("json form")
{
    const IntervalBox a{Interval(0.0, 0.05), Interval(-1.0, 1.0)};
    const nlohmann::json j = a;
    CHECK(j.dump() == "[[0.0,0.05],[-1.0,1.0]]");
    CHECK(j.get<IntervalBox>() == a);
    CHECK_THROWS(nlohmann::json::parse("[[1.0,0.0]]").get<IntervalBox>());
}

TEST_CASE("worked examples")
{
    const Interval d = sub(Interval(0.0, 0.05), Interval(0.91, 0.96));
    CHECK(d.lo() == doctest::Approx(-0.96).epsilon(1e-15));
    CHECK(d.hi() == doctest::Approx(-0.86).epsilon(1e-15));
    CHECK(sub(Interval(1.0, 2.0), Interval(0.0, 1.0)) == Interval(0.0, 2.0));
    CHECK(mig_abs_diff(Interval(0.0, 1.0), Interval(0.5, 0.6)) == 0.0);

    // mig([0.2,0.3],[0.0,0.1]) against a plain 1000 x 1000 grid.
    double best = 1e9;
    for (int i = 0; i < 1000; ++i) {
        for (int j = 0; j < 1000; ++j) {
            best = std::min(best, std::abs((0.2 + 0.1 * i / 999.0) - (0.1 * j / 999.0)));
        }
    }
    CHECK(mig_abs_diff(Interval(0.2, 0.3), Interval(0.0, 0.1)) == doctest::Approx(best).epsilon(1e-12));
    CHECK(mig_abs_diff(Interval(0.2, 0.3), Interval(0.0, 0.1)) == doctest::Approx(0.1).epsilon(1e-12));

    CHECK(hull(Interval(0.0, 1.0), Interval(0.0, 1.0)) == Interval(0.0, 1.0));
    CHECK(hull(Interval(0.0, 0.05), Interval(0.03, 0.08)) == Interval(0.0, 0.08));
    CHECK(hull(Interval(0.9, 1.0), Interval(0.1, 0.2)) == Interval(0.1, 1.0));

    const IntervalBox unit = IntervalBox::uniform(23, Interval(0.0, 1.0));
    std::vector<double> x(23, 0.5);
    CHECK(unit.contains(x));
    x[7] = 1.0;
    CHECK(unit.contains(x));
    x[7] = 1.0001;
    CHECK_FALSE(unit.contains(x));

    CHECK(is_subset(Interval(0.0, 0.09), Interval(0.0, 0.09)));
    CHECK_FALSE(is_subset(Interval(0.05, 0.10), Interval(0.0, 0.09)));
}

TEST_CASE("mig is symmetric and zero on overlap")
{
    Rng rng(14);
    for (int k = 0; k < 5000; ++k) {
        const double a0 = oracle::uniform(rng, -1, 1);
        const double b0 = oracle::uniform(rng, -1, 1);
        const Interval a(a0, a0 + oracle::uniform(rng, 0, 0.5));
        const Interval b(b0, b0 + oracle::uniform(rng, 0, 0.5));
        REQUIRE(mig_abs_diff(a, b) == mig_abs_diff(b, a));
        REQUIRE(mig_abs_diff(a, b) >= 0.0);
        if (overlaps(a, b)) {
            REQUIRE(mig_abs_diff(a, b) == 0.0);
        }
    }
}
