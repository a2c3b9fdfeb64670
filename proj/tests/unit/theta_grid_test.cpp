#include "doctest.h"

#include "epcag/error.hpp"
#include "epcag/theta_grid.hpp"

#include <cmath>
#include <random>

using namespace epcag;

TEST_CASE("uniform grid: beta is floor for unit step") {
    const auto g = ThetaGrid::uniform(1.0, 0.0, {-50, 50});
    CHECK(g.beta(0.0) == 0.0);
    CHECK(g.beta(0.999999) == 0.0);
    CHECK(g.beta(1.0) == 1.0);
    CHECK(g.beta(-0.25) == -1.0);
    CHECK(g.beta(-1.0) == -1.0);
    CHECK(g.gap_bound() == 1.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int i = 0; i < 2000; ++i) {
        const double t = u(rng);
        REQUIRE(g.beta(t) == std::floor(t));
        REQUIRE(g.knot(g.interval_index(t)) == g.beta(t));
    }
}

TEST_CASE("uniform grid with offset and step") {
    const auto g = ThetaGrid::uniform(0.5, 0.25, {-10, 10});
    CHECK(g.beta(0.25) == doctest::Approx(0.25));
    CHECK(g.beta(0.74) == doctest::Approx(0.25));
    CHECK(g.beta(0.2) == doctest::Approx(-0.25));
    const auto ks = g.knots_between(0.0, 1.0);
    REQUIRE(ks.size() == 2);
    CHECK(ks[0] == doctest::Approx(0.25));
    CHECK(ks[1] == doctest::Approx(0.75));
    CHECK(g.next_knot_at_or_after(0.3) == doctest::Approx(0.75));
    CHECK(g.next_knot_at_or_after(0.75) == doctest::Approx(0.75));
    REQUIRE(g.periodicity());
    CHECK(g.periodicity()->p == 1);
    CHECK(g.periodicity()->omega_bar == 0.5);
}

TEST_CASE("explicit grid") {
    const auto g = ThetaGrid::explicit_knots({0.0, 0.3, 1.0, 2.5});
    CHECK(g.gap_bound() == doctest::Approx(1.5));
    CHECK(g.beta(0.29) == 0.0);
    CHECK(g.beta(0.3) == 0.3);
    CHECK(g.beta(2.0) == 1.0);
    CHECK(g.window().lo == 0.0);
    CHECK(g.window().hi == 2.5);
    CHECK_THROWS_AS(g.beta(-0.1), OutOfWindow);
    CHECK_THROWS_AS(g.beta(2.6), OutOfWindow);
    CHECK_FALSE(g.periodicity());
}

TEST_CASE("explicit grid rejects bad input") {
    CHECK_THROWS_AS(ThetaGrid::explicit_knots({0.0, 1.0, 1.0}), InvalidParameter);
    CHECK_THROWS_AS(ThetaGrid::explicit_knots({1.0, 0.0}), InvalidParameter);
    CHECK_THROWS_AS(ThetaGrid::explicit_knots({0.0}), InvalidParameter);
    CHECK_THROWS(ThetaGrid::explicit_knots({0.0, std::nan("")}));
}

TEST_CASE("uniform grid rejects bad step and window") {
    CHECK_THROWS_AS(ThetaGrid::uniform(0.0, 0.0, {0, 1}), InvalidParameter);
    CHECK_THROWS_AS(ThetaGrid::uniform(-1.0, 0.0, {0, 1}), InvalidParameter);
    CHECK_THROWS_AS(ThetaGrid::uniform(1.0, 0.0, {1, 0}), InvalidParameter);
}

TEST_CASE("periodic pattern grid") {
    const auto g = ThetaGrid::periodic_pattern({0.0, 0.4}, 1.0, {-5, 5});
    CHECK(g.gap_bound() == doctest::Approx(0.6));
    CHECK(g.beta(0.39) == doctest::Approx(0.0));
    CHECK(g.beta(0.5) == doctest::Approx(0.4));
    CHECK(g.beta(1.45) == doctest::Approx(1.4));
    CHECK(g.beta(-0.1) == doctest::Approx(-0.6));
    REQUIRE(g.periodicity());
    CHECK(g.periodicity()->p == 2);
    CHECK(g.periodicity()->omega_bar == 1.0);
    CHECK_THROWS_AS(ThetaGrid::periodic_pattern({0.0, 1.0}, 1.0, {-5, 5}), InvalidParameter);
}

TEST_CASE("property: beta(t) <= t < next knot, and beta is idempotent") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-20, 20);
    const ThetaGrid grids[] = {ThetaGrid::uniform(0.7, 0.1, {-30, 30}),
                               ThetaGrid::periodic_pattern({0.0, 0.1, 0.55}, 1.3, {-30, 30})};
    for (const auto& g : grids) {
        for (int i = 0; i < 1000; ++i) {
            const double t = u(rng);
            const double b = g.beta(t);
            const long k = g.interval_index(t);
            REQUIRE(b <= t);
            REQUIRE(t < g.knot(k + 1));
            REQUIRE(g.beta(b) == b);
            REQUIRE(g.knot(k + 1) - g.knot(k) <= g.gap_bound() + 1e-12);
        }
    }
}
