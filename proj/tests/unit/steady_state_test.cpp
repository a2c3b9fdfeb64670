#include "doctest.h"

#include "epcag/error.hpp"
#include "epcag/linear_flow.hpp"
#include "epcag/lyapunov_reduction.hpp"
#include "epcag/steady_state.hpp"
#include "epcag/system_model.hpp"

#include <cmath>
#include <numbers>

using namespace epcag;

namespace {

ReducedSystem reduced(const SystemSpec& s) { return reduce(s, dichotomy_for(s)); }

// y' = -y + sin(2 pi t) + 0.1 y(beta(t)) on the half-step grid, solved in closed form.
double particular(double t) {
    const double w = 2.0 * std::numbers::pi;
    return (std::sin(w * t) - w * std::cos(w * t)) / (1.0 + w * w);
}

double advance(double tau, double y_tau, double t) {
    const double c = 0.1 * y_tau;
    return particular(t) + c + std::exp(-(t - tau)) * (y_tau - particular(tau) - c);
}

double periodic_exact(double t) {
    // Fixed point of the affine period map y(0) -> y(1).
    auto period_map = [](double y0) { return advance(0.5, advance(0.0, y0, 0.5), 1.0); };
    const double b = period_map(0.0);
    const double a = period_map(1.0) - b;
    const double y0 = b / (1.0 - a);
    t -= std::floor(t);
    return t < 0.5 ? advance(0.0, y0, t) : advance(0.5, advance(0.0, y0, 0.5), t);
}

}  // namespace

TEST_CASE("forced scalar: the bounded solution is the constant h") {
    const auto red = reduced(get_problem("forced-scalar"));
    const auto r = bounded_solution(red, {0.0, 10.0});
    CHECK(r.within_bound);
    CHECK(r.bound == doctest::Approx(1.0));
    for (Eigen::Index j = 0; j < r.z.cols(); ++j) {
        REQUIRE((red.U * r.z.col(j))(0) == doctest::Approx(0.5).epsilon(1e-8));
    }
}

TEST_CASE("forced scalar with feedback: constant 0.5 / (1 - b)") {
    for (double b : {0.1, -0.2}) {
        const auto red = reduced(get_problem("forced-scalar", RegistryOptions{.coupling = b}));
        const auto r = bounded_solution(red, {-3.0, 3.0});
        CHECK(r.geometric_holds);
        for (Eigen::Index j = 0; j < r.z.cols(); ++j) {
            REQUIRE((red.U * r.z.col(j))(0) == doctest::Approx(0.5 / (1.0 - b)).epsilon(1e-8));
        }
        REQUIRE(r.uniqueness_residual);
        CHECK(*r.uniqueness_residual <= 1e-8);
    }
}

TEST_CASE("bounded solution refuses when the smallness condition fails") {
    const auto red = reduced(get_problem("forced-scalar", RegistryOptions{.coupling = 0.6}));
    CHECK_THROWS_AS(bounded_solution(red, {0.0, 1.0}), ConditionViolation);
    CHECK_THROWS_AS(bounded_solution(reduced(get_problem("forced-scalar")), {1.0, 0.0}), InvalidParameter);
}

TEST_CASE("periodicity parameters") {
    auto p = periodicity_params(1.0, 0.5);
    CHECK(p.k == 2);
    CHECK(p.m == 1);
    CHECK(p.period == doctest::Approx(1.0));
    p = periodicity_params(1.5, 1.0);
    CHECK(p.k == 3);
    CHECK(p.m == 2);
    CHECK(p.period == doctest::Approx(3.0));
    p = periodicity_params(0.3, 0.2, 2);
    CHECK(p.k == 3);
    CHECK(p.m == 2);
    CHECK(p.p == 2);
    CHECK_THROWS_AS(periodicity_params(0.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(periodicity_params(1.0, -1.0), InvalidParameter);
}

TEST_CASE("periodic-coupled: periodic solution matches the closed-form fixed point") {
    const auto spec = get_problem("periodic-coupled");
    const auto red = reduced(spec);
    SteadyParams sp;
    sp.substeps = 256;
    sp.tol = 1e-12;
    const auto r = periodic_solution(red, periodicity_params(1.0, 0.5), sp);
    CHECK(r.certified);
    CHECK(r.residual <= 1e-9);
    double err = 0.0;
    for (std::size_t j = 0; j < r.times.size(); ++j) {
        const double y = (red.U * r.z.col(static_cast<Eigen::Index>(j)))(0);
        err = std::max(err, std::abs(y - periodic_exact(r.times[j])));
    }
    CHECK(err <= 1e-9);
}

TEST_CASE("periodic solution needs a periodic system and grid") {
    const auto red = reduced(get_problem("periodic-coupled"));
    // Grid period 0.5 but omega_bar declared as 0.7.
    CHECK_THROWS_AS(periodic_solution(red, periodicity_params(1.0, 0.7)), ConditionViolation);
    // sin(2 pi t) is not 0.5-periodic.
    CHECK_THROWS_AS(periodic_solution(red, periodicity_params(0.5, 0.5)), ConditionViolation);
    // A time-independent f is periodic for any omega.
    const auto fs = reduced(get_problem("forced-scalar"));
    const auto r = periodic_solution(fs, periodicity_params(1.0, 1.0));
    CHECK(r.certified);
}
