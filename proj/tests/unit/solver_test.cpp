#include "doctest.h"

#include "epcag/epcag_solver.hpp"
#include "epcag/error.hpp"
#include "epcag/system_model.hpp"

#include <algorithm>
#include <cmath>

using namespace epcag;

namespace {

const double e2 = std::exp(2.0);

// One-interval map of y' = 2y - y(floor t)^2.
double phi(double x, double s = 1.0) {
    const double E = std::exp(2.0 * s);
    return E * x - (E - 1.0) / 2.0 * x * x;
}

Vector v1(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST_CASE("example 1 forward: knot values follow the closed-form map") {
    const auto spec = get_problem("paper-example-1");
    SolverOptions opt;
    opt.substeps = 256;
    const auto p = solve_forward(spec, 0.0, v1(0.1), 3.0, opt);
    double x = 0.1;
    for (int k = 1; k <= 3; ++k) {
        x = phi(x);
        CHECK(p.state_at(k)(0) == doctest::Approx(x).epsilon(1e-8));
    }
    // Inside an interval the frozen value is the left-knot state.
    for (const auto& pt : p.points) {
        const double b = std::floor(pt.t);
        if (pt.t < 3.0) {
            REQUIRE(pt.w(0) == doctest::Approx(p.state_at(b)(0)));
            REQUIRE(pt.interval == static_cast<long>(b));
        }
    }
    CHECK(p.diagnostics.size() == 3);
}

TEST_CASE("forward solve from a non-knot start needs the frozen value") {
    const auto spec = get_problem("paper-example-1");
    SolverOptions opt;
    opt.substeps = 256;
    const auto a = solve_forward(spec, 0.5, v1(0.2), 1.0, opt, v1(0.1));
    // On [0.5, 1): y = e^{2(t-0.5)} 0.2 - (e^{2(t-0.5)} - 1)/2 * 0.01
    const double E = std::exp(1.0);
    CHECK(a.back().y(0) == doctest::Approx(E * 0.2 - (E - 1.0) / 2.0 * 0.01).epsilon(1e-9));
    CHECK_THROWS_AS(solve_forward(spec, 0.5, v1(0.2), 1.0), InvalidParameter);
}

TEST_CASE("forward solve input validation") {
    const auto spec = get_problem("paper-example-1");
    CHECK_THROWS_AS(solve_forward(spec, 1.0, v1(0.2), 0.5), InvalidParameter);
    CHECK_THROWS_AS(solve_forward(spec, 0.0, Vector::Zero(2), 1.0), InvalidParameter);
    CHECK_THROWS_AS(solve_forward(spec, 0.0, v1(0.2), 5000.0), OutOfWindow);
}

TEST_CASE("blow-up is reported") {
    const auto spec = get_problem("paper-example-1");
    CHECK_THROWS_AS(solve_forward(spec, 0.0, v1(-3.0), 10.0), BlowUp);
}

TEST_CASE("shooting map matches the closed form") {
    const auto spec = get_problem("paper-example-1");
    SolverOptions opt;
    opt.substeps = 256;
    for (double x : {-1.0, 0.0, 0.5, 1.7}) {
        CHECK(shooting_map(spec, 0, v1(x), opt)(0) == doctest::Approx(phi(x)).epsilon(1e-9));
    }
}

TEST_CASE("one-interval preimages: two, one or none") {
    const auto spec = get_problem("paper-example-1");
    const double a = e2 - 1.0;
    const double z_fold = e2 * e2 / (2.0 * a);

    const auto two = back_continue_interval(spec, 0, 1.0, v1(1.0));
    REQUIRE(two.classification == PreimageClass::Multiple);
    REQUIRE(two.roots.size() == 2);
    std::vector<double> xs{two.roots[0].x(0), two.roots[1].x(0)};
    std::sort(xs.begin(), xs.end());
    const double r = std::sqrt(4.0 * e2 * e2 - 8.0 * a);
    CHECK(xs[0] == doctest::Approx((2.0 * e2 - r) / (2.0 * a)).epsilon(1e-7));
    CHECK(xs[1] == doctest::Approx((2.0 * e2 + r) / (2.0 * a)).epsilon(1e-7));

    const auto one = back_continue_interval(spec, 0, 1.0, v1(z_fold));
    REQUIRE(one.classification == PreimageClass::Unique);
    CHECK(one.roots[0].x(0) == doctest::Approx(e2 / a).epsilon(1e-6));

    const auto none = back_continue_interval(spec, 0, 1.0, v1(z_fold + 1.0));
    CHECK(none.classification == PreimageClass::None);
    CHECK(none.roots.empty());
}

TEST_CASE("preimage targets inside an interval") {
    const auto spec = get_problem("paper-example-1");
    // Target time 0.5: y(0.5) = phi(x, 0.5).
    const double z = phi(0.4, 0.5);
    const auto got = back_continue_interval(spec, 0, 0.5, v1(z));
    bool found = false;
    for (const auto& root : got.roots) {
        found = found || std::abs(root.x(0) - 0.4) < 1e-8;
    }
    CHECK(found);
}

TEST_CASE("backward continuation chains intervals and reproduces the forward path") {
    const auto spec = get_problem("diag-dichotomy", RegistryOptions{.coupling = 0.01});
    Vector y0(2);
    y0 << 0.3, -0.2;
    SolverOptions opt;
    const auto fwd = solve_forward(spec, 0.0, y0, 3.0, opt);
    const auto bc = back_continue(spec, 3.0, fwd.back().y, 0.0);
    REQUIRE(bc.ok);
    CHECK_FALSE(bc.non_unique);
    REQUIRE(bc.bw_holds);
    CHECK(*bc.bw_holds);
    CHECK((bc.path.front().y - y0).norm() <= 1e-8);
}

TEST_CASE("backward continuation with no preimage") {
    const auto spec = get_problem("paper-example-1");
    const auto bc = back_continue(spec, 1.0, v1(100.0), 0.0);
    CHECK_FALSE(bc.ok);
    REQUIRE(bc.failed_interval);
    CHECK(*bc.failed_interval == 0);
}

TEST_CASE("collision pair lands on the same point") {
    const auto spec = get_problem("paper-example-1");
    const double x0 = 0.3, x1 = 2.0 * e2 / (e2 - 1.0) - 0.3;
    SolverOptions opt;
    opt.substeps = 256;
    const double a = solve_forward(spec, 0.0, v1(x0), 1.0, opt).back().y(0);
    const double b = solve_forward(spec, 0.0, v1(x1), 1.0, opt).back().y(0);
    CHECK(std::abs(a - b) <= 1e-8);
}
