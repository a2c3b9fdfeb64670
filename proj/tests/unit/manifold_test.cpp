#include "doctest.h"

#include "epcag/error.hpp"
#include "epcag/linear_flow.hpp"
#include "epcag/lyapunov_reduction.hpp"
#include "epcag/manifold_engine.hpp"
#include "epcag/system_model.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>

using namespace epcag;

namespace {

// y' = diag(-1, 1) y + a (y2, w1): linear, so both manifolds are lines.
SystemSpec linear_saddle(double a) {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = -1.0;
    A(1, 1) = 1.0;
    SystemSpec s("linear-saddle", 2, [A](double) { return A; },
                 [a](double, const Vector& y, const Vector& w) {
                     Vector out(2);
                     out << a * y(1), a * w(0);
                     return out;
                 },
                 ThetaGrid::uniform(1.0, 0.0, {-1000, 1000}));
    s.constant_A = A;
    s.mu = Constant{1.0, false};
    s.lip = Constant{a, false};
    s.h0 = 0.0;
    return s;
}

// Knot-to-knot map M: top blocks of exp([[A + C, D], [0, 0]]).
Matrix knot_map(double a) {
    Matrix aug = Matrix::Zero(4, 4);
    aug(0, 0) = -1.0;
    aug(1, 1) = 1.0;
    aug(0, 1) = a;
    aug(1, 2) = a;
    const Matrix E = aug.exp();
    return E.topLeftCorner(2, 2) + E.topRightCorner(2, 2);
}

// Slope of the invariant line of M with |lambda| < 1 (stable) or > 1.
double slope(double a, bool stable) {
    Eigen::EigenSolver<Matrix> es(knot_map(a));
    const Eigen::MatrixXcd V = es.eigenvectors();
    for (int i = 0; i < 2; ++i) {
        if ((std::abs(es.eigenvalues()(i)) < 1.0) == stable) {
            const Eigen::VectorXcd v = V.col(i);
            return stable ? (v(1) / v(0)).real() : (v(0) / v(1)).real();
        }
    }
    return NAN;
}

std::shared_ptr<ReducedSystem> reduced(const SystemSpec& s) {
    return std::make_shared<ReducedSystem>(reduce(s, dichotomy_for(s)));
}

Vector v1(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST_CASE("linear system: manifold and its Jacobian match the knot map's invariant lines") {
    for (double a : {0.02, 0.1}) {
        const auto red = reduced(linear_saddle(a));
        ManifoldParams p;
        p.tol = 1e-12;
        p.substeps = 128;
        const ManifoldFn Fs(red, Side::Stable, p);
        const ManifoldFn Fu(red, Side::Unstable, p);
        const double ss = slope(a, true);
        const double su = slope(a, false);
        for (double c : {-1.0, 0.5, 2.0}) {
            CHECK(Fs(0.0, v1(c))(0) == doctest::Approx(ss * c).epsilon(1e-8));
            CHECK(Fu(0.0, v1(c))(0) == doctest::Approx(su * c).epsilon(1e-8));
        }
        CHECK(jacobian_F(Fs, 0.0, v1(0.7))(0, 0) == doctest::Approx(ss).epsilon(1e-7));
        CHECK(jacobian_F(Fu, 0.0, v1(0.7))(0, 0) == doctest::Approx(su).epsilon(1e-7));
        // Time-invariance on the integer grid.
        CHECK(Fs(3.0, v1(1.0))(0) == doctest::Approx(Fs(0.0, v1(1.0))(0)).epsilon(1e-10));
    }
}

TEST_CASE("zero nonlinearity gives F = 0 after one iteration") {
    const auto red = reduced(linear_saddle(0.0));
    for (Side side : {Side::Stable, Side::Unstable}) {
        const ManifoldFn F(red, side);
        const auto pt = F.point(0.5, v1(1.3));
        CHECK(pt->F.norm() == 0.0);
        CHECK(pt->iterations == 1);
    }
}

TEST_CASE("stable manifold of the nonlinear saddle") {
    const auto spec = get_problem("diag-dichotomy", RegistryOptions{.coupling = 0.01});
    const auto red = reduced(spec);
    const ManifoldFn F(red, Side::Stable);
    const auto pt = F.point(0.0, v1(0.5));
    CHECK(pt->proven_regime);
    CHECK(pt->decay_holds);
    CHECK(pt->contraction_ratio <= pt->theoretical_ratio);
    CHECK(std::abs(pt->F(0)) < 0.01);
    CHECK(pt->z(0, pt->anchor) == doctest::Approx(0.5));
    // Memoized: the same point is not recomputed.
    const auto again = F.point(0.0, v1(0.5));
    CHECK(again.get() == pt.get());
    CHECK(F.memo_size() == 1);
    CHECK(F(0.0, v1(0.0)).norm() == 0.0);
}

TEST_CASE("manifold: Lipschitz certificate and uniqueness probe") {
    const auto spec = get_problem("diag-dichotomy", RegistryOptions{.coupling = 0.02});
    const auto red = reduced(spec);
    const ManifoldFn F(red, Side::Stable);
    std::vector<std::pair<Vector, Vector>> pairs{{v1(0.1), v1(0.4)}, {v1(-1.0), v1(1.0)}, {v1(2.0), v1(2.1)}};
    const auto cert = lipschitz_certificate(F, 0.0, pairs);
    CHECK(cert.holds);
    CHECK(cert.max_quotient <= cert.constant);
    CHECK(manifold_uniqueness_probe(*red, Side::Stable, 0.0, v1(0.8)) <= 1e-7);
}

TEST_CASE("manifold: invariance along the flow and growth off it") {
    const auto spec = get_problem("diag-dichotomy", RegistryOptions{.coupling = 0.01});
    const auto red = reduced(spec);
    ManifoldParams p;
    p.tol = 1e-10;
    const ManifoldFn F(red, Side::Stable, p);
    const auto inv = invariance_check(spec, F, 0.0, v1(0.5), 5.0);
    CHECK(inv.max_deviation <= 50 * p.tol);

    Vector z0(2);
    z0 << 0.5, F(0.0, v1(0.5))(0) + 1e-3;
    const auto g = off_manifold_diagnose(*red, 0.0, z0, 10.0, p);
    CHECK(g.cone_holds);
    CHECK(g.v_norm.back() > g.v_norm.front());
}

TEST_CASE("manifold preconditions") {
    // f(t, 0, 0) != 0 rules out the zero solution.
    const auto red = reduced(get_problem("forced-scalar"));
    CHECK_THROWS_AS(picard_stable(*red, 0.0, v1(0.1)), ConditionViolation);
    const auto sad = reduced(get_problem("diag-dichotomy"));
    CHECK_THROWS_AS(picard_stable(*sad, 0.0, Vector::Zero(2)), InvalidParameter);
    ManifoldParams bad;
    bad.alpha = 5.0;
    CHECK_THROWS_AS(picard_stable(*sad, 0.0, v1(0.1), bad), InvalidParameter);
}

TEST_CASE("large coupling is labeled outside the proven regime") {
    const auto red = reduced(get_problem("diag-dichotomy", RegistryOptions{.coupling = 0.2}));
    const ManifoldFn F(red, Side::Stable);
    const auto pt = F.point(0.0, v1(0.5));
    CHECK_FALSE(pt->proven_regime);
    bool labeled = false;
    for (const auto& l : pt->labels) {
        labeled = labeled || l == "outside proven contraction regime";
    }
    CHECK(labeled);
}
