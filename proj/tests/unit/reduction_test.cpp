#include "doctest.h"

#include "epcag/error.hpp"
#include "epcag/linear_flow.hpp"
#include "epcag/lyapunov_reduction.hpp"
#include "epcag/system_model.hpp"

#include <cmath>
#include <random>

using namespace epcag;

namespace {

SystemSpec coupled(const Matrix& A, double a) {
    const int n = static_cast<int>(A.rows());
    SystemSpec s("c", n, [A](double) { return A; },
                 [a, n](double t, const Vector& y, const Vector& w) {
                     Vector out(n);
                     for (int i = 0; i < n; ++i) {
                         out(i) = a * std::sin(y((i + 1) % n) + w(i) + t);
                     }
                     return out;
                 },
                 ThetaGrid::uniform(1.0, 0.0, {-100, 100}));
    s.constant_A = A;
    s.mu = Constant{operator_norm(A), false};
    s.lip = Constant{2.0 * a, false};
    return s;
}

}  // namespace

TEST_CASE("reduction block-diagonalizes a non-normal matrix") {
    Matrix A(3, 3);
    A << -1.0, 2.0, 0.5, 0.0, 1.5, -1.0, 0.0, 0.0, -0.5;
    const auto spec = coupled(A, 0.01);
    const auto red = reduce(spec, dichotomy_for(spec));
    CHECK(red.n == 3);
    CHECK(red.k == 2);
    const Matrix B = red.U_inv * A * red.U;
    CHECK(B.topRightCorner(2, 1).norm() <= 1e-12);
    CHECK(B.bottomLeftCorner(1, 2).norm() <= 1e-12);
    REQUIRE(red.constant_blocks());
    CHECK((*red.B_plus_const - B.topLeftCorner(2, 2)).norm() <= 1e-12);
    // Stable block has eigenvalues with negative real part.
    Eigen::EigenSolver<Matrix> es(*red.B_plus_const);
    for (int i = 0; i < 2; ++i) {
        CHECK(es.eigenvalues()(i).real() < 0.0);
    }
    CHECK(red.L == doctest::Approx(2.0 * red.U_norm * red.U_inv_norm * 0.02));
    CHECK(red.U_norm == doctest::Approx(operator_norm(red.U)));
}

TEST_CASE("reduced nonlinearity is U^-1 f(t, U z, U w)") {
    Matrix A(2, 2);
    A << -1.0, 3.0, 0.0, 2.0;
    const auto spec = coupled(A, 0.2);
    const auto red = reduce(spec, dichotomy_for(spec));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 20; ++i) {
        const Vector z = Vector::NullaryExpr(2, [&](Eigen::Index) { return u(rng); });
        const Vector w = Vector::NullaryExpr(2, [&](Eigen::Index) { return u(rng); });
        const double t = 3.0 * u(rng);
        const Vector want = red.U_inv * eval_f(spec, t, red.U * z, red.U * w);
        REQUIRE((red.g(t, z, w) - want).norm() <= 1e-14);
        REQUIRE((red.g_plus(t, z, w) - want.head(1)).norm() <= 1e-14);
    }
}

TEST_CASE("property: reduced Lipschitz constant bounds sampled quotients") {
    Matrix A(2, 2);
    A << -2.0, 1.0, 0.0, 1.0;
    const auto spec = coupled(A, 0.1);
    const auto red = reduce(spec, dichotomy_for(spec));
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 500; ++i) {
        auto r = [&] { return Vector::NullaryExpr(2, [&](Eigen::Index) { return u(rng); }).eval(); };
        const Vector z1 = r(), z2 = r(), w1 = r(), w2 = r();
        const double t = u(rng);
        const double lhs = (red.g(t, z1, w1) - red.g(t, z2, w2)).norm();
        REQUIRE(lhs <= red.L * ((z1 - z2).norm() + (w1 - w2).norm()) + 1e-14);
    }
}

TEST_CASE("propagator bounds hold for a diagonal saddle") {
    const auto spec = get_problem("diag-dichotomy");
    const auto red = reduce(spec, dichotomy_for(spec));
    const std::vector<double> gaps{0.5, 1.0, 3.0};
    const auto rep = check_propagator_bounds(red, gaps, 0.0);
    CHECK(rep.within_bounds);
    for (const auto& row : rep.rows) {
        CHECK(row.norm_U == doctest::Approx(std::exp(-(row.t - row.s))));
    }
}

TEST_CASE("reduced system behaves as an EPCAG in z") {
    const auto spec = get_problem("diag-dichotomy", RegistryOptions{.coupling = 0.05});
    const auto red = reduce(spec, dichotomy_for(spec));
    const SystemSpec zs = red.as_system();
    CHECK(zs.n == 2);
    Vector z(2), w(2);
    z << 0.1, 0.2;
    w << 0.3, 0.4;
    CHECK((eval_rhs(zs, 0.5, z, w) - (red.B(0.5) * z + red.g(0.5, z, w))).norm() <= 1e-14);
}
