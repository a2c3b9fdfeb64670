#include "doctest.h"

#include "../../src/inequality_table.hpp"
#include "epcag/error.hpp"
#include "epcag/linear_flow.hpp"
#include "epcag/system_model.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

using namespace epcag;

namespace {

SystemSpec constant_system(const Matrix& A) {
    SystemSpec s("const", static_cast<int>(A.rows()), [A](double) { return A; },
                 [n = A.rows()](double, const Vector&, const Vector&) { return Vector::Zero(n).eval(); },
                 ThetaGrid::uniform(1.0, 0.0, {-100, 100}));
    s.constant_A = A;
    s.mu = Constant{operator_norm(A), false};
    return s;
}

}  // namespace

TEST_CASE("fundamental matrix of constant A is the matrix exponential") {
    Matrix A(2, 2);
    A << -1.0, 5.0, 0.0, 2.0;
    const auto s = constant_system(A);
    for (double d : {-1.3, 0.0, 0.4, 2.0}) {
        const Matrix X = fundamental_matrix(s, 1.0 + d, 1.0);
        const Matrix E = (A * d).exp();
        CHECK((X - E).norm() <= 1e-9 * (1.0 + E.norm()));
    }
}

TEST_CASE("fundamental matrix of time-varying A: scalar closed form") {
    // x' = cos(t) x  =>  X(t, s) = exp(sin t - sin s)
    MatrixField A = [](double t) { return Matrix::Constant(1, 1, std::cos(t)); };
    for (auto [t, s] : {std::pair{2.0, 0.5}, std::pair{-1.0, 3.0}, std::pair{0.3, 0.3}}) {
        const double want = std::exp(std::sin(t) - std::sin(s));
        CHECK(fundamental_matrix(A, t, s)(0, 0) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("flow bounds and their verification") {
    const auto b = flow_bounds(2.0, 0.5);
    CHECK(b.M == doctest::Approx(std::exp(1.0)));
    CHECK(b.m == doctest::Approx(std::exp(-1.0)));
    CHECK_THROWS_AS(flow_bounds(-1.0, 1.0), InvalidParameter);

    Matrix A(2, 2);
    A << 0.0, 1.0, -1.0, -0.3;
    const auto s = constant_system(A);
    std::vector<std::pair<double, double>> pairs;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 100; ++i) {
        const double t = u(rng);
        pairs.emplace_back(t, t + u(rng) / 2);
    }
    const auto rep = verify_flow_bounds(s, pairs);
    CHECK(rep.pass);
    CHECK(rep.max_violation <= 1e-8);
}

TEST_CASE("dichotomy of constant A: eigenvector condition number") {
    Matrix A(2, 2);
    A << -1.0, 5.0, 0.0, 2.0;
    const auto d = dichotomy_for(constant_system(A));
    CHECK(d.k_plus == 1);
    CHECK(d.sigma == doctest::Approx(1.0));
    Matrix V(2, 2);
    V << 1.0, 5.0, 0.0, 3.0;
    V.col(1).normalize();
    Eigen::JacobiSVD<Matrix> svd(V);
    CHECK(d.K == doctest::Approx(svd.singularValues()(0) / svd.singularValues()(1)).epsilon(1e-10));
    CHECK((d.P * d.P - d.P).norm() <= 1e-12);
    CHECK((d.P * A - A * d.P).norm() <= 1e-12);

    const auto chk = verify_dichotomy(constant_system(A), d, {-10, 10}, 50, 3);
    CHECK(chk.max_stable_ratio <= 1.0 + 1e-8);
    CHECK(chk.max_unstable_ratio <= 1.0 + 1e-8);
}

TEST_CASE("no dichotomy: imaginary-axis eigenvalue or time-varying A without declaration") {
    Matrix A(2, 2);
    A << 0.0, 1.0, -1.0, 0.0;
    CHECK_THROWS_AS(dichotomy_for(constant_system(A)), NoDichotomy);
    SystemSpec tv("tv", 1, [](double t) { return Matrix::Constant(1, 1, -2.0 + std::sin(t)); },
                  [](double, const Vector&, const Vector&) { return Vector::Zero(1).eval(); },
                  ThetaGrid::uniform(1.0, 0.0, {-10, 10}));
    CHECK_THROWS_AS(dichotomy_for(tv), NoDichotomy);
}

TEST_CASE("backward-uniqueness inequality") {
    // mu = 1, theta = 1, l = 0.2: lhs = 0.2 e (1 + 1.2 e e^{0.2 e}) = 3.5979..., fails against e^{-1}.
    const auto r = check_backward_uniqueness(1.0, 0.2, 1.0);
    CHECK(r.lhs == doctest::Approx(3.5979245286058750).epsilon(1e-14));
    CHECK(r.rhs == doctest::Approx(std::exp(-1.0)));
    CHECK_FALSE(r.holds);
    CHECK(check_backward_uniqueness(1.0, 0.01, 1.0).holds);
    CHECK(check_backward_uniqueness(2.0, 0.0, 1.0).holds);
}

TEST_CASE("inequalities against the frozen high-precision table") {
    for (const auto& row : oracle::kInequalityRows) {
        const auto bw = check_backward_uniqueness(row.mu, row.l, row.theta);
        CHECK(bw.lhs == doctest::Approx(row.bw_lhs).epsilon(4e-15));
        CHECK(bw.rhs == doctest::Approx(row.bw_rhs).epsilon(4e-15));
        const auto sm = check_smallness(row.K, row.sigma, row.alpha, row.theta, row.L, row.eps);
        CHECK(sm.item("iterate-bound").lhs == doctest::Approx(row.iterate_lhs).epsilon(4e-15));
        CHECK(sm.item("iterate-bound").rhs == doctest::Approx(row.iterate_rhs).epsilon(4e-15));
        CHECK(sm.item("contraction").lhs == doctest::Approx(row.contraction_lhs).epsilon(4e-15));
        CHECK(sm.item("contraction").rhs == doctest::Approx(row.contraction_rhs).epsilon(4e-15));
        CHECK(sm.item("C6").lhs == doctest::Approx(row.c6_lhs).epsilon(4e-15));
        CHECK(sm.item("cone").lhs == doctest::Approx(row.cone_lhs).epsilon(4e-15));
    }
}

TEST_CASE("property: backward-uniqueness lhs increases in l, mu and theta") {
    double prev = -1.0;
    for (double l = 0.0; l < 0.5; l += 0.01) {
        const double x = check_backward_uniqueness(1.0, l, 1.0).lhs;
        REQUIRE(x >= prev);
        prev = x;
    }
    prev = -1.0;
    for (double th = 0.05; th < 2.0; th += 0.05) {
        const double x = check_backward_uniqueness(1.0, 0.05, th).lhs;
        REQUIRE(x >= prev);
        prev = x;
    }
}

TEST_CASE("smallness rejects alpha outside (0, sigma)") {
    CHECK_THROWS_AS(check_smallness(1.0, 1.0, 1.5, 1.0, 0.01, 1.0), InvalidParameter);
    CHECK_THROWS_AS(check_smallness(1.0, 1.0, 0.0, 1.0, 0.01, 1.0), InvalidParameter);
}
