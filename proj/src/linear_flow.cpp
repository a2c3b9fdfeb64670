#include "epcag/linear_flow.hpp"

#include "epcag/error.hpp"
#include "epcag/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace epcag {

Matrix fundamental_matrix(const MatrixField& A, double t, double s, const FlowOptions& opt) {
    return rk4_fundamental(A, t, s, opt.max_step);
}

Matrix fundamental_matrix(const SystemSpec& spec, double t, double s, const FlowOptions& opt) {
    if (!spec.grid.contains(t) || !spec.grid.contains(s)) {
        throw OutOfWindow("fundamental_matrix: times outside the system window");
    }
    if (spec.constant_A) {
        return rk4_fundamental_constant(*spec.constant_A, t, s, opt.max_step);
    }
    return rk4_fundamental(spec.A, t, s, opt.max_step);
}

FlowBounds flow_bounds(double mu, double theta) {
    if (!(mu >= 0.0) || !(theta > 0.0)) {
        throw InvalidParameter("flow_bounds: need mu >= 0 and theta > 0");
    }
    return FlowBounds{std::exp(mu * theta), std::exp(-mu * theta)};
}

FlowBoundReport verify_flow_bounds(const SystemSpec& spec, std::span<const std::pair<double, double>> pairs,
                                   double tolerance, const FlowOptions& opt) {
    FlowBoundReport r;
    r.tolerance = tolerance;
    if (spec.mu) {
        r.mu = spec.mu->value;
        r.mu_estimated = spec.mu->estimated;
    } else {
        r.mu = estimate_mu(spec, spec.grid.window(), 2001);
        r.mu_estimated = true;
    }
    for (const auto& [t, s] : pairs) {
        const double norm = operator_norm(fundamental_matrix(spec, t, s, opt));
        const double d = std::abs(t - s);
        const double upper = std::exp(r.mu * d);
        const double lower = std::exp(-r.mu * d);
        r.max_violation = std::max({r.max_violation, norm - upper, lower - norm});
        ++r.pairs;
    }
    r.pass = r.max_violation <= tolerance;
    return r;
}

DichotomyData dichotomy_for_constant_A(const Matrix& A, double tol) {
    if (A.rows() != A.cols() || A.rows() == 0) {
        throw InvalidParameter("dichotomy_for_constant_A: A must be square and nonempty");
    }
    const int n = static_cast<int>(A.rows());
    Eigen::EigenSolver<Matrix> es(A);
    if (es.info() != Eigen::Success) {
        throw NoDichotomy("eigen-decomposition failed");
    }
    const Eigen::VectorXcd lambda = es.eigenvalues();
    const Eigen::MatrixXcd V = es.eigenvectors();

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
    const auto sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || sv(0) / smin > 1e10) {
        throw NoDichotomy("A is not diagonalizable (eigenvector matrix is singular)");
    }

    DichotomyData d;
    d.sigma = std::numeric_limits<double>::infinity();
    Eigen::VectorXcd select = Eigen::VectorXcd::Zero(n);
    for (int i = 0; i < n; ++i) {
        const double re = lambda(i).real();
        if (std::abs(re) < tol) {
            throw NoDichotomy("eigenvalue with zero real part: " + std::to_string(re) + " + " +
                              std::to_string(lambda(i).imag()) + "i");
        }
        d.sigma = std::min(d.sigma, std::abs(re));
        if (re < 0.0) {
            select(i) = 1.0;
            ++d.k_plus;
        }
    }
    const Eigen::MatrixXcd Vinv = V.inverse();
    d.P = (V * select.asDiagonal() * Vinv).real();
    d.K = sv(0) / smin;
    d.eigenvectors = V;
    d.eigenvalues = lambda;
    return d;
}

DichotomyData dichotomy_for(const SystemSpec& spec) {
    if (spec.constant_A) {
        DichotomyData d = dichotomy_for_constant_A(*spec.constant_A);
        d.window = spec.grid.window();
        return d;
    }
    if (spec.dichotomy) {
        DichotomyData d;
        d.K = spec.dichotomy->K;
        d.sigma = spec.dichotomy->sigma;
        d.k_plus = spec.dichotomy->k;
        d.P = Matrix::Zero(spec.n, spec.n);
        d.P.topLeftCorner(d.k_plus, d.k_plus).setIdentity();
        d.window = spec.grid.window();
        return d;
    }
    throw NoDichotomy("time-varying A without a declared [dichotomy] section");
}

DichotomyCheck verify_dichotomy(const SystemSpec& spec, const DichotomyData& d, Window window, int samples,
                                std::uint64_t seed, const FlowOptions& opt) {
    // In the supported classes P commutes with the flow, so X(t) P X^{-1}(s) = X(t,s) P.
    DichotomyCheck c;
    c.projection_defect = (d.P * d.P - d.P).norm();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Matrix I = Matrix::Identity(spec.n, spec.n);
    const double span = std::min(5.0, window.length());
    for (int i = 0; i < samples; ++i) {
        const double s = window.lo + unit(rng) * (window.length() - span);
        const double t = s + unit(rng) * span;
        const Matrix forward = fundamental_matrix(spec, t, s, opt);
        const Matrix backward = fundamental_matrix(spec, s, t, opt);
        const double st = operator_norm(forward * d.P) / (d.K * std::exp(-d.sigma * (t - s)));
        const double un = operator_norm(backward * (I - d.P)) / (d.K * std::exp(-d.sigma * (t - s)));
        c.max_stable_ratio = std::max(c.max_stable_ratio, st);
        c.max_unstable_ratio = std::max(c.max_unstable_ratio, un);
        ++c.pairs;
    }
    c.pass = c.projection_defect <= 1e-10 && c.max_stable_ratio <= 1.0 + 1e-8 && c.max_unstable_ratio <= 1.0 + 1e-8;
    return c;
}

InequalityResult check_backward_uniqueness(double mu, double lip, double theta) {
    if (mu < 0.0 || lip < 0.0 || !(theta > 0.0)) {
        throw InvalidParameter("check_backward_uniqueness: need mu >= 0, l >= 0, theta > 0");
    }
    const auto [M, m] = flow_bounds(mu, theta);
    InequalityResult r;
    r.name = "bw";
    r.formula = "l M theta [1 + M (1 + l theta) exp(M l theta)] < m";
    r.lhs = lip * M * theta * (1.0 + M * (1.0 + lip * theta) * std::exp(M * lip * theta));
    r.rhs = m;
    r.holds = r.lhs < r.rhs;
    return r;
}

const InequalityResult& SmallnessReport::item(std::string_view name) const {
    for (const auto& i : items) {
        if (i.name == name) {
            return i;
        }
    }
    throw InvalidParameter("no inequality named " + std::string(name));
}

SmallnessReport check_smallness(double K, double sigma, double alpha, double theta, double L, double eps) {
    if (!(alpha > 0.0) || !(alpha < sigma)) {
        throw InvalidParameter("check_smallness: need 0 < alpha < sigma");
    }
    if (!(K >= 1.0) || !(theta > 0.0) || !(L >= 0.0) || !(eps > 0.0)) {
        throw InvalidParameter("check_smallness: need K >= 1, theta > 0, L >= 0, eps > 0");
    }
    const double es = std::exp(sigma * theta);
    const double ea = std::exp(alpha * theta);
    SmallnessReport r;
    auto add = [&](std::string name, std::string formula, double lhs, double rhs) {
        r.items.push_back(InequalityResult{std::move(name), std::move(formula), lhs, rhs, lhs < rhs});
    };
    add("iterate-bound", "K (K+eps) 2 sigma/(sigma^2-alpha^2) (1+exp(sigma theta)) L < eps",
        K * (K + eps) * (2.0 * sigma / (sigma * sigma - alpha * alpha)) * (1.0 + es) * L, eps);
    add("F-lipschitz", "4 sigma K L (1+exp(sigma theta)) < sigma^2 - alpha^2", 4.0 * sigma * K * L * (1.0 + es),
        sigma * sigma - alpha * alpha);
    add("contraction", "L < (sigma-alpha) / (2K (1+exp(sigma theta)))", L, (sigma - alpha) / (2.0 * K * (1.0 + es)));
    add("C6", "2 K L / sigma < 1", 2.0 * K * L / sigma, 1.0);
    add("cone", "K (K^2+1)(1+exp(alpha theta)) L < sigma", K * (K * K + 1.0) * (1.0 + ea) * L, sigma);
    r.all_hold = std::all_of(r.items.begin(), r.items.end(), [](const auto& i) { return i.holds; });
    return r;
}

}  // namespace epcag
