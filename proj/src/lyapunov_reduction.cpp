#include "epcag/lyapunov_reduction.hpp"

#include "epcag/error.hpp"
#include "epcag/integrator.hpp"

#include <cmath>
#include <memory>

namespace epcag {

namespace {

/// Modified Gram-Schmidt over the candidate columns, dropping dependent ones.
Matrix orthonormalize(const std::vector<Vector>& candidates, int expected, int n) {
    std::vector<Vector> basis;
    for (const Vector& c : candidates) {
        Vector v = c;
        for (const Vector& b : basis) {
            v -= b.dot(v) * b;
        }
        for (const Vector& b : basis) {
            v -= b.dot(v) * b;
        }
        const double norm = v.norm();
        if (norm > 1e-10 * std::max(1.0, c.norm())) {
            v /= norm;
            Eigen::Index imax = 0;
            v.cwiseAbs().maxCoeff(&imax);
            if (v[imax] < 0.0) {
                v = -v;
            }
            basis.push_back(v);
        }
    }
    if (static_cast<int>(basis.size()) != expected) {
        throw NoDichotomy("invariant subspace has dimension " + std::to_string(basis.size()) + ", expected " +
                          std::to_string(expected));
    }
    Matrix Q(n, expected);
    for (int j = 0; j < expected; ++j) {
        Q.col(j) = basis[static_cast<std::size_t>(j)];
    }
    return Q;
}

}  // namespace

Matrix ReducedSystem::B_plus(double t) const {
    if (B_plus_const) {
        return *B_plus_const;
    }
    return original.A(t).topLeftCorner(k, k);
}

Matrix ReducedSystem::B_minus(double t) const {
    if (B_minus_const) {
        return *B_minus_const;
    }
    return original.A(t).bottomRightCorner(n - k, n - k);
}

Matrix ReducedSystem::B(double t) const {
    Matrix b = Matrix::Zero(n, n);
    b.topLeftCorner(k, k) = B_plus(t);
    b.bottomRightCorner(n - k, n - k) = B_minus(t);
    return b;
}

Vector ReducedSystem::g(double t, const Vector& z, const Vector& w) const {
    return U_inv * original.f(t, U * z, U * w);
}

SystemSpec ReducedSystem::as_system() const {
    auto self = *this;
    SystemSpec s(
        original.name + "/reduced", n, [self](double t) { return self.B(t); },
        [self](double t, const Vector& z, const Vector& w) { return self.g(t, z, w); }, original.grid);
    if (constant_blocks()) {
        s.constant_A = B(0.0);
        s.mu = Constant{operator_norm(*s.constant_A), false};
    } else if (original.mu) {
        s.mu = original.mu;
    }
    s.lip = Constant{L, original.lip ? original.lip->estimated : true};
    s.period = original.period;
    s.dichotomy = DeclaredDichotomy{K, sigma, k};
    return s;
}

ReducedSystem reduce(const SystemSpec& spec, const DichotomyData& dich) {
    ReducedSystem red{.original = spec};
    const int n = spec.n;
    red.n = n;
    red.k = dich.k_plus;
    red.K = dich.K;
    red.sigma = dich.sigma;
    red.lip = spec.lip ? spec.lip->value : 0.0;

    if (spec.constant_A) {
        const Matrix& A = *spec.constant_A;
        if (dich.eigenvectors.size() == 0) {
            throw UnsupportedSystem("constant A needs a dichotomy built from its eigen-decomposition");
        }
        std::vector<Vector> stable, unstable;
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXcd v = dich.eigenvectors.col(i);
            auto& bucket = dich.eigenvalues(i).real() < 0.0 ? stable : unstable;
            bucket.push_back(v.real());
            if (v.imag().norm() > 1e-14) {
                bucket.push_back(v.imag());
            }
        }
        Matrix U(n, n);
        if (red.k > 0) {
            U.leftCols(red.k) = orthonormalize(stable, red.k, n);
        }
        if (n - red.k > 0) {
            U.rightCols(n - red.k) = orthonormalize(unstable, n - red.k, n);
        }
        red.U = U;
        red.U_inv = U.inverse();
        const Matrix B = red.U_inv * A * U;
        const double off = std::max(B.topRightCorner(red.k, n - red.k).norm(), B.bottomLeftCorner(n - red.k, red.k).norm());
        if (off > 1e-8 * std::max(1.0, A.norm())) {
            throw NoDichotomy("eigenbasis transformation did not decouple A (off-block norm " + std::to_string(off) + ")");
        }
        red.B_plus_const = B.topLeftCorner(red.k, red.k);
        red.B_minus_const = B.bottomRightCorner(n - red.k, n - red.k);
    } else {
        // Time-varying A is accepted only when it is already box-diagonal with the split aligned to coordinates.
        const Window w = spec.grid.window();
        const int k = red.k;
        for (int i = 0; i <= 200; ++i) {
            const double t = w.lo + w.length() * i / 200.0;
            const Matrix A = spec.A(t);
            const double off = std::max(A.topRightCorner(k, n - k).norm(), A.bottomLeftCorner(n - k, k).norm());
            if (off > 1e-12 * std::max(1.0, A.norm())) {
                throw UnsupportedSystem(
                    "time-varying A must be box-diagonal with the stable block first; off-block norm " +
                    std::to_string(off) + " at t = " + std::to_string(t));
            }
        }
        red.U = Matrix::Identity(n, n);
        red.U_inv = red.U;
    }
    red.U_norm = operator_norm(red.U);
    red.U_inv_norm = operator_norm(red.U_inv);
    red.L = 2.0 * red.U_norm * red.U_inv_norm * red.lip;
    return red;
}

SplitPropagators propagators(const ReducedSystem& red, const FlowOptions& opt) {
    SplitPropagators p;
    const double step = opt.max_step;
    if (red.constant_blocks()) {
        const Matrix bp = *red.B_plus_const;
        const Matrix bm = *red.B_minus_const;
        p.Uprop = [bp, step](double t, double s) { return rk4_fundamental_constant(bp, t, s, step); };
        p.Vprop = [bm, step](double t, double s) { return rk4_fundamental_constant(bm, t, s, step); };
    } else {
        auto red_copy = std::make_shared<ReducedSystem>(red);
        p.Uprop = [red_copy, step](double t, double s) {
            if (red_copy->k == 0) {
                return Matrix(0, 0);
            }
            return rk4_fundamental([red_copy](double r) { return red_copy->B_plus(r); }, t, s, step);
        };
        p.Vprop = [red_copy, step](double t, double s) {
            if (red_copy->n == red_copy->k) {
                return Matrix(0, 0);
            }
            return rk4_fundamental([red_copy](double r) { return red_copy->B_minus(r); }, t, s, step);
        };
    }
    return p;
}

PropagatorBoundReport check_propagator_bounds(const ReducedSystem& red, std::span<const double> gaps, double t_start,
                                              double tolerance, const FlowOptions& opt) {
    PropagatorBoundReport r;
    const auto p = propagators(red, opt);
    for (double d : gaps) {
        PropagatorBoundRow row;
        row.s = t_start;
        row.t = t_start + d;
        row.bound_U = red.K * std::exp(-red.sigma * d);
        row.bound_V = row.bound_U;
        row.norm_U = red.k > 0 ? operator_norm(p.Uprop(t_start + d, t_start)) : 0.0;
        row.norm_V = red.n - red.k > 0 ? operator_norm(p.Vprop(t_start, t_start + d)) : 0.0;
        r.max_excess = std::max({r.max_excess, row.norm_U - row.bound_U, row.norm_V - row.bound_V});
        r.rows.push_back(row);
    }
    r.within_bounds = r.max_excess <= tolerance;
    return r;
}

}  // namespace epcag
