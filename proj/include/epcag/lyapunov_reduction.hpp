#pragma once

#include "epcag/linear_flow.hpp"
#include "epcag/system_model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace epcag {

using ReducedNonlinearity = std::function<Vector(double t, const Vector& z, const Vector& w)>;

/// System in box-diagonal form after y = U z:
///   u' = B+(t) u + g+(t, z, z(beta(t))),   v' = B-(t) v + g-(t, z, z(beta(t)))
/// with z = (u, v), u in R^k (stable), v in R^{n-k} (unstable).
///
/// Only constant transformations are supported: U = I for an already
/// box-diagonal A, or a blockwise-orthonormalised eigenbasis for constant A.
struct ReducedSystem {
    SystemSpec original;
    int n = 0;
    int k = 0;

    Matrix U{};
    Matrix U_inv{};
    /// Constant blocks, when A is constant.
    std::optional<Matrix> B_plus_const{};
    std::optional<Matrix> B_minus_const{};

    double U_norm = 1.0;
    double U_inv_norm = 1.0;
    /// l of the original f.
    double lip = 0.0;
    /// Lipschitz constant of (g+, g-): 2 |U| |U^{-1}| l.
    double L = 0.0;
    double K = 1.0;
    double sigma = 0.0;

    int unstable_dim() const { return n - k; }
    Matrix Utrans(double) const { return U; }
    Matrix B_plus(double t) const;
    Matrix B_minus(double t) const;
    /// diag{B+(t), B-(t)}
    Matrix B(double t) const;

    /// (g+, g-)(t, z, w) = U^{-1} f(t, U z, U w), stacked.
    Vector g(double t, const Vector& z, const Vector& w) const;
    Vector g_plus(double t, const Vector& z, const Vector& w) const { return g(t, z, w).head(k); }
    Vector g_minus(double t, const Vector& z, const Vector& w) const { return g(t, z, w).tail(n - k); }

    /// The reduced system as an EPCAG system in z coordinates (same grid).
    SystemSpec as_system() const;

    bool constant_blocks() const { return B_plus_const.has_value(); }
};

/// Throws UnsupportedSystem for time-varying A that is not box-diagonal with
/// the declared split, and NoDichotomy when the dichotomy cannot be built.
ReducedSystem reduce(const SystemSpec& spec, const DichotomyData& dich);

/// Normed fundamental matrices of u' = B+ u and v' = B- v.
struct SplitPropagators {
    std::function<Matrix(double t, double s)> Uprop;
    std::function<Matrix(double t, double s)> Vprop;
};

SplitPropagators propagators(const ReducedSystem& red, const FlowOptions& opt = {});

struct PropagatorBoundRow {
    double t = 0.0;
    double s = 0.0;
    double norm_U = 0.0;  // |Uprop(s + d, s)|
    double bound_U = 0.0; // K e^{-sigma d}
    double norm_V = 0.0;  // |Vprop(s, s + d)|
    double bound_V = 0.0;
};

struct PropagatorBoundReport {
    std::vector<PropagatorBoundRow> rows;
    double max_excess = 0.0;
    /// False is a warning: the sampled norms exceed K e^{-sigma d} by more than `tolerance`.
    bool within_bounds = true;
};

PropagatorBoundReport check_propagator_bounds(const ReducedSystem& red, std::span<const double> gaps, double t_start,
                                              double tolerance = 1e-8, const FlowOptions& opt = {});

}  // namespace epcag
