#pragma once

#include "epcag/integral_mesh.hpp"
#include "epcag/linear_flow.hpp"
#include "epcag/lyapunov_reduction.hpp"
#include "epcag/types.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace epcag {

enum class Side { Stable, Unstable };
std::string to_string(Side s);

struct ManifoldParams {
    /// Decay rate in (0, sigma); sigma/2 when absent.
    std::optional<double> alpha;
    /// Bound slack; K when absent.
    std::optional<double> eps;
    double tol = 1e-8;
    int max_iter = 500;
    /// Truncation horizon for the improper integral; raised to the tail estimate when too short.
    std::optional<double> horizon;
    /// A-priori bound constant; (K + eps)|c| when absent.
    std::optional<double> N;
    /// Quadrature steps per grid gap.
    int substeps = 64;
    FlowOptions flow;
};

/// One evaluation of the stable (or unstable) manifold function at (t0, c).
struct ManifoldPoint {
    Side side = Side::Stable;
    double t0 = 0.0;
    Vector c;
    /// F(t0, c): the v-component at t0 (stable side) or the u-component (unstable side).
    Vector F;

    /// Converged iterate on the whole quadrature mesh; column j at times[j].
    std::vector<double> times;
    Matrix z;
    /// Mesh index of t0.
    int anchor = 0;

    int iterations = 0;
    /// sup-norm changes d_m = |z_{m+1} - z_m|.
    std::vector<double> diffs;
    /// d_m / d_{m-1} for m >= 1 (index 0 holds m = 1).
    std::vector<double> ratios;
    /// Largest ratio with m >= 2 (the last ratio when fewer are available; 0 when none).
    double contraction_ratio = 0.0;
    /// 2KL(1 + e^{sigma theta}) / (sigma - alpha)
    double theoretical_ratio = 0.0;

    /// max over iterates and mesh points on the solution side of |z_m(t)| / (N e^{-alpha|t - t0|})
    double decay_ratio_max = 0.0;
    bool decay_holds = true;

    double alpha = 0.0;
    double eps = 0.0;
    double N = 0.0;
    double horizon = 0.0;
    double tol = 0.0;

    SmallnessReport smallness;
    /// False outside the proven contraction regime or when constants are estimates.
    bool proven_regime = true;
    std::vector<std::string> labels;
};

ManifoldPoint picard_stable(const ReducedSystem& red, double t0, const Vector& c, const ManifoldParams& params = {});
ManifoldPoint picard_unstable(const ReducedSystem& red, double t0, const Vector& c_minus,
                              const ManifoldParams& params = {});

/// c -> F(t0, c) on one side, memoised by (t0, c) rounded to 1e-12.
/// Evaluations of distinct keys may run concurrently.
class ManifoldFn {
public:
    ManifoldFn(std::shared_ptr<const ReducedSystem> red, Side side, ManifoldParams params = {});

    std::shared_ptr<const ManifoldPoint> point(double t0, const Vector& c) const;
    Vector operator()(double t0, const Vector& c) const { return point(t0, c)->F; }

    const ReducedSystem& reduced() const { return *red_; }
    Side side() const { return side_; }
    const ManifoldParams& params() const { return params_; }
    std::size_t memo_size() const;

    /// Domain dimension (k on the stable side, n - k on the unstable side).
    int input_dim() const;
    int output_dim() const;

private:
    using Key = std::pair<double, std::vector<double>>;
    std::shared_ptr<const ReducedSystem> red_;
    Side side_;
    ManifoldParams params_;
    mutable std::mutex mutex_;
    mutable std::map<Key, std::shared_ptr<const ManifoldPoint>> memo_;
};

/// dF/dc at (t0, c) from the variational integral equations along the
/// converged trajectory. Partials of g by central differences with step
/// 1e-6 (1 + |arg|). Throws ConditionViolation when the difference quotients
/// at steps 1e-6 and 1e-5 disagree beyond 1e-4 (1 + |dg|) at sampled points.
Matrix jacobian_F(const ManifoldFn& manifold, double t0, const Vector& c);

/// |F(t0,c1) - F(t0,c2)| <= 2K^2 L (1 + e^{sigma theta}) / (sigma + alpha) |c1 - c2| on sampled pairs.
struct LipschitzCertificate {
    double constant = 0.0;
    double max_quotient = 0.0;
    int pairs = 0;
    bool holds = true;
};
LipschitzCertificate lipschitz_certificate(const ManifoldFn& manifold, double t0,
                                           std::span<const std::pair<Vector, Vector>> pairs);

/// sup-norm distance between the fixed points reached from z0 = 0 and from a
/// small random initial iterate.
double manifold_uniqueness_probe(const ReducedSystem& red, Side side, double t0, const Vector& c,
                                 const ManifoldParams& params = {}, std::uint64_t seed = 1);

struct InvarianceReport {
    std::vector<double> knots;
    /// |v(t) - F(t, u(t))| at each knot, in reduced coordinates.
    std::vector<double> deviation;
    double max_deviation = 0.0;
    /// Deviation strictly increasing over the knots.
    bool monotone_growth = false;
};

/// Integrates the original system forward from y0 = U (c, F(t0,c) + v_offset)
/// and compares v with F(t, u) at every knot in (t0, t0 + T]. Stable side only.
InvarianceReport invariance_check(const SystemSpec& spec, const ManifoldFn& manifold, double t0, const Vector& c,
                                  double T, double v_offset = 0.0);

struct GrowthReport {
    std::vector<double> knots;
    std::vector<double> u_norm;
    std::vector<double> v_norm;
    /// First knot with |u| <= K^2 |v|.
    std::optional<double> cone_entry;
    /// First knot with |u| <= |v| (t0 itself when |u0| <= |v0|); the lower bound starts here.
    std::optional<double> reference;
    /// sigma - K L (1 + K^2)(1 + e^{alpha theta})
    double lower_rate = 0.0;
    /// |v(t)| >= (|v_ref| / K) e^{lower_rate (t - t_ref)} (1 - 1e-3) at all knots after the reference.
    bool lower_bound_holds = true;
    double worst_lower_ratio = 0.0;
    /// |u| <= K^2 |v| at all knots after the reference.
    bool cone_holds = true;
    /// sigma - 2 K L (1 + e^{alpha theta})
    double u_decay_rate = 0.0;
    /// |u(t)| <= K |u0| e^{-u_decay_rate (t - t0)} (1 + 1e-3) at knots before the reference.
    bool u_decay_holds = true;
    /// Least-squares slope of log|v| over knots after the reference.
    std::optional<double> growth_exponent;
    bool diverged = false;
    std::string note;
};

/// Forward integration of the reduced system from an off-manifold point.
/// Throws ConditionViolation if K(K^2+1)(1+e^{alpha theta})L >= sigma or if z0
/// lies on the stable manifold (|v0 - F(t0,u0)| <= 10 tol).
GrowthReport off_manifold_diagnose(const ReducedSystem& red, double t0, const Vector& z0, double T,
                                   const ManifoldParams& params = {});

}  // namespace epcag
