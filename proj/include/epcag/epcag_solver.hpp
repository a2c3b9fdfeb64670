#pragma once

#include "epcag/system_model.hpp"
#include "epcag/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace epcag {

struct SolverOptions {
    /// RK4 steps per full grid gap; partial intervals use the same step length.
    int substeps = 64;
    /// |y| above this aborts with BlowUp.
    double overflow_guard = 1e12;
};

struct PathPoint {
    double t = 0.0;
    Vector y;
    /// Grid interval the point belongs to (right-continuous at knots).
    long interval = 0;
    /// Frozen argument y(beta(t)) in effect at t.
    Vector w;
};

struct IntervalStats {
    long interval = 0;
    double t_begin = 0.0;
    double t_end = 0.0;
    int steps = 0;
};

enum class Direction { Forward, BackwardReconstructed };

/// Piecewise-C1 trajectory with every grid knot as a mesh point.
struct SolutionPath {
    std::vector<PathPoint> points;
    std::vector<double> knot_times;
    Direction direction = Direction::Forward;
    std::vector<IntervalStats> diagnostics;

    const PathPoint& front() const { return points.front(); }
    const PathPoint& back() const { return points.back(); }
    /// State at a mesh time (exact match within 1e-12 relative); throws OutOfWindow otherwise.
    const Vector& state_at(double t) const;
};

/// Forward integration. Each grid interval is integrated separately with the
/// argument frozen at its left knot. When t0 is not a knot the caller must
/// pass the frozen value w0 = y(beta(t0)).
SolutionPath solve_forward(const SystemSpec& spec, double t0, const Vector& y0, double t_end,
                           const SolverOptions& opt = {}, const std::optional<Vector>& w0 = std::nullopt);

/// State at `t` of y' = A y + f(t, y, frozen) started from (theta_i, start),
/// t in [theta_i, theta_{i+1}].
Vector flow_in_interval(const SystemSpec& spec, long i, const Vector& start, const Vector& frozen, double t,
                        const SolverOptions& opt = {});

/// One-interval forward map x0 -> y(theta_{i+1}) with y(theta_i) = x0 and frozen argument x0.
Vector shooting_map(const SystemSpec& spec, long i, const Vector& x0, const SolverOptions& opt = {});

enum class PreimageClass { None, Unique, Multiple };
std::string to_string(PreimageClass c);

struct Preimage {
    Vector x;
    double residual = 0.0;
    /// Found by fold refinement at a singular Jacobian (double root).
    bool degenerate = false;
};

struct PreimageSet {
    long interval = 0;
    double t_target = 0.0;
    Vector x_target;
    std::vector<Preimage> roots;
    PreimageClass classification = PreimageClass::None;
    /// No start converged: "none found" is not a proof of non-existence.
    bool budget_exhausted = false;
    int starts = 0;
};

struct BackOptions {
    SolverOptions solver;
    /// Newton starts per coordinate over [-R, R], R = max(10, 10 |x_target|).
    int lattice = 17;
    int max_iter = 50;
    /// Converged when |phi(x) - x_target| <= root_tol (1 + |x_target|).
    double root_tol = 1e-10;
    /// Double roots: accepted when the fold point residual is <= fold_tol (1 + |x_target|).
    double fold_tol = 1e-7;
    /// Roots closer than cluster_radius (1 + |x|) are the same root.
    double cluster_radius = 1e-5;
};

/// All x with |phi(x) - x_target| <= tol, where phi(x) is the state at t_target
/// of the interval-i problem started from (theta_i, x) with frozen argument x.
PreimageSet back_continue_interval(const SystemSpec& spec, long i, double t_target, const Vector& x_target,
                                   const BackOptions& opt = {});

struct BackContinuation {
    bool ok = false;
    /// Interval where no preimage was found.
    std::optional<long> failed_interval;
    std::vector<PreimageSet> steps;
    /// Some step had several preimages; the smallest-norm one was taken.
    bool non_unique = false;
    /// Backward-uniqueness inequality status (nullopt when mu or l is unknown).
    std::optional<bool> bw_holds;
    /// Reconstructed path on [t_target, t0] (valid when ok).
    SolutionPath path;
};

/// Chains back_continue_interval from (t0, x0) down to t_target < t0.
/// Throws ConditionViolation if the backward-uniqueness inequality holds yet a
/// step yields several preimages.
BackContinuation back_continue(const SystemSpec& spec, double t0, const Vector& x0, double t_target,
                               const BackOptions& opt = {});

}  // namespace epcag
