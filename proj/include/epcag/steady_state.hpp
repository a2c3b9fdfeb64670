#pragma once

#include "epcag/linear_flow.hpp"
#include "epcag/lyapunov_reduction.hpp"
#include "epcag/theta_grid.hpp"
#include "epcag/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace epcag {

struct SteadyParams {
    double tol = 1e-10;
    int max_iter = 500;
    /// Truncation horizon of both improper integrals; raised to the tail estimate when too short.
    std::optional<double> horizon;
    int substeps = 64;
    FlowOptions flow;
    /// Bound h on |f(t, 0, 0)|; the declared h0 (or a sampled maximum) when absent.
    std::optional<double> h;
    bool probe_uniqueness = true;
    std::uint64_t seed = 1;
};

struct BoundedSolveResult {
    Window window;
    /// Solution at the mesh nodes inside the window.
    std::vector<double> times;
    Matrix z;
    double sup_norm = 0.0;
    /// 2KH / (sigma - 2KL)
    double bound = 0.0;
    bool within_bound = false;
    double h = 0.0;
    bool h_estimated = false;
    /// |U| |U^{-1}| h
    double H = 0.0;
    /// 2KL / sigma
    double contraction_factor = 0.0;
    double horizon = 0.0;

    int iterations = 0;
    std::vector<double> diffs;
    /// max_m d_m / ((2KL/sigma)^{m+1} H/L); absent when L = 0.
    std::optional<double> geometric_worst;
    bool geometric_holds = true;
    /// sup |u_1| and sup |v_1| against KH/sigma.
    double first_u_sup = 0.0;
    double first_v_sup = 0.0;
    double first_bound = 0.0;
    bool first_iterate_holds = true;

    /// sup distance to the fixed point reached from a perturbed initial iterate.
    std::optional<double> uniqueness_residual;
    std::vector<std::string> labels;

    /// Whole quadrature mesh (window plus horizons on both sides).
    std::vector<double> mesh_times;
    Matrix mesh_z;
};

/// The solution bounded on the whole line, computed on `window`.
/// Throws ConditionViolation when 2KL/sigma >= 1 or |f(t,0,0)| > h at a mesh node.
BoundedSolveResult bounded_solution(const ReducedSystem& red, Window window, const SteadyParams& params = {});

/// omega / omega_bar = k / m in lowest terms; the periodic solution has period m omega.
struct PeriodicityParams {
    double omega = 0.0;
    double omega_bar = 0.0;
    int p = 1;
    long k = 1;
    long m = 1;
    double period = 0.0;
};

/// Continued-fraction detection of omega / omega_bar within 1e-9 (relative).
/// Throws InvalidParameter when no denominator up to 1e6 fits.
PeriodicityParams periodicity_params(double omega, double omega_bar, int p = 1);

struct PeriodicSolveResult {
    PeriodicityParams pp;
    BoundedSolveResult bounded;
    /// One period [t_start, t_start + m omega].
    std::vector<double> times;
    Matrix z;
    /// max |z(t + m omega) - z(t)| over one period of mesh nodes.
    double residual = 0.0;
    bool certified = false;
    /// Same residual for every iterate z_m.
    double worst_iterate_residual = 0.0;
    bool iterates_periodic = true;
    /// Backward-uniqueness inequality (absent when mu or l is unknown).
    std::optional<bool> bw_holds;
};

/// Requires: A and f omega-periodic in t (sampled), the grid periodic with
/// (p, omega_bar) matching `pp`, and the bounded-solution conditions.
PeriodicSolveResult periodic_solution(const ReducedSystem& red, const PeriodicityParams& pp,
                                      const SteadyParams& params = {});

}  // namespace epcag
