#include "epcag/steady_state.hpp"

#include "epcag/error.hpp"
#include "epcag/integral_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

namespace epcag {

namespace {

using TimeMap = std::function<double(double)>;
using IterateHook = std::function<void(int, const Matrix&, const IntegralMesh&)>;

double sup_over(const Matrix& z, int lo, int hi, int row0, int rows) {
    double s = 0.0;
    for (int j = lo; j <= hi; ++j) {
        s = std::max(s, z.block(row0, j, rows, 1).norm());
    }
    return s;
}

BoundedSolveResult solve_bounded(const ReducedSystem& red, Window window, const SteadyParams& p,
                                 const TimeMap& time_map, const IterateHook& hook) {
    if (!(window.hi > window.lo)) {
        throw InvalidParameter("bounded_solution needs a window with lo < hi");
    }
    if (!(red.sigma > 0.0)) {
        throw NoDichotomy("reduced system has no dichotomy rate");
    }
    if (!(p.tol > 0.0) || p.max_iter < 1) {
        throw InvalidParameter("need tol > 0 and max_iter >= 1");
    }
    const double K = red.K;
    const double sigma = red.sigma;
    const double L = red.L;
    const double theta = red.original.grid.gap_bound();

    BoundedSolveResult res;
    res.window = window;
    res.contraction_factor = 2.0 * K * L / sigma;
    if (!(res.contraction_factor < 1.0)) {
        std::ostringstream msg;
        msg << "2KL/sigma = " << res.contraction_factor << " is not below 1 (margin "
            << 1.0 - res.contraction_factor << ")";
        throw ConditionViolation(msg.str());
    }
    if (!red.original.lip) {
        res.labels.push_back("Lipschitz constant not declared");
    } else if (red.original.lip->estimated) {
        res.labels.push_back("based on sampled estimates");
    }

    const auto g0_at = [&](double t) {
        const Vector zero = Vector::Zero(red.n);
        return eval_f(red.original, time_map(t), zero, zero).norm();
    };
    if (p.h) {
        res.h = *p.h;
    } else if (red.original.h0) {
        res.h = *red.original.h0;
    } else {
        res.h_estimated = true;
        res.labels.push_back("h sampled on the mesh");
    }

    // A first pass with the declared h sizes the horizon; an estimated h is
    // refined on the mesh afterwards.
    const auto horizon_for = [&](double h) {
        const double H = red.U_norm * red.U_inv_norm * h;
        const double B = 2.0 * K * H / (sigma - 2.0 * K * L);
        double T = std::max(p.horizon.value_or(0.0), 5.0 * theta);
        if (B > 0.0) {
            // One decade below tol so that truncation never dominates the stop test.
            T = std::max(T, std::log(10.0 * K * B / (sigma * p.tol)) / sigma + theta);
        }
        return T;
    };
    double h_for_horizon = res.h;
    if (res.h_estimated) {
        const double step = theta / 8.0;
        for (double t = window.lo; t <= window.hi; t += step) {
            h_for_horizon = std::max(h_for_horizon, g0_at(t));
        }
    }
    res.horizon = horizon_for(h_for_horizon);
    const IntegralMesh mesh = IntegralMesh::build(red.original.grid, window.lo - res.horizon,
                                                  window.hi + res.horizon, window.lo - res.horizon, p.substeps);

    double h_seen = 0.0;
    for (double t : mesh.t) {
        h_seen = std::max(h_seen, g0_at(t));
    }
    if (res.h_estimated) {
        res.h = h_seen;
    } else if (h_seen > res.h * (1.0 + 1e-12) + 1e-300) {
        std::ostringstream msg;
        msg << "|f(t, 0, 0)| reaches " << h_seen << " > h = " << res.h;
        throw ConditionViolation(msg.str());
    }
    res.H = red.U_norm * red.U_inv_norm * res.h;
    res.bound = 2.0 * K * res.H / (sigma - 2.0 * K * L);
    res.first_bound = K * res.H / sigma;

    const MeshPropagators props(red, mesh, p.flow);
    const int n = red.n;
    const int k = red.k;
    const int last = mesh.size() - 1;
    const PanelForcing forcing = [&](int, int, double t, const Vector& z, const Vector& w) {
        return red.g(time_map(t), z, w);
    };

    const auto run_from = [&](const std::optional<Matrix>& initial, bool instrument) {
        PicardSetup setup;
        setup.u = {0, Vector::Zero(k)};
        setup.v = {last, Vector::Zero(n - k)};
        setup.tol = p.tol;
        setup.max_iter = p.max_iter;
        setup.initial = initial;
        if (instrument) {
            setup.on_iterate = [&](int m, const Matrix& z) {
                if (m == 1) {
                    res.first_u_sup = sup_over(z, 0, last, 0, k);
                    res.first_v_sup = sup_over(z, 0, last, k, n - k);
                }
                if (hook) {
                    hook(m, z, mesh);
                }
            };
        }
        return picard_iterate(red, mesh, props, forcing, setup);
    };

    PicardRun run = run_from(std::nullopt, true);
    res.iterations = run.iterations;
    res.diffs = run.diffs;
    const double slack = 1e-9 * res.bound + 1e-13;
    res.first_iterate_holds =
        res.first_u_sup <= res.first_bound + slack && res.first_v_sup <= res.first_bound + slack;
    if (L > 0.0) {
        double worst = 0.0;
        for (std::size_t m = 0; m < run.diffs.size(); ++m) {
            const double b = std::pow(res.contraction_factor, static_cast<double>(m + 1)) * res.H / L;
            if (b > 0.0) {
                worst = std::max(worst, run.diffs[m] / b);
            }
            if (run.diffs[m] > b + slack) {
                res.geometric_holds = false;
            }
        }
        res.geometric_worst = worst;
    }

    int lo = 0;
    while (lo < last && mesh.t[static_cast<std::size_t>(lo)] < window.lo - 1e-12) {
        ++lo;
    }
    int hi = last;
    while (hi > 0 && mesh.t[static_cast<std::size_t>(hi)] > window.hi + 1e-12) {
        --hi;
    }
    res.times.assign(mesh.t.begin() + lo, mesh.t.begin() + hi + 1);
    res.z = run.z.middleCols(lo, hi - lo + 1);
    res.sup_norm = sup_over(run.z, 0, last, 0, n);
    res.within_bound = res.sup_norm <= res.bound + 10.0 * p.tol;

    if (p.probe_uniqueness) {
        std::mt19937_64 rng(p.seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const double amp = 0.5 * (res.bound > 0.0 ? res.bound : 1.0);
        Matrix z0(n, mesh.size());
        for (Eigen::Index j = 0; j < z0.cols(); ++j) {
            for (Eigen::Index i = 0; i < n; ++i) {
                z0(i, j) = amp * u(rng);
            }
        }
        const PicardRun other = run_from(z0, false);
        // Compare on the window: the far ends of the mesh carry truncation transients.
        double d = 0.0;
        for (int j = lo; j <= hi; ++j) {
            d = std::max(d, (other.z.col(j) - run.z.col(j)).norm());
        }
        res.uniqueness_residual = d;
    }
    res.mesh_times = mesh.t;
    res.mesh_z = std::move(run.z);
    return res;
}

/// max |z(t + P) - z(t)| over mesh nodes t in [t_lo, t_lo + P].
double shift_residual(const std::vector<double>& t, const Matrix& z, double t_lo, double P) {
    double r = 0.0;
    bool any = false;
    const auto begin = std::lower_bound(t.begin(), t.end(), t_lo - 1e-12);
    for (auto it = begin; it != t.end() && *it <= t_lo + P + 1e-12; ++it) {
        const double target = *it + P;
        const auto jt = std::lower_bound(t.begin(), t.end(), target - 1e-9);
        if (jt == t.end() || std::abs(*jt - target) > 1e-9) {
            throw InvalidParameter("mesh is not invariant under the period shift");
        }
        const auto i = static_cast<Eigen::Index>(it - t.begin());
        const auto j = static_cast<Eigen::Index>(jt - t.begin());
        r = std::max(r, (z.col(j) - z.col(i)).norm());
        any = true;
    }
    if (!any) {
        throw InvalidParameter("no mesh nodes in the residual period");
    }
    return r;
}

void verify_time_periodic(const ReducedSystem& red, double omega, std::uint64_t seed) {
    const SystemSpec& s = red.original;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int samples = 32;
    for (int i = 0; i < samples; ++i) {
        const double t = omega * i / samples;
        const Matrix dA = s.A_at(t + omega) - s.A_at(t);
        const double scaleA = 1.0 + operator_norm(s.A_at(t));
        if (operator_norm(dA) > 1e-9 * scaleA) {
            std::ostringstream msg;
            msg << "A(t + omega) != A(t) at t = " << t;
            throw ConditionViolation(msg.str());
        }
        for (int r = 0; r < 4; ++r) {
            Vector y(s.n), w(s.n);
            for (int j = 0; j < s.n; ++j) {
                y(j) = u(rng);
                w(j) = u(rng);
            }
            const Vector f0 = eval_f(s, t, y, w);
            const Vector f1 = eval_f(s, t + omega, y, w);
            if ((f1 - f0).norm() > 1e-9 * (1.0 + f0.norm())) {
                std::ostringstream msg;
                msg << "f(t + omega, y, w) != f(t, y, w) at t = " << t << ", y = (" << y.transpose() << "), w = ("
                    << w.transpose() << ")";
                throw ConditionViolation(msg.str());
            }
        }
    }
}

}  // namespace

BoundedSolveResult bounded_solution(const ReducedSystem& red, Window window, const SteadyParams& params) {
    return solve_bounded(
        red, window, params, [](double t) { return t; }, nullptr);
}

PeriodicityParams periodicity_params(double omega, double omega_bar, int p) {
    if (!(omega > 0.0) || !(omega_bar > 0.0)) {
        throw InvalidParameter("periods must be positive");
    }
    if (p < 1) {
        throw InvalidParameter("grid period index p must be >= 1");
    }
    const double r = omega / omega_bar;
    // Convergents h/q of the continued fraction of r.
    long h_prev = 1, h = static_cast<long>(std::floor(r));
    long q_prev = 0, q = 1;
    double x = r - std::floor(r);
    const long cap = 1000000;
    while (std::abs(r - static_cast<double>(h) / static_cast<double>(q)) > 1e-9 * r) {
        if (x < 1e-15) {
            break;
        }
        x = 1.0 / x;
        const long a = static_cast<long>(std::floor(x));
        x -= static_cast<double>(a);
        const long h_next = a * h + h_prev;
        const long q_next = a * q + q_prev;
        if (q_next > cap) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "omega / omega_bar = " << r << " is not rational with denominator <= " << cap;
            throw InvalidParameter(msg.str());
        }
        h_prev = h;
        h = h_next;
        q_prev = q;
        q = q_next;
    }
    if (h == 0) {
        throw InvalidParameter("omega / omega_bar rounds to zero");
    }
    const long g = std::gcd(h, q);
    PeriodicityParams pp;
    pp.omega = omega;
    pp.omega_bar = omega_bar;
    pp.p = p;
    pp.k = h / g;
    pp.m = q / g;
    pp.period = static_cast<double>(pp.m) * omega;
    return pp;
}

PeriodicSolveResult periodic_solution(const ReducedSystem& red, const PeriodicityParams& pp,
                                      const SteadyParams& params) {
    const ThetaGrid& grid = red.original.grid;
    const auto gp = grid.periodicity();
    if (!gp) {
        throw ConditionViolation("grid has no declared periodicity theta_{i+p} = theta_i + omega_bar");
    }
    if (gp->p != pp.p || std::abs(gp->omega_bar - pp.omega_bar) > 1e-9 * pp.omega_bar) {
        std::ostringstream msg;
        msg << "grid periodicity (p = " << gp->p << ", omega_bar = " << gp->omega_bar
            << ") does not match (p = " << pp.p << ", omega_bar = " << pp.omega_bar << ")";
        throw ConditionViolation(msg.str());
    }
    for (long i = grid.interval_index(0.0), j = 0; j < 4L * gp->p; ++i, ++j) {
        const double d = grid.knot(i + gp->p) - grid.knot(i) - gp->omega_bar;
        if (std::abs(d) > 1e-9 * gp->omega_bar) {
            throw ConditionViolation("grid knots are not omega_bar-periodic at index " + std::to_string(i));
        }
    }
    verify_time_periodic(red, pp.omega, params.seed);

    PeriodicSolveResult out;
    out.pp = pp;
    if (red.original.mu && red.original.lip) {
        out.bw_holds = check_backward_uniqueness(red.original.mu->value, red.original.lip->value, grid.gap_bound()).holds;
    }
    const double P = pp.period;
    const double t_lo = grid.beta(0.0);
    const Window window{t_lo, t_lo + 2.0 * P};
    const double omega = pp.omega;
    const TimeMap reduce_mod = [omega](double t) { return t - omega * std::floor(t / omega); };
    const IterateHook hook = [&](int, const Matrix& z, const IntegralMesh& mesh) {
        const double r = shift_residual(mesh.t, z, t_lo, P);
        out.worst_iterate_residual = std::max(out.worst_iterate_residual, r);
    };
    out.bounded = solve_bounded(red, window, params, reduce_mod, hook);
    out.iterates_periodic = out.worst_iterate_residual <= params.tol;
    out.residual = shift_residual(out.bounded.mesh_times, out.bounded.mesh_z, t_lo, P);
    out.certified = out.residual <= 10.0 * params.tol;

    const auto& t = out.bounded.times;
    const auto b = std::lower_bound(t.begin(), t.end(), t_lo - 1e-12);
    auto e = b;
    while (e != t.end() && *e <= t_lo + P + 1e-12) {
        ++e;
    }
    out.times.assign(b, e);
    out.z = out.bounded.z.middleCols(b - t.begin(), e - b);
    return out;
}

}  // namespace epcag
