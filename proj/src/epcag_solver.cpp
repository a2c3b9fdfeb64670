#include "epcag/epcag_solver.hpp"

#include "epcag/error.hpp"
#include "epcag/integrator.hpp"
#include "epcag/linear_flow.hpp"

#include <algorithm>
#include <cmath>

namespace epcag {

const Vector& SolutionPath::state_at(double t) const {
    auto it = std::lower_bound(points.begin(), points.end(), t,
                               [](const PathPoint& p, double v) { return p.t < v; });
    for (auto cand : {it, it == points.begin() ? it : std::prev(it)}) {
        if (cand != points.end() && std::abs(cand->t - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
            return cand->y;
        }
    }
    throw OutOfWindow("no path point at t = " + std::to_string(t));
}

namespace {

VectorField frozen_rhs(const SystemSpec& spec, const Vector& frozen) {
    if (spec.constant_A) {
        const Matrix& A = *spec.constant_A;
        return [&spec, &A, &frozen](double t, const Vector& y) -> Vector { return A * y + spec.f(t, y, frozen); };
    }
    return [&spec, &frozen](double t, const Vector& y) -> Vector { return spec.A(t) * y + spec.f(t, y, frozen); };
}

void check_guard(const Vector& y, double t, const SolverOptions& opt) {
    if (!y.allFinite() || y.norm() > opt.overflow_guard) {
        throw BlowUp("state norm exceeded the overflow guard at t = " + std::to_string(t), t);
    }
}

}  // namespace

SolutionPath solve_forward(const SystemSpec& spec, double t0, const Vector& y0, double t_end,
                           const SolverOptions& opt, const std::optional<Vector>& w0) {
    if (!(t0 <= t_end)) {
        throw InvalidParameter("solve_forward: need t0 <= t_end");
    }
    if (y0.size() != spec.n) {
        throw InvalidParameter("solve_forward: initial state has wrong dimension");
    }
    if (opt.substeps < 1) {
        throw InvalidParameter("solve_forward: substeps must be positive");
    }
    const ThetaGrid& grid = spec.grid;
    long i = grid.interval_index(t0);
    (void)grid.interval_index(t_end);
    const bool at_knot = grid.knot(i) == t0;
    if (!at_knot && !w0) {
        throw InvalidParameter("solve_forward: t0 is not a grid knot; the frozen value w0 = y(beta(t0)) is required");
    }

    SolutionPath path;
    Vector y = y0;
    Vector w = at_knot ? y0 : *w0;
    double t = t0;
    path.points.push_back(PathPoint{t, y, i, w});
    path.knot_times.push_back(t0);

    while (t < t_end) {
        const double left = grid.knot(i);
        const double right = grid.knot(i + 1);
        const double seg_end = std::min(right, t_end);
        const int steps = steps_for(seg_end - t, (right - left) / opt.substeps);
        const double h = (seg_end - t) / steps;
        const VectorField rhs = frozen_rhs(spec, w);
        for (int k = 0; k < steps; ++k) {
            const double tk = t + k * h;
            y = rk4_step(rhs, tk, y, h);
            const double tn = (k + 1 == steps) ? seg_end : t + (k + 1) * h;
            check_guard(y, tn, opt);
            if (k + 1 < steps || seg_end != right) {
                path.points.push_back(PathPoint{tn, y, i, w});
            }
        }
        path.diagnostics.push_back(IntervalStats{i, t, seg_end, steps});
        if (seg_end == right) {
            ++i;
            w = y;
            path.points.push_back(PathPoint{right, y, i, w});
        }
        t = seg_end;
        if (path.knot_times.back() != t) {
            path.knot_times.push_back(t);
        }
    }
    return path;
}

Vector flow_in_interval(const SystemSpec& spec, long i, const Vector& start, const Vector& frozen, double t,
                        const SolverOptions& opt) {
    const double left = spec.grid.knot(i);
    const double right = spec.grid.knot(i + 1);
    if (t < left || t > right) {
        throw InvalidParameter("flow_in_interval: t outside [theta_i, theta_{i+1}]");
    }
    if (t == left) {
        return start;
    }
    const int steps = steps_for(t - left, (right - left) / opt.substeps);
    const VectorField rhs = frozen_rhs(spec, frozen);
    const double h = (t - left) / steps;
    Vector y = start;
    for (int k = 0; k < steps; ++k) {
        y = rk4_step(rhs, left + k * h, y, h);
        check_guard(y, left + (k + 1) * h, opt);
    }
    return y;
}

Vector shooting_map(const SystemSpec& spec, long i, const Vector& x0, const SolverOptions& opt) {
    return flow_in_interval(spec, i, x0, x0, spec.grid.knot(i + 1), opt);
}

std::string to_string(PreimageClass c) {
    switch (c) {
        case PreimageClass::None: return "none";
        case PreimageClass::Unique: return "unique";
        case PreimageClass::Multiple: return "multiple";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Backward continuation

namespace {

class PreimageSearch {
public:
    PreimageSearch(const SystemSpec& spec, long i, double t_target, const Vector& x_target, const BackOptions& opt)
        : spec_(spec), i_(i), t_(t_target), target_(x_target), opt_(opt),
          scale_(1.0 + x_target.norm()) {}

    Vector residual(const Vector& x) const { return flow_in_interval(spec_, i_, x, x, t_, opt_.solver) - target_; }

    Matrix jacobian(const Vector& x) const {
        const int n = static_cast<int>(x.size());
        Matrix J(n, n);
        for (int j = 0; j < n; ++j) {
            const double h = 1e-6 * (1.0 + std::abs(x[j]));
            Vector xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            J.col(j) = (residual(xp) - residual(xm)) / (2.0 * h);
        }
        return J;
    }

    struct Outcome {
        Vector x;
        double residual = 0.0;
        bool converged = false;
        bool singular = false;
    };

    Outcome newton(Vector x) const {
        Outcome out;
        Vector r = residual(x);
        double rn = r.norm();
        for (int it = 0; it < opt_.max_iter; ++it) {
            if (rn <= opt_.root_tol * scale_) {
                out.converged = true;
                break;
            }
            const Matrix J = jacobian(x);
            const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(J);
            const Vector delta = -cod.solve(r);
            if (!delta.allFinite()) {
                break;
            }
            double lambda = 1.0;
            bool accepted = false;
            for (int halving = 0; halving < 30; ++halving) {
                const Vector trial = x + lambda * delta;
                Vector rt;
                try {
                    rt = residual(trial);
                } catch (const IntegrationFailure&) {
                    lambda *= 0.5;
                    continue;
                }
                if (rt.norm() < rn) {
                    x = trial;
                    r = rt;
                    rn = rt.norm();
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!accepted || (lambda * delta).norm() <= 1e-15 * (1.0 + x.norm())) {
                break;
            }
        }
        out.x = x;
        out.residual = rn;
        out.converged = out.converged || rn <= opt_.root_tol * scale_;
        const Matrix J = jacobian(x);
        Eigen::JacobiSVD<Matrix> svd(J);
        const auto sv = svd.singularValues();
        out.singular = sv(sv.size() - 1) <= 1e-3 * std::max(1.0, sv(0));
        return out;
    }

    /// Locates the fold (singular Jacobian) near x: Newton along the null
    /// direction on u0' J v0 = 0, alternating with Newton steps restricted to
    /// the regular directions. Returns the refined point and its residual.
    Outcome fold_refine(Vector x) const {
        for (int sweep = 0; sweep < 4; ++sweep) {
            Matrix J = jacobian(x);
            Eigen::JacobiSVD<Matrix> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const int last = static_cast<int>(J.cols()) - 1;
            const Vector u0 = svd.matrixU().col(last);
            const Vector v0 = svd.matrixV().col(last);
            auto D = [&](double tau) { return u0.dot(jacobian(x + tau * v0) * v0); };
            double tau = 0.0;
            for (int it = 0; it < 30; ++it) {
                const double h = 1e-4 * (1.0 + x.norm());
                const double d0 = D(tau);
                const double dp = (D(tau + h) - D(tau - h)) / (2.0 * h);
                if (dp == 0.0 || !std::isfinite(dp)) {
                    break;
                }
                const double step = -d0 / dp;
                tau += step;
                if (std::abs(step) <= 1e-14 * (1.0 + x.norm())) {
                    break;
                }
            }
            x += tau * v0;
            if (last > 0) {
                // Regular directions: pseudo-inverse step dropping the singular direction.
                J = jacobian(x);
                Eigen::JacobiSVD<Matrix> s2(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
                const Vector r = residual(x);
                Vector delta = Vector::Zero(x.size());
                for (int j = 0; j < last; ++j) {
                    delta -= s2.matrixV().col(j) * (s2.matrixU().col(j).dot(r) / s2.singularValues()(j));
                }
                x += delta;
            }
        }
        Outcome out;
        out.x = x;
        out.residual = residual(x).norm();
        out.converged = out.residual <= opt_.fold_tol * scale_;
        out.singular = true;
        return out;
    }

    double scale() const { return scale_; }

private:
    const SystemSpec& spec_;
    long i_;
    double t_;
    const Vector& target_;
    const BackOptions& opt_;
    double scale_;
};

}  // namespace

PreimageSet back_continue_interval(const SystemSpec& spec, long i, double t_target, const Vector& x_target,
                                   const BackOptions& opt) {
    const double left = spec.grid.knot(i);
    const double right = spec.grid.knot(i + 1);
    if (!(t_target > left && t_target <= right)) {
        throw InvalidParameter("back_continue_interval: t_target must lie in (theta_i, theta_{i+1}]");
    }
    if (x_target.size() != spec.n) {
        throw InvalidParameter("back_continue_interval: target has wrong dimension");
    }
    if (opt.lattice < 1 || opt.max_iter < 1) {
        throw InvalidParameter("back_continue_interval: lattice and max_iter must be positive");
    }
    PreimageSet set;
    set.interval = i;
    set.t_target = t_target;
    set.x_target = x_target;

    PreimageSearch search(spec, i, t_target, x_target, opt);
    const int n = spec.n;
    const double R = std::max(10.0, 10.0 * x_target.norm());

    std::vector<Preimage> found;
    std::vector<Vector> fold_seeds;
    std::vector<int> digit(static_cast<std::size_t>(n), 0);
    for (;;) {
        Vector start(n);
        for (int j = 0; j < n; ++j) {
            start[j] = opt.lattice == 1 ? 0.0 : -R + 2.0 * R * digit[static_cast<std::size_t>(j)] / (opt.lattice - 1);
        }
        ++set.starts;
        try {
            auto res = search.newton(start);
            if (res.converged && !res.singular) {
                found.push_back(Preimage{res.x, res.residual, false});
            } else if (res.singular && res.residual <= 1e3 * opt.fold_tol * search.scale()) {
                fold_seeds.push_back(res.x);
            }
        } catch (const IntegrationFailure&) {
            // Start diverged; other starts cover the lattice.
        }
        int j = 0;
        while (j < n && ++digit[static_cast<std::size_t>(j)] == opt.lattice) {
            digit[static_cast<std::size_t>(j)] = 0;
            ++j;
        }
        if (j == n) {
            break;
        }
    }

    // Fold refinement for starts that stalled at a singular Jacobian.
    std::vector<Preimage> folds;
    for (const Vector& seed : fold_seeds) {
        bool near_known = false;
        for (const auto& f : folds) {
            near_known = near_known || (f.x - seed).norm() <= 1e-3 * (1.0 + f.x.norm());
        }
        if (near_known) {
            continue;
        }
        try {
            auto res = search.fold_refine(seed);
            if (res.converged) {
                folds.push_back(Preimage{res.x, res.residual, true});
            }
        } catch (const IntegrationFailure&) {
        }
    }

    // Cluster: fold points first, then regular roots by residual.
    std::sort(found.begin(), found.end(), [](const Preimage& a, const Preimage& b) { return a.residual < b.residual; });
    std::vector<Preimage> candidates = folds;
    candidates.insert(candidates.end(), found.begin(), found.end());
    for (const auto& c : candidates) {
        bool merged = false;
        for (const auto& kept : set.roots) {
            if ((kept.x - c.x).norm() <= opt.cluster_radius * (1.0 + kept.x.norm())) {
                merged = true;
                break;
            }
        }
        if (!merged) {
            set.roots.push_back(c);
        }
    }
    std::sort(set.roots.begin(), set.roots.end(), [](const Preimage& a, const Preimage& b) {
        const double na = a.x.norm(), nb = b.x.norm();
        if (na != nb) {
            return na < nb;
        }
        return std::lexicographical_compare(a.x.data(), a.x.data() + a.x.size(), b.x.data(), b.x.data() + b.x.size());
    });
    set.classification = set.roots.empty()       ? PreimageClass::None
                         : set.roots.size() == 1 ? PreimageClass::Unique
                                                 : PreimageClass::Multiple;
    set.budget_exhausted = set.roots.empty();
    return set;
}

BackContinuation back_continue(const SystemSpec& spec, double t0, const Vector& x0, double t_target,
                               const BackOptions& opt) {
    if (!(t_target < t0)) {
        throw InvalidParameter("back_continue: need t_target < t0");
    }
    const ThetaGrid& grid = spec.grid;
    (void)grid.interval_index(t0);
    const long target_interval = grid.interval_index(t_target);

    BackContinuation bc;
    if (spec.mu && spec.lip) {
        bc.bw_holds = check_backward_uniqueness(spec.mu->value, spec.lip->value, grid.gap_bound()).holds;
    }

    // States at knots, from the latest backward: (knot index, state).
    std::vector<std::pair<long, Vector>> chain;
    double t = t0;
    Vector x = x0;
    long i = grid.interval_index(t0);
    if (grid.knot(i) == t0) {
        --i;  // a knot is continued through the interval that ends at it
    }
    for (; i >= target_interval; --i) {
        PreimageSet step = back_continue_interval(spec, i, t, x, opt);
        bc.steps.push_back(step);
        if (step.classification == PreimageClass::None) {
            bc.failed_interval = i;
            return bc;
        }
        if (step.classification == PreimageClass::Multiple) {
            bc.non_unique = true;
            if (bc.bw_holds.value_or(false)) {
                throw ConditionViolation("several preimages found on interval " + std::to_string(i) +
                                         " although the backward-uniqueness inequality holds");
            }
        }
        x = step.roots.front().x;
        t = grid.knot(i);
        chain.emplace_back(i, x);
    }

    // Rebuild the path interval by interval from the chosen preimages.
    SolutionPath path;
    path.direction = Direction::BackwardReconstructed;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        const long k = it->first;
        const double seg_end = std::min(grid.knot(k + 1), t0);
        SolutionPath seg = solve_forward(spec, grid.knot(k), it->second, seg_end, opt.solver);
        if (path.points.empty() && grid.knot(k) < t_target) {
            PathPoint first;
            first.t = t_target;
            first.y = flow_in_interval(spec, k, it->second, it->second, t_target, opt.solver);
            first.interval = k;
            first.w = it->second;
            path.points.push_back(std::move(first));
        }
        for (auto& p : seg.points) {
            if (p.t < t_target) {
                continue;
            }
            if (!path.points.empty() && p.t <= path.points.back().t) {
                continue;
            }
            path.points.push_back(p);
        }
        for (const auto& d : seg.diagnostics) {
            path.diagnostics.push_back(d);
        }
    }
    path.knot_times.push_back(t_target);
    for (double k : grid.knots_between(t_target, t0)) {
        if (k != path.knot_times.back()) {
            path.knot_times.push_back(k);
        }
    }
    if (path.knot_times.back() != t0) {
        path.knot_times.push_back(t0);
    }
    bc.path = std::move(path);
    bc.ok = true;
    return bc;
}

}  // namespace epcag
