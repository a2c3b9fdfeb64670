#include "epcag/manifold_engine.hpp"

#include "epcag/epcag_solver.hpp"
#include "epcag/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace epcag {

std::string to_string(Side s) { return s == Side::Stable ? "stable" : "unstable"; }

namespace {

struct Resolved {
    double alpha = 0.0;
    double eps = 0.0;
    double N = 0.0;
    double horizon = 0.0;
    double theta = 0.0;
};

Resolved resolve(const ReducedSystem& red, const Vector& c, const ManifoldParams& p) {
    if (!(red.sigma > 0.0)) {
        throw NoDichotomy("reduced system has no dichotomy rate");
    }
    Resolved r;
    r.theta = red.original.grid.gap_bound();
    r.alpha = p.alpha.value_or(red.sigma / 2.0);
    r.eps = p.eps.value_or(red.K);
    if (!(r.alpha > 0.0 && r.alpha < red.sigma)) {
        throw InvalidParameter("alpha must lie in (0, sigma)");
    }
    if (!(r.eps > 0.0)) {
        throw InvalidParameter("eps must be positive");
    }
    if (!(p.tol > 0.0) || p.max_iter < 1) {
        throw InvalidParameter("need tol > 0 and max_iter >= 1");
    }
    r.N = p.N.value_or((red.K + r.eps) * c.norm());
    double h = std::max(p.horizon.value_or(0.0), 5.0 * r.theta);
    if (r.N > 0.0) {
        const double KN = red.K * r.N;
        h = std::max({h, std::log(KN / p.tol) / red.sigma, std::log(KN / (red.sigma * p.tol)) / red.sigma});
    }
    r.horizon = h;
    return r;
}

IntegralMesh mesh_for(const ReducedSystem& red, Side side, double t0, const Resolved& r, int substeps) {
    const ThetaGrid& grid = red.original.grid;
    if (side == Side::Stable) {
        return IntegralMesh::build(grid, t0, t0 + r.horizon, t0, substeps);
    }
    return IntegralMesh::build(grid, t0 - r.horizon, t0, t0, substeps);
}

void check_zero_forcing(const ReducedSystem& red, const IntegralMesh& mesh, double tol) {
    const Vector zero = Vector::Zero(red.n);
    for (double t : mesh.t) {
        const double g0 = red.g(t, zero, zero).norm();
        if (g0 > tol) {
            throw ConditionViolation("g(t, 0, 0) = " + std::to_string(g0) + " at t = " + std::to_string(t) +
                                     " exceeds tol; the origin is not an equilibrium");
        }
    }
}

PicardSetup anchors(const ReducedSystem& red, Side side, const IntegralMesh& mesh, const Vector& value) {
    PicardSetup s;
    const int last = mesh.size() - 1;
    if (side == Side::Stable) {
        s.u = {mesh.anchor, value};
        s.v = {last, Vector::Zero(red.n - red.k)};
    } else {
        s.u = {0, Vector::Zero(red.k)};
        s.v = {mesh.anchor, value};
    }
    return s;
}

Vector side_value(const ReducedSystem& red, Side side, const Matrix& z, int anchor) {
    if (side == Side::Stable) {
        return z.col(anchor).tail(red.n - red.k);
    }
    return z.col(anchor).head(red.k);
}

ManifoldPoint run_side(const ReducedSystem& red, Side side, double t0, const Vector& c, const ManifoldParams& p,
                       const std::optional<Matrix>& initial, const IntegralMesh* given_mesh = nullptr) {
    const int in_dim = side == Side::Stable ? red.k : red.n - red.k;
    if (c.size() != in_dim) {
        throw InvalidParameter("manifold argument has dimension " + std::to_string(c.size()) + ", expected " +
                               std::to_string(in_dim));
    }
    const Resolved r = resolve(red, c, p);

    ManifoldPoint pt;
    pt.side = side;
    pt.t0 = t0;
    pt.c = c;
    pt.alpha = r.alpha;
    pt.eps = r.eps;
    pt.N = r.N;
    pt.horizon = r.horizon;
    pt.tol = p.tol;
    pt.smallness = check_smallness(red.K, red.sigma, r.alpha, r.theta, red.L, r.eps);
    pt.theoretical_ratio = 2.0 * red.K * red.L * (1.0 + std::exp(red.sigma * r.theta)) / (red.sigma - r.alpha);
    if (!pt.smallness.all_hold) {
        pt.proven_regime = false;
        pt.labels.push_back("outside proven contraction regime");
    }
    const auto& lip = red.original.lip;
    if (!lip) {
        pt.proven_regime = false;
        pt.labels.push_back("Lipschitz constant not declared");
    } else if (lip->estimated) {
        pt.proven_regime = false;
        pt.labels.push_back("based on sampled estimates");
    }

    const IntegralMesh mesh = given_mesh ? *given_mesh : mesh_for(red, side, t0, r, p.substeps);
    check_zero_forcing(red, mesh, p.tol);
    const MeshPropagators props(red, mesh, p.flow);

    PicardSetup setup = anchors(red, side, mesh, c);
    setup.tol = p.tol;
    setup.max_iter = p.max_iter;
    setup.initial = initial;
    const int anchor = mesh.anchor;
    double worst = 0.0;
    setup.on_iterate = [&](int, const Matrix& z) {
        const int lo = side == Side::Stable ? anchor : 0;
        const int hi = side == Side::Stable ? mesh.size() - 1 : anchor;
        for (int j = lo; j <= hi; ++j) {
            const double norm = z.col(j).norm();
            const double bound = r.N * std::exp(-r.alpha * std::abs(mesh.t[static_cast<std::size_t>(j)] - t0));
            if (norm == 0.0) {
                continue;
            }
            worst = std::max(worst, bound > 0.0 ? norm / bound : std::numeric_limits<double>::infinity());
        }
    };
    const PanelForcing forcing = [&red](int, int, double t, const Vector& z, const Vector& w) {
        return red.g(t, z, w);
    };
    PicardRun run = picard_iterate(red, mesh, props, forcing, setup);

    pt.times = mesh.t;
    pt.anchor = anchor;
    pt.z = std::move(run.z);
    pt.F = side_value(red, side, pt.z, anchor);
    pt.iterations = run.iterations;
    pt.diffs = run.diffs;
    for (std::size_t m = 1; m < run.diffs.size(); ++m) {
        const double prev = run.diffs[m - 1];
        pt.ratios.push_back(prev > 0.0 ? run.diffs[m] / prev : 0.0);
    }
    if (pt.ratios.size() >= 2) {
        pt.contraction_ratio = *std::max_element(pt.ratios.begin() + 1, pt.ratios.end());
    } else if (!pt.ratios.empty()) {
        pt.contraction_ratio = pt.ratios.back();
    }
    pt.decay_ratio_max = worst;
    // Rounding slack only: the bound is exact in exact arithmetic.
    pt.decay_holds = worst <= 1.0 + 1e-12;
    return pt;
}

void partials(const ReducedSystem& red, double t, const Vector& z, const Vector& w, double scale, Matrix& Gz,
              Matrix& Gw) {
    const int n = red.n;
    Gz.resize(n, n);
    Gw.resize(n, n);
    const double hz = scale * (1.0 + z.norm());
    const double hw = scale * (1.0 + w.norm());
    for (int i = 0; i < n; ++i) {
        Vector zp = z, zm = z;
        zp(i) += hz;
        zm(i) -= hz;
        Gz.col(i) = (red.g(t, zp, w) - red.g(t, zm, w)) / (2.0 * hz);
        Vector wp = w, wm = w;
        wp(i) += hw;
        wm(i) -= hw;
        Gw.col(i) = (red.g(t, z, wp) - red.g(t, z, wm)) / (2.0 * hw);
    }
}

}  // namespace

ManifoldPoint picard_stable(const ReducedSystem& red, double t0, const Vector& c, const ManifoldParams& params) {
    return run_side(red, Side::Stable, t0, c, params, std::nullopt);
}

ManifoldPoint picard_unstable(const ReducedSystem& red, double t0, const Vector& c_minus,
                              const ManifoldParams& params) {
    return run_side(red, Side::Unstable, t0, c_minus, params, std::nullopt);
}

ManifoldFn::ManifoldFn(std::shared_ptr<const ReducedSystem> red, Side side, ManifoldParams params)
    : red_(std::move(red)), side_(side), params_(std::move(params)) {
    if (!red_) {
        throw InvalidParameter("ManifoldFn needs a reduced system");
    }
}

int ManifoldFn::input_dim() const { return side_ == Side::Stable ? red_->k : red_->n - red_->k; }
int ManifoldFn::output_dim() const { return side_ == Side::Stable ? red_->n - red_->k : red_->k; }

std::size_t ManifoldFn::memo_size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return memo_.size();
}

std::shared_ptr<const ManifoldPoint> ManifoldFn::point(double t0, const Vector& c) const {
    const auto round12 = [](double x) { return std::round(x * 1e12) / 1e12; };
    Key key{round12(t0), {}};
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        key.second.push_back(round12(c(i)));
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto it = memo_.find(key);
        if (it != memo_.end()) {
            return it->second;
        }
    }
    auto pt = std::make_shared<const ManifoldPoint>(run_side(*red_, side_, t0, c, params_, std::nullopt));
    std::lock_guard<std::mutex> lock(mutex_);
    return memo_.emplace(std::move(key), std::move(pt)).first->second;
}

Matrix jacobian_F(const ManifoldFn& manifold, double t0, const Vector& c) {
    const ReducedSystem& red = manifold.reduced();
    const Side side = manifold.side();
    const ManifoldParams& p = manifold.params();
    const auto base = manifold.point(t0, c);
    const int n = red.n;
    const int in_dim = manifold.input_dim();
    const int out_dim = manifold.output_dim();
    Matrix J = Matrix::Zero(out_dim, in_dim);
    if (in_dim == 0 || out_dim == 0) {
        return J;
    }

    const Resolved r = resolve(red, c, p);
    const IntegralMesh mesh = mesh_for(red, side, t0, r, p.substeps);
    if (mesh.size() != static_cast<int>(base->times.size())) {
        throw InvalidParameter("jacobian mesh does not match the evaluated trajectory");
    }
    const Matrix& z = base->z;
    const std::size_t np = mesh.panels.size();
    std::vector<std::array<Matrix, 3>> Gz(np), Gw(np);
    const std::size_t probe_every = std::max<std::size_t>(1, np / 16);
    for (std::size_t q = 0; q < np; ++q) {
        const int p0 = mesh.panels[q];
        const Vector w = z.col(mesh.panel_beta[q]);
        for (int pos = 0; pos < 3; ++pos) {
            const int j = p0 + pos;
            const double t = mesh.t[static_cast<std::size_t>(j)];
            const Vector zj = z.col(j);
            auto& gz = Gz[q][static_cast<std::size_t>(pos)];
            auto& gw = Gw[q][static_cast<std::size_t>(pos)];
            partials(red, t, zj, w, 1e-6, gz, gw);
            if (pos == 1 && q % probe_every == 0) {
                Matrix gz2, gw2;
                partials(red, t, zj, w, 1e-5, gz2, gw2);
                const double scale = 1.0 + std::max(gz.norm(), gw.norm());
                if ((gz2 - gz).norm() > 1e-4 * scale || (gw2 - gw).norm() > 1e-4 * scale) {
                    throw ConditionViolation("difference quotients of g are not stable at t = " + std::to_string(t) +
                                             "; g does not look continuously differentiable there");
                }
            }
        }
    }

    const MeshPropagators props(red, mesh, p.flow);
    const PanelForcing forcing = [&](int panel, int pos, double, const Vector& x, const Vector& w) -> Vector {
        const auto q = static_cast<std::size_t>(panel);
        const auto s = static_cast<std::size_t>(pos);
        return Gz[q][s] * x + Gw[q][s] * w;
    };
    for (int j = 0; j < in_dim; ++j) {
        PicardSetup setup = anchors(red, side, mesh, Vector::Unit(in_dim, j));
        setup.tol = std::min(p.tol, 1e-10);
        setup.max_iter = p.max_iter;
        const PicardRun run = picard_iterate(red, mesh, props, forcing, setup);
        J.col(j) = side_value(red, side, run.z, mesh.anchor);
    }
    (void)n;
    return J;
}

LipschitzCertificate lipschitz_certificate(const ManifoldFn& manifold, double t0,
                                           std::span<const std::pair<Vector, Vector>> pairs) {
    const ReducedSystem& red = manifold.reduced();
    const double theta = red.original.grid.gap_bound();
    const double alpha = manifold.params().alpha.value_or(red.sigma / 2.0);
    LipschitzCertificate cert;
    cert.constant = 2.0 * red.K * red.K * red.L * (1.0 + std::exp(red.sigma * theta)) / (red.sigma + alpha);
    for (const auto& [a, b] : pairs) {
        const double dc = (a - b).norm();
        if (dc == 0.0) {
            continue;
        }
        const double dF = (manifold(t0, a) - manifold(t0, b)).norm();
        cert.max_quotient = std::max(cert.max_quotient, dF / dc);
        ++cert.pairs;
    }
    // Allow for the iteration tolerance in each F value.
    cert.holds = cert.max_quotient <= cert.constant * (1.0 + 1e-6) + 1e-9;
    return cert;
}

double manifold_uniqueness_probe(const ReducedSystem& red, Side side, double t0, const Vector& c,
                                 const ManifoldParams& params, std::uint64_t seed) {
    const ManifoldPoint a = run_side(red, side, t0, c, params, std::nullopt);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double amp = 1e-2 * (1.0 + c.norm());
    Matrix z0(a.z.rows(), a.z.cols());
    for (Eigen::Index j = 0; j < z0.cols(); ++j) {
        for (Eigen::Index i = 0; i < z0.rows(); ++i) {
            z0(i, j) = amp * u(rng);
        }
    }
    const ManifoldPoint b = run_side(red, side, t0, c, params, z0);
    double d = 0.0;
    for (Eigen::Index j = 0; j < a.z.cols(); ++j) {
        d = std::max(d, (a.z.col(j) - b.z.col(j)).norm());
    }
    return d;
}

InvarianceReport invariance_check(const SystemSpec& spec, const ManifoldFn& manifold, double t0, const Vector& c,
                                  double T, double v_offset) {
    if (manifold.side() != Side::Stable) {
        throw InvalidParameter("invariance_check works on the stable manifold");
    }
    if (!(T > 0.0)) {
        throw InvalidParameter("invariance_check needs T > 0");
    }
    const ReducedSystem& red = manifold.reduced();
    const int k = red.k;
    const auto pt = manifold.point(t0, c);

    Vector z0(red.n);
    z0.head(k) = c;
    z0.tail(red.n - k) = pt->F.array() + v_offset;
    const Vector y0 = red.U * z0;

    std::optional<Vector> w0;
    const double b0 = spec.grid.beta(t0);
    if (b0 != t0) {
        const int idx = std::distance(pt->times.begin(), std::lower_bound(pt->times.begin(), pt->times.end(), b0));
        w0 = red.U * pt->z.col(idx);
    }
    const SolutionPath path = solve_forward(spec, t0, y0, t0 + T, SolverOptions{}, w0);

    InvarianceReport rep;
    for (double kt : spec.grid.knots_between(t0, t0 + T)) {
        if (kt <= t0) {
            continue;
        }
        const Vector z = red.U_inv * path.state_at(kt);
        const Vector u = z.head(k);
        const double dev = (z.tail(red.n - k) - manifold(kt, u)).norm();
        rep.knots.push_back(kt);
        rep.deviation.push_back(dev);
        rep.max_deviation = std::max(rep.max_deviation, dev);
    }
    rep.monotone_growth = rep.deviation.size() >= 2;
    for (std::size_t i = 1; i < rep.deviation.size(); ++i) {
        if (!(rep.deviation[i] > rep.deviation[i - 1])) {
            rep.monotone_growth = false;
        }
    }
    return rep;
}

GrowthReport off_manifold_diagnose(const ReducedSystem& red, double t0, const Vector& z0, double T,
                                   const ManifoldParams& params) {
    if (z0.size() != red.n) {
        throw InvalidParameter("off_manifold_diagnose: z0 has the wrong dimension");
    }
    if (!(T > 0.0)) {
        throw InvalidParameter("off_manifold_diagnose needs T > 0");
    }
    const ThetaGrid& grid = red.original.grid;
    if (grid.beta(t0) != t0) {
        throw InvalidParameter("off_manifold_diagnose starts at a grid knot");
    }
    const double theta = grid.gap_bound();
    const double K = red.K;
    const double L = red.L;
    const double sigma = red.sigma;
    const double alpha = params.alpha.value_or(sigma / 2.0);
    const double cone_lhs = K * (K * K + 1.0) * (1.0 + std::exp(alpha * theta)) * L;
    if (!(cone_lhs < sigma)) {
        throw ConditionViolation("cone condition K(K^2+1)(1+e^{alpha theta})L < sigma fails: " +
                                 std::to_string(cone_lhs) + " >= " + std::to_string(sigma));
    }
    const int k = red.k;
    const Vector u0 = z0.head(k);
    const Vector v0 = z0.tail(red.n - k);
    const Vector F0 = picard_stable(red, t0, u0, params).F;
    if ((v0 - F0).norm() <= 10.0 * params.tol) {
        throw ConditionViolation("initial point lies on the stable manifold");
    }

    GrowthReport rep;
    rep.lower_rate = sigma - K * L * (1.0 + K * K) * (1.0 + std::exp(alpha * theta));
    rep.u_decay_rate = sigma - 2.0 * K * L * (1.0 + std::exp(alpha * theta));

    const SystemSpec sys = red.as_system();
    const auto record = [&](double t, const Vector& z) {
        rep.knots.push_back(t);
        rep.u_norm.push_back(z.head(k).norm());
        rep.v_norm.push_back(z.tail(red.n - k).norm());
    };
    record(t0, z0);
    Vector z = z0;
    double t = t0;
    try {
        for (double kt : grid.knots_between(t0, t0 + T)) {
            if (kt <= t0) {
                continue;
            }
            const SolutionPath seg = solve_forward(sys, t, z, kt);
            z = seg.back().y;
            t = kt;
            record(t, z);
        }
    } catch (const BlowUp&) {
        rep.diverged = true;
        rep.note = "confirmed divergence (overflow guard)";
    }

    const std::size_t n_knots = rep.knots.size();
    std::optional<std::size_t> ref;
    for (std::size_t i = 0; i < n_knots; ++i) {
        if (!rep.cone_entry && rep.u_norm[i] <= K * K * rep.v_norm[i]) {
            rep.cone_entry = rep.knots[i];
        }
        if (!ref && rep.u_norm[i] <= rep.v_norm[i]) {
            ref = i;
        }
    }
    const std::size_t ref_i = ref.value_or(n_knots);
    const double u0n = rep.u_norm.front();
    for (std::size_t i = 0; i < ref_i; ++i) {
        const double bound = K * u0n * std::exp(-rep.u_decay_rate * (rep.knots[i] - t0));
        if (rep.u_norm[i] > bound * (1.0 + 1e-3) + 1e-300) {
            rep.u_decay_holds = false;
        }
    }
    if (ref) {
        rep.reference = rep.knots[ref_i];
        const double t_ref = rep.knots[ref_i];
        const double v_ref = rep.v_norm[ref_i];
        rep.worst_lower_ratio = std::numeric_limits<double>::infinity();
        std::vector<double> xs, ys;
        for (std::size_t i = ref_i; i < n_knots; ++i) {
            const double bound = (v_ref / K) * std::exp(rep.lower_rate * (rep.knots[i] - t_ref));
            if (bound > 0.0) {
                const double ratio = rep.v_norm[i] / bound;
                rep.worst_lower_ratio = std::min(rep.worst_lower_ratio, ratio);
                if (ratio < 1.0 - 1e-3) {
                    rep.lower_bound_holds = false;
                }
            }
            if (rep.u_norm[i] > K * K * rep.v_norm[i] * (1.0 + 1e-12)) {
                rep.cone_holds = false;
            }
            if (rep.v_norm[i] > 0.0) {
                xs.push_back(rep.knots[i]);
                ys.push_back(std::log(rep.v_norm[i]));
            }
        }
        if (xs.size() >= 2) {
            const double nx = static_cast<double>(xs.size());
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                sx += xs[i];
                sy += ys[i];
                sxx += xs[i] * xs[i];
                sxy += xs[i] * ys[i];
            }
            rep.growth_exponent = (nx * sxy - sx * sy) / (nx * sxx - sx * sx);
        }
    } else {
        rep.lower_bound_holds = false;
        rep.cone_holds = false;
        if (rep.note.empty()) {
            rep.note = "|u| <= |v| never reached on the sampled knots";
        }
    }
    return rep;
}

}  // namespace epcag
