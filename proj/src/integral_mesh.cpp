#include "epcag/integral_mesh.hpp"

#include "epcag/error.hpp"
#include "epcag/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace epcag {

IntegralMesh IntegralMesh::build(const ThetaGrid& grid, double lo, double hi, double anchor, int substeps) {
    if (!(lo <= anchor && anchor <= hi)) {
        throw InvalidParameter("mesh anchor outside [lo, hi]");
    }
    if (substeps < 2) {
        throw InvalidParameter("mesh needs at least 2 substeps per gap");
    }
    const double start = grid.beta(lo);
    const double end = grid.next_knot_at_or_after(hi);

    std::vector<double> breaks = grid.knots_between(start, end);
    if (breaks.empty() || breaks.back() < end) {
        breaks.push_back(end);
    }
    breaks.push_back(anchor);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    IntegralMesh mesh;
    std::map<double, int> knot_node;
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
        const double a = breaks[b];
        const double c = breaks[b + 1];
        const long i = grid.interval_index(a);
        const double gap = grid.knot(i + 1) - grid.knot(i);
        const double h_target = gap / substeps;
        int steps = 2 * static_cast<int>(std::ceil((c - a) / (2.0 * h_target) - 1e-9));
        steps = std::max(steps, 2);

        const int first = mesh.size();
        knot_node.emplace(a, first);
        const double left_knot = grid.knot(i);
        const auto it = knot_node.find(left_knot);
        if (it == knot_node.end()) {
            throw InvalidParameter("mesh does not contain beta of its own segment");
        }
        const double h = (c - a) / steps;
        for (int j = 0; j < steps; ++j) {
            mesh.t.push_back(j == 0 ? a : a + j * h);
        }
        for (int j = 0; j < steps; j += 2) {
            mesh.panels.push_back(first + j);
            mesh.panel_beta.push_back(it->second);
        }
    }
    mesh.t.push_back(breaks.back());
    mesh.anchor = mesh.index_of(anchor);
    return mesh;
}

int IntegralMesh::index_of(double time) const {
    const auto it = std::lower_bound(t.begin(), t.end(), time - 1e-12 * (1.0 + std::abs(time)));
    if (it == t.end() || std::abs(*it - time) > 1e-12 * (1.0 + std::abs(time))) {
        return -1;
    }
    return static_cast<int>(it - t.begin());
}

std::vector<int> IntegralMesh::node_beta() const {
    std::vector<int> out(t.size(), 0);
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const int p0 = panels[p];
        out[static_cast<std::size_t>(p0)] = panel_beta[p];
        out[static_cast<std::size_t>(p0 + 1)] = panel_beta[p];
    }
    // The last node is a knot and its own beta.
    out.back() = size() - 1;
    // A panel's first node can itself be a knot (beta = itself); panel_beta says so already.
    return out;
}

namespace {

MeshPropagators::Panel panel_from(const Matrix& f10, const Matrix& f21) {
    MeshPropagators::Panel p;
    p.f10 = f10;
    p.f21 = f21;
    p.f20 = f21 * f10;
    if (f10.rows() > 0) {
        p.f01 = f10.inverse();
        p.f12 = f21.inverse();
        p.f02 = p.f20.inverse();
    } else {
        p.f01 = p.f12 = p.f02 = f10;
    }
    return p;
}

std::vector<MeshPropagators::Panel> panels_for(const IntegralMesh& mesh, int dim, const std::optional<Matrix>& constant,
                                               const MatrixField& field, double max_step) {
    std::vector<MeshPropagators::Panel> out;
    out.reserve(mesh.panels.size());
    std::map<std::pair<double, double>, MeshPropagators::Panel> cache;
    for (int p0 : mesh.panels) {
        const double t0 = mesh.t[static_cast<std::size_t>(p0)];
        const double t1 = mesh.t[static_cast<std::size_t>(p0 + 1)];
        const double t2 = mesh.t[static_cast<std::size_t>(p0 + 2)];
        if (dim == 0) {
            out.push_back(panel_from(Matrix(0, 0), Matrix(0, 0)));
        } else if (constant) {
            const auto key = std::make_pair(t1 - t0, t2 - t1);
            auto it = cache.find(key);
            if (it == cache.end()) {
                it = cache.emplace(key, panel_from(rk4_fundamental_constant(*constant, t1, t0, max_step),
                                                   rk4_fundamental_constant(*constant, t2, t1, max_step)))
                         .first;
            }
            out.push_back(it->second);
        } else {
            out.push_back(panel_from(rk4_fundamental(field, t1, t0, max_step), rk4_fundamental(field, t2, t1, max_step)));
        }
    }
    return out;
}

}  // namespace

MeshPropagators::MeshPropagators(const ReducedSystem& red, const IntegralMesh& mesh, const FlowOptions& opt) {
    const ReducedSystem* r = &red;
    plus_ = panels_for(mesh, red.k, red.B_plus_const, [r](double t) { return r->B_plus(t); }, opt.max_step);
    minus_ = panels_for(mesh, red.n - red.k, red.B_minus_const, [r](double t) { return r->B_minus(t); }, opt.max_step);
}

Matrix sweep_block(const IntegralMesh& mesh, const std::vector<const MeshPropagators::Panel*>& panel_props,
                   const std::vector<std::array<Vector, 3>>& q, const BlockAnchor& anchor, int dim) {
    const int N = mesh.size();
    Matrix x = Matrix::Zero(dim, N);
    if (dim == 0) {
        return x;
    }
    x.col(anchor.node) = anchor.value;
    const int np = static_cast<int>(mesh.panels.size());

    // Forward from the anchor.
    for (int p = 0; p < np; ++p) {
        const int p0 = mesh.panels[static_cast<std::size_t>(p)];
        if (p0 < anchor.node) {
            continue;
        }
        const auto& P = *panel_props[static_cast<std::size_t>(p)];
        const auto& qq = q[static_cast<std::size_t>(p)];
        const double h = (mesh.t[static_cast<std::size_t>(p0 + 2)] - mesh.t[static_cast<std::size_t>(p0)]) / 2.0;
        const Vector x0 = x.col(p0);
        x.col(p0 + 2) = P.f20 * x0 + (h / 3.0) * (P.f20 * qq[0] + 4.0 * (P.f21 * qq[1]) + qq[2]);
        x.col(p0 + 1) = P.f10 * x0 + h * ((5.0 / 12.0) * (P.f10 * qq[0]) + (8.0 / 12.0) * qq[1] -
                                          (1.0 / 12.0) * (P.f12 * qq[2]));
    }
    // Backward from the anchor.
    for (int p = np - 1; p >= 0; --p) {
        const int p0 = mesh.panels[static_cast<std::size_t>(p)];
        if (p0 + 2 > anchor.node) {
            continue;
        }
        const auto& P = *panel_props[static_cast<std::size_t>(p)];
        const auto& qq = q[static_cast<std::size_t>(p)];
        const double h = (mesh.t[static_cast<std::size_t>(p0 + 2)] - mesh.t[static_cast<std::size_t>(p0)]) / 2.0;
        const Vector x2 = x.col(p0 + 2);
        x.col(p0) = P.f02 * x2 - (h / 3.0) * (qq[0] + 4.0 * (P.f01 * qq[1]) + P.f02 * qq[2]);
        x.col(p0 + 1) = P.f12 * x2 - h * (-(1.0 / 12.0) * (P.f10 * qq[0]) + (8.0 / 12.0) * qq[1] +
                                          (5.0 / 12.0) * (P.f12 * qq[2]));
    }
    return x;
}

PicardRun picard_iterate(const ReducedSystem& red, const IntegralMesh& mesh, const MeshPropagators& props,
                         const PanelForcing& forcing, const PicardSetup& setup) {
    const int n = red.n;
    const int k = red.k;
    const int N = mesh.size();
    const int np = static_cast<int>(mesh.panels.size());
    if (setup.u.node < 0 || setup.u.node >= N || setup.v.node < 0 || setup.v.node >= N) {
        throw InvalidParameter("Picard anchor is not a mesh node");
    }
    if (setup.u.value.size() != k || setup.v.value.size() != n - k) {
        throw InvalidParameter("Picard anchor value has the wrong dimension");
    }

    std::vector<const MeshPropagators::Panel*> plus(static_cast<std::size_t>(np));
    std::vector<const MeshPropagators::Panel*> minus(static_cast<std::size_t>(np));
    for (int p = 0; p < np; ++p) {
        plus[static_cast<std::size_t>(p)] = &props.plus(p);
        minus[static_cast<std::size_t>(p)] = &props.minus(p);
    }

    PicardRun run;
    Matrix z = setup.initial ? *setup.initial : Matrix::Zero(n, N);
    if (z.rows() != n || z.cols() != N) {
        throw InvalidParameter("initial iterate has the wrong shape");
    }
    std::vector<std::array<Vector, 3>> qp(static_cast<std::size_t>(np));
    std::vector<std::array<Vector, 3>> qm(static_cast<std::size_t>(np));

    for (int m = 0; m < setup.max_iter; ++m) {
        for (int p = 0; p < np; ++p) {
            const int p0 = mesh.panels[static_cast<std::size_t>(p)];
            const Vector w = z.col(mesh.panel_beta[static_cast<std::size_t>(p)]);
            for (int pos = 0; pos < 3; ++pos) {
                const int j = p0 + pos;
                const Vector g = forcing(p, pos, mesh.t[static_cast<std::size_t>(j)], z.col(j), w);
                qp[static_cast<std::size_t>(p)][static_cast<std::size_t>(pos)] = g.head(k);
                qm[static_cast<std::size_t>(p)][static_cast<std::size_t>(pos)] = g.tail(n - k);
            }
        }
        Matrix next(n, N);
        next.topRows(k) = sweep_block(mesh, plus, qp, setup.u, k);
        next.bottomRows(n - k) = sweep_block(mesh, minus, qm, setup.v, n - k);
        if (!next.allFinite()) {
            throw ConvergenceFailure("successive approximations produced non-finite values", m + 1,
                                     run.diffs.empty() ? 0.0 : run.diffs.back());
        }
        double d = 0.0;
        for (int j = 0; j < N; ++j) {
            d = std::max(d, (next.col(j) - z.col(j)).norm());
        }
        run.diffs.push_back(d);
        z = std::move(next);
        if (setup.on_iterate) {
            setup.on_iterate(m + 1, z);
        }
        if (d <= setup.tol) {
            // z_m was already a fixed point to within tol; count the sweeps that moved it.
            run.iterations = std::max(m, 1);
            run.converged = true;
            run.z = std::move(z);
            return run;
        }
    }
    const std::size_t s = run.diffs.size();
    const double ratio = s >= 2 && run.diffs[s - 2] > 0 ? run.diffs[s - 1] / run.diffs[s - 2] : 0.0;
    throw ConvergenceFailure("successive approximations did not converge", setup.max_iter, ratio);
}

}  // namespace epcag
