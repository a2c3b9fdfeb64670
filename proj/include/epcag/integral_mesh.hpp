#pragma once

#include "epcag/linear_flow.hpp"
#include "epcag/lyapunov_reduction.hpp"
#include "epcag/theta_grid.hpp"
#include "epcag/types.hpp"

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace epcag {

/// Quadrature mesh for the integral equations of the split system.
///
/// Breakpoints are every grid knot in range plus the anchor time; each segment
/// between breakpoints is cut into an even number of equal steps, so Simpson
/// panels never straddle a knot and the integrand's jumps (where the frozen
/// argument changes) fall on panel boundaries.
struct IntegralMesh {
    std::vector<double> t;
    /// First node of each Simpson panel (nodes p, p+1, p+2).
    std::vector<int> panels;
    /// Mesh index of beta(t) for the panel (the left knot of its grid interval).
    std::vector<int> panel_beta;
    int anchor = 0;

    /// Mesh over [beta(lo), first knot >= hi], with `anchor` in [lo, hi] as an extra breakpoint.
    /// `substeps` is the number of steps per full grid gap (rounded up to even per segment).
    static IntegralMesh build(const ThetaGrid& grid, double lo, double hi, double anchor, int substeps);

    int size() const { return static_cast<int>(t.size()); }
    /// Index of the node equal to `time` (within 1e-12 relative); -1 if none.
    int index_of(double time) const;
    /// Mesh index of beta(t_j) for every node (right-continuous at knots).
    std::vector<int> node_beta() const;
};

/// Propagators of both blocks over each panel's node offsets.
class MeshPropagators {
public:
    MeshPropagators(const ReducedSystem& red, const IntegralMesh& mesh, const FlowOptions& opt);

    struct Panel {
        // Phi(t_a, t_b) for panel nodes 0, 1, 2.
        Matrix f10, f21, f20;  // forward
        Matrix f01, f12, f02;  // backward
    };
    const Panel& plus(int panel) const { return plus_[static_cast<std::size_t>(panel)]; }
    const Panel& minus(int panel) const { return minus_[static_cast<std::size_t>(panel)]; }

private:
    std::vector<Panel> plus_;
    std::vector<Panel> minus_;
};

/// Right-hand side of the integral equations at panel node `pos` (0, 1, 2):
/// forcing(panel, pos, t, z(t), z(beta(t))) -> n-vector (g+, g-) stacked.
using PanelForcing = std::function<Vector(int panel, int pos, double t, const Vector& z, const Vector& w)>;

/// How each block is anchored:
///   u(t) = Phi+(t, t_a) u_a + int_{t_a}^t Phi+(t, s) q+(s) ds
/// with t_a = mesh node `anchor`. An improper integral from -infinity is the
/// anchor at the first node with value 0; to +infinity, the last node with 0.
struct BlockAnchor {
    int node = 0;
    Vector value;
};

struct PicardSetup {
    BlockAnchor u;
    BlockAnchor v;
    double tol = 1e-8;
    int max_iter = 500;
    /// n x N initial iterate; zero when absent.
    std::optional<Matrix> initial;
    /// Called with (m, z_m) for every iterate m >= 1.
    std::function<void(int, const Matrix&)> on_iterate;
};

struct PicardRun {
    /// n x N converged iterate (column j at mesh node j).
    Matrix z;
    /// sup-norm changes d_m = |z_{m+1} - z_m|, m = 0, 1, ...
    std::vector<double> diffs;
    /// The m at which |z_{m+1} - z_m| <= tol first held (at least 1); z holds z_{m+1}.
    int iterations = 0;
    bool converged = false;
};

/// Successive approximations of the split integral equations on `mesh`.
/// Throws ConvergenceFailure after max_iter sweeps.
PicardRun picard_iterate(const ReducedSystem& red, const IntegralMesh& mesh, const MeshPropagators& props,
                         const PanelForcing& forcing, const PicardSetup& setup);

/// One sweep of the linear equation x' = B x + q on the mesh from an anchor,
/// q given per panel node. Exposed for testing.
Matrix sweep_block(const IntegralMesh& mesh, const std::vector<const MeshPropagators::Panel*>& panel_props,
                   const std::vector<std::array<Vector, 3>>& q, const BlockAnchor& anchor, int dim);

}  // namespace epcag
