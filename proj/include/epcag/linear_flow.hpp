#pragma once

#include "epcag/integrator.hpp"
#include "epcag/system_model.hpp"
#include "epcag/types.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace epcag {

struct FlowOptions {
    /// Longest RK4 step for the matrix ODE.
    double max_step = 1.0 / 1024.0;
};

/// X(t, s) for x' = A(t) x, with X(s, s) = I.
Matrix fundamental_matrix(const SystemSpec& spec, double t, double s, const FlowOptions& opt = {});
Matrix fundamental_matrix(const MatrixField& A, double t, double s, const FlowOptions& opt = {});

/// Operator-norm bounds of X(t, s) over one grid gap: M = e^{mu theta}, m = e^{-mu theta}.
struct FlowBounds {
    double M = 1.0;
    double m = 1.0;
};
FlowBounds flow_bounds(double mu, double theta);

struct FlowBoundReport {
    double mu = 0.0;
    bool mu_estimated = false;
    int pairs = 0;
    /// max over pairs of how far |X(t,s)| falls outside [e^{-mu|t-s|}, e^{mu|t-s|}]
    double max_violation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Checks e^{-mu|t-s|} <= |X(t,s)| <= e^{mu|t-s|} on the given (t, s) pairs.
/// Uses the declared mu, or a sampled estimate when none is declared.
FlowBoundReport verify_flow_bounds(const SystemSpec& spec, std::span<const std::pair<double, double>> pairs,
                                   double tolerance = 1e-8, const FlowOptions& opt = {});

/// Exponential dichotomy of x' = A(t) x:
///   |X(t) P X^{-1}(s)|     <= K e^{-sigma (t-s)},  t >= s
///   |X(t)(I-P) X^{-1}(s)|  <= K e^{ sigma (s-t)},  t <= s
/// with X(t) normalised at t_ref.
struct DichotomyData {
    Matrix P;
    double K = 1.0;
    double sigma = 0.0;
    int k_plus = 0;
    double t_ref = 0.0;
    Window window{-1e300, 1e300};
    /// Eigenvector matrix (columns) and eigenvalues when built from a constant A.
    Eigen::MatrixXcd eigenvectors;
    Eigen::VectorXcd eigenvalues;
};

/// Spectral projection onto the eigenvalues with negative real part;
/// sigma = min |Re lambda|; K = cond_2(V) of the unit-column eigenvector matrix.
/// Throws NoDichotomy when some |Re lambda| < tol or A is not diagonalizable.
DichotomyData dichotomy_for_constant_A(const Matrix& A, double tol = 1e-9);

/// Constant A: dichotomy_for_constant_A. Otherwise uses the declared split
/// (P = diag(I_k, 0)). Throws NoDichotomy if neither is available.
DichotomyData dichotomy_for(const SystemSpec& spec);

struct DichotomyCheck {
    int pairs = 0;
    /// max over sampled pairs of |X(t)PX^{-1}(s)| / (K e^{-sigma(t-s)}) and the unstable analogue
    double max_stable_ratio = 0.0;
    double max_unstable_ratio = 0.0;
    double projection_defect = 0.0;  // |P P - P|
    bool pass = false;
};
DichotomyCheck verify_dichotomy(const SystemSpec& spec, const DichotomyData& d, Window window, int samples,
                                std::uint64_t seed = 1, const FlowOptions& opt = {});

/// One side-by-side inequality lhs < rhs.
struct InequalityResult {
    std::string name;
    std::string formula;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    double margin() const { return rhs - lhs; }
};

/// l M theta [1 + M (1 + l theta) e^{M l theta}] < m with M = e^{mu theta}, m = e^{-mu theta}.
InequalityResult check_backward_uniqueness(double mu, double lip, double theta);

struct SmallnessReport {
    std::vector<InequalityResult> items;
    bool all_hold = false;
    const InequalityResult& item(std::string_view name) const;
};

/// Smallness conditions on the reduced Lipschitz constant L:
///   "iterate-bound":   K (K+eps) 2 sigma/(sigma^2-alpha^2) (1+e^{sigma theta}) L < eps
///   "F-lipschitz":     4 sigma K L (1+e^{sigma theta}) < sigma^2 - alpha^2
///   "contraction":     L < (sigma-alpha) / (2K (1+e^{sigma theta}))
///   "C6":              2KL/sigma < 1
///   "cone":            K (K^2+1)(1+e^{alpha theta}) L < sigma
/// Throws InvalidParameter unless 0 < alpha < sigma, K >= 1, theta > 0, L >= 0, eps > 0.
SmallnessReport check_smallness(double K, double sigma, double alpha, double theta, double L, double eps);

}  // namespace epcag
