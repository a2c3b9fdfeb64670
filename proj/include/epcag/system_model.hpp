#pragma once

#include "epcag/ini_config.hpp"
#include "epcag/theta_grid.hpp"
#include "epcag/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epcag {

using MatrixFn = std::function<Matrix(double t)>;
/// f(t, y, w) where w stands for the frozen state y(beta(t)).
using NonlinearityFn = std::function<Vector(double t, const Vector& y, const Vector& w)>;

/// A bound that is either declared by the user or estimated by sampling.
/// Sampled estimates are lower bounds of the true constant.
struct Constant {
    double value = 0.0;
    bool estimated = false;
};

/// Box in (t, y, w) space.
struct DomainBox {
    double t_lo = 0.0;
    double t_hi = 0.0;
    Vector y_lo, y_hi;
    Vector w_lo, w_hi;

    /// Same [lo, hi] in every state coordinate.
    static DomainBox symmetric(int n, double lo, double hi, double t_lo, double t_hi);
    bool degenerate() const;
};

/// Dichotomy split declared for a time-varying box-diagonal A: the first `k`
/// coordinates are the stable block.
struct DeclaredDichotomy {
    double K = 1.0;
    double sigma = 1.0;
    int k = 0;
};

/// The quasilinear system y' = A(t) y + f(t, y(t), y(beta(t))).
struct SystemSpec {
    SystemSpec(std::string name, int n, MatrixFn A, NonlinearityFn f, ThetaGrid grid);

    std::string name;
    int n;
    MatrixFn A;
    NonlinearityFn f;
    ThetaGrid grid;

    /// Set when A does not depend on t.
    std::optional<Matrix> constant_A;
    std::optional<Constant> mu;
    std::optional<Constant> lip;
    std::optional<double> h0;
    /// Common period of A and f in t.
    std::optional<double> period;
    /// Region on which `lip` is claimed.
    std::optional<DomainBox> domain;
    std::optional<DeclaredDichotomy> dichotomy;

    Matrix A_at(double t) const { return constant_A ? *constant_A : A(t); }
};

/// f(t, y, w) with a window check on t.
Vector eval_f(const SystemSpec& spec, double t, const Vector& y, const Vector& w);

/// Full right-hand side A(t) y + f(t, y, w).
Vector eval_rhs(const SystemSpec& spec, double t, const Vector& y, const Vector& w);

struct LipschitzEstimate {
    double value = 0.0;
    int pairs = 0;
    /// Always true: sampled quotients bound the constant from below.
    bool lower_bound = true;
};

/// Max of |f(t,y1,w1) - f(t,y2,w2)| / (|y1-y2| + |w1-w2|) over sampled pairs in
/// `box`. Half of the pairs are local (one block perturbed by 1e-3 of the box
/// width) so the estimate approaches sup |df| on smooth f.
LipschitzEstimate estimate_lipschitz(const SystemSpec& spec, const DomainBox& box, int samples,
                                     std::uint64_t seed = 1);

/// Max of |A(t)| over `samples` equally spaced t in `window`.
double estimate_mu(const SystemSpec& spec, Window window, int samples);

struct SpecCheck {
    std::string name;
    double observed = 0.0;
    double limit = 0.0;
    bool holds = false;
    std::string note;
};

/// Sampled checks of the SystemSpec invariants: A continuity, |A(t)| <= mu,
/// and the Lipschitz bound on the declared domain.
std::vector<SpecCheck> validate_system(const SystemSpec& spec, Window window, int samples,
                                       std::uint64_t seed = 1);

/// Pluggable parameters of registry problems.
struct RegistryOptions {
    /// diag-dichotomy: amplitude a of f = a (sin y2, sin w1); default 0.01.
    /// forced-scalar: feedback gain b of f = h0 + b w1; default 0.
    std::optional<double> coupling{};
    /// diag-dichotomy: sigma0 in A = diag(-sigma0, sigma0); default 1.
    std::optional<double> sigma0{};
};

/// Built-in problems: paper-example-1, diag-dichotomy, forced-scalar, periodic-coupled.
SystemSpec get_problem(std::string_view name, const RegistryOptions& options = {});
std::vector<std::string> problem_names();

/// Builds a system from the [system], [grid], [constants] and [dichotomy]
/// sections. The grammar is documented in docs/config.md.
SystemSpec parse_system(std::string_view config_text);
SystemSpec system_from_config(const IniDocument& doc);

/// Grid from a [grid] section.
ThetaGrid grid_from_section(const IniSection& section);

}  // namespace epcag
