#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace epcag {

/// Closed time interval [lo, hi].
struct Window {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double t) const { return t >= lo && t <= hi; }
    double length() const { return hi - lo; }
};

/// The switching sequence theta_i of a piecewise constant argument and the
/// identification function beta(t) = theta_i for theta_i <= t < theta_{i+1}.
///
/// The sequence is infinite in principle; a grid answers queries only inside
/// its working window and throws OutOfWindow elsewhere. Uniform and
/// periodic-pattern grids compute knots on demand, explicit grids store them.
/// Immutable after construction.
class ThetaGrid {
public:
    /// theta_{i+p} = theta_i + omega_bar for every i.
    struct Periodicity {
        int p = 1;
        double omega_bar = 1.0;
    };

    /// Knots offset + k*step. Periodicity (1, step).
    static ThetaGrid uniform(double step, double offset, Window window);

    /// Knots exactly as given; the working window is [front, back].
    static ThetaGrid explicit_knots(std::vector<double> knots,
                                    std::optional<Periodicity> periodicity = std::nullopt);

    /// Knots pattern[j] + q*period, indexed i = j + q*pattern.size().
    /// The pattern must be strictly increasing and span less than one period.
    static ThetaGrid periodic_pattern(std::vector<double> pattern, double period, Window window);

    double beta(double t) const;

    /// The index i with theta_i <= t < theta_{i+1}. On explicit grids the
    /// right window end maps to the last stored index.
    long interval_index(double t) const;

    /// theta_i for a represented index.
    double knot(long i) const;

    /// Represented index range: knot(first_index()) <= window.lo and
    /// knot(last_index()) >= window.hi (explicit grids end at their last knot).
    long first_index() const;
    long last_index() const;

    /// All knots in [a, b], ascending.
    std::vector<double> knots_between(double a, double b) const;

    /// Smallest knot >= t (t must lie in the window; may return a knot past window.hi).
    double next_knot_at_or_after(double t) const;

    double gap_bound() const { return gap_bound_; }
    Window window() const { return window_; }
    std::optional<Periodicity> periodicity() const { return periodicity_; }
    bool contains(double t) const { return window_.contains(t); }

    std::string describe() const;

private:
    struct Explicit {
        std::vector<double> knots;
    };
    struct Pattern {
        std::vector<double> offsets;
        double period;
    };

    ThetaGrid() = default;
    void require_in_window(double t) const;
    long locate(double t) const;

    std::variant<Explicit, Pattern> rep_;
    Window window_;
    double gap_bound_ = 0.0;
    std::optional<Periodicity> periodicity_;
};

}  // namespace epcag
