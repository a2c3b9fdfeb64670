#include "epcag/theta_grid.hpp"

#include "epcag/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace epcag {

namespace {

long floor_div(long a, long b) {
    long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

}  // namespace

ThetaGrid ThetaGrid::uniform(double step, double offset, Window window) {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw InvalidParameter("uniform grid: step must be positive, got " + std::to_string(step));
    }
    if (!std::isfinite(offset)) {
        throw InvalidParameter("uniform grid: offset must be finite");
    }
    auto grid = periodic_pattern({offset}, step, window);
    return grid;
}

ThetaGrid ThetaGrid::periodic_pattern(std::vector<double> pattern, double period, Window window) {
    if (pattern.empty()) {
        throw InvalidParameter("periodic grid: pattern is empty");
    }
    if (!(period > 0.0) || !std::isfinite(period)) {
        throw InvalidParameter("periodic grid: period must be positive");
    }
    if (!(window.lo < window.hi) || !std::isfinite(window.lo) || !std::isfinite(window.hi)) {
        throw InvalidParameter("grid window must be a nonempty finite interval");
    }
    for (std::size_t j = 1; j < pattern.size(); ++j) {
        if (!(pattern[j] > pattern[j - 1])) {
            throw InvalidParameter("periodic grid: pattern must be strictly increasing");
        }
    }
    if (!(pattern.back() < pattern.front() + period)) {
        throw InvalidParameter("periodic grid: pattern must span less than one period");
    }
    ThetaGrid g;
    double gap = pattern.front() + period - pattern.back();
    for (std::size_t j = 1; j < pattern.size(); ++j) {
        gap = std::max(gap, pattern[j] - pattern[j - 1]);
    }
    g.gap_bound_ = gap;
    g.periodicity_ = Periodicity{static_cast<int>(pattern.size()), period};
    g.rep_ = Pattern{std::move(pattern), period};
    g.window_ = window;
    return g;
}

ThetaGrid ThetaGrid::explicit_knots(std::vector<double> knots, std::optional<Periodicity> periodicity) {
    if (knots.size() < 2) {
        throw InvalidParameter("explicit grid needs at least two knots");
    }
    double gap = 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i] > knots[i - 1])) {
            throw InvalidParameter("explicit grid: knots must be strictly increasing");
        }
        gap = std::max(gap, knots[i] - knots[i - 1]);
    }
    if (periodicity) {
        if (periodicity->p < 1 || !(periodicity->omega_bar > 0.0)) {
            throw InvalidParameter("explicit grid: periodicity needs p >= 1 and omega_bar > 0");
        }
        const auto p = static_cast<std::size_t>(periodicity->p);
        for (std::size_t i = 0; i + p < knots.size(); ++i) {
            double expected = knots[i] + periodicity->omega_bar;
            if (std::abs(knots[i + p] - expected) > 1e-12 * std::max(1.0, std::abs(expected))) {
                throw InvalidParameter("explicit grid: knots violate theta_{i+p} = theta_i + omega_bar at index " +
                                       std::to_string(i));
            }
        }
    }
    ThetaGrid g;
    g.window_ = Window{knots.front(), knots.back()};
    g.gap_bound_ = gap;
    g.periodicity_ = periodicity;
    g.rep_ = Explicit{std::move(knots)};
    return g;
}

void ThetaGrid::require_in_window(double t) const {
    if (!window_.contains(t)) {
        std::ostringstream os;
        os << "time " << t << " outside grid window [" << window_.lo << ", " << window_.hi << "]";
        throw OutOfWindow(os.str());
    }
}

double ThetaGrid::knot(long i) const {
    if (const auto* e = std::get_if<Explicit>(&rep_)) {
        if (i < 0 || i >= static_cast<long>(e->knots.size())) {
            throw OutOfWindow("knot index " + std::to_string(i) + " not represented");
        }
        return e->knots[static_cast<std::size_t>(i)];
    }
    const auto& pat = std::get<Pattern>(rep_);
    const long p = static_cast<long>(pat.offsets.size());
    const long q = floor_div(i, p);
    const long j = i - q * p;
    return pat.offsets[static_cast<std::size_t>(j)] + static_cast<double>(q) * pat.period;
}

long ThetaGrid::locate(double t) const {
    if (const auto* e = std::get_if<Explicit>(&rep_)) {
        auto it = std::upper_bound(e->knots.begin(), e->knots.end(), t);
        return static_cast<long>(it - e->knots.begin()) - 1;
    }
    const auto& pat = std::get<Pattern>(rep_);
    const long p = static_cast<long>(pat.offsets.size());
    const double q = std::floor((t - pat.offsets.front()) / pat.period);
    const double local = t - q * pat.period;
    auto it = std::upper_bound(pat.offsets.begin(), pat.offsets.end(), local);
    long i = static_cast<long>(q) * p + static_cast<long>(it - pat.offsets.begin()) - 1;
    // The floating-point reduction can land one knot off; settle against stored knot values.
    while (knot(i) > t) {
        --i;
    }
    while (knot(i + 1) <= t) {
        ++i;
    }
    return i;
}

long ThetaGrid::interval_index(double t) const {
    require_in_window(t);
    return locate(t);
}

double ThetaGrid::beta(double t) const { return knot(interval_index(t)); }

long ThetaGrid::first_index() const { return locate(window_.lo); }

long ThetaGrid::last_index() const {
    long i = locate(window_.hi);
    if (std::holds_alternative<Pattern>(rep_) && knot(i) < window_.hi) {
        ++i;
    }
    return i;
}

std::vector<double> ThetaGrid::knots_between(double a, double b) const {
    std::vector<double> out;
    if (b < a) {
        return out;
    }
    long i = locate(std::max(a, window_.lo));
    const long last = last_index();
    for (; i <= last; ++i) {
        double k = knot(i);
        if (k > b) {
            break;
        }
        if (k >= a) {
            out.push_back(k);
        }
    }
    return out;
}

double ThetaGrid::next_knot_at_or_after(double t) const {
    require_in_window(t);
    long i = locate(t);
    double k = knot(i);
    if (k == t) {
        return k;
    }
    if (i + 1 > last_index()) {
        throw OutOfWindow("no knot after " + std::to_string(t) + " inside the grid");
    }
    return knot(i + 1);
}

std::string ThetaGrid::describe() const {
    std::ostringstream os;
    if (const auto* e = std::get_if<Explicit>(&rep_)) {
        os << "explicit(" << e->knots.size() << " knots)";
    } else {
        const auto& pat = std::get<Pattern>(rep_);
        if (pat.offsets.size() == 1) {
            os << "uniform(step=" << pat.period << ", offset=" << pat.offsets.front() << ")";
        } else {
            os << "periodic(p=" << pat.offsets.size() << ", period=" << pat.period << ")";
        }
    }
    os << " on [" << window_.lo << ", " << window_.hi << "]";
    return os.str();
}

}  // namespace epcag
