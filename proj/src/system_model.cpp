#include "epcag/system_model.hpp"

#include "epcag/error.hpp"
#include "epcag/expression.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace epcag {

SystemSpec::SystemSpec(std::string name_, int n_, MatrixFn A_, NonlinearityFn f_, ThetaGrid grid_)
    : name(std::move(name_)), n(n_), A(std::move(A_)), f(std::move(f_)), grid(std::move(grid_)) {
    if (n < 1) {
        throw InvalidParameter("system dimension must be positive");
    }
}

DomainBox DomainBox::symmetric(int n, double lo, double hi, double t_lo, double t_hi) {
    DomainBox b;
    b.t_lo = t_lo;
    b.t_hi = t_hi;
    b.y_lo = Vector::Constant(n, lo);
    b.y_hi = Vector::Constant(n, hi);
    b.w_lo = b.y_lo;
    b.w_hi = b.y_hi;
    return b;
}

bool DomainBox::degenerate() const {
    if (y_lo.size() != y_hi.size() || w_lo.size() != w_hi.size() || y_lo.size() == 0) {
        return true;
    }
    return !((y_hi - y_lo).minCoeff() > 0.0) || !((w_hi - w_lo).minCoeff() > 0.0) || t_hi < t_lo;
}

Vector eval_f(const SystemSpec& spec, double t, const Vector& y, const Vector& w) {
    if (!spec.grid.contains(t)) {
        throw OutOfWindow("eval_f: t = " + std::to_string(t) + " outside the system window");
    }
    return spec.f(t, y, w);
}

Vector eval_rhs(const SystemSpec& spec, double t, const Vector& y, const Vector& w) {
    return spec.A_at(t) * y + eval_f(spec, t, y, w);
}

LipschitzEstimate estimate_lipschitz(const SystemSpec& spec, const DomainBox& box, int samples,
                                     std::uint64_t seed) {
    if (samples < 2) {
        throw InvalidParameter("estimate_lipschitz: need at least 2 samples");
    }
    if (box.degenerate() || box.y_lo.size() != spec.n || box.w_lo.size() != spec.n) {
        throw InvalidParameter("estimate_lipschitz: box is degenerate or has the wrong dimension");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = spec.n;
    auto draw = [&](const Vector& lo, const Vector& hi) {
        Vector v(n);
        for (int i = 0; i < n; ++i) {
            v[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
        }
        return v;
    };

    LipschitzEstimate est;
    for (int s = 0; s < samples; ++s) {
        const double t = box.t_lo + unit(rng) * (box.t_hi - box.t_lo);
        Vector y1 = draw(box.y_lo, box.y_hi);
        Vector w1 = draw(box.w_lo, box.w_hi);
        Vector y2, w2;
        if (s % 2 == 0) {
            y2 = draw(box.y_lo, box.y_hi);
            w2 = draw(box.w_lo, box.w_hi);
        } else {
            // Local pair: perturb one coordinate of y or w, staying inside the box.
            y2 = y1;
            w2 = w1;
            const int coord = static_cast<int>(unit(rng) * 2 * n) % (2 * n);
            Vector& target = coord < n ? y2 : w2;
            const Vector& lo = coord < n ? box.y_lo : box.w_lo;
            const Vector& hi = coord < n ? box.y_hi : box.w_hi;
            const int i = coord % n;
            const double h = 1e-3 * (hi[i] - lo[i]);
            target[i] = target[i] + h <= hi[i] ? target[i] + h : target[i] - h;
        }
        const double denom = (y1 - y2).norm() + (w1 - w2).norm();
        if (denom == 0.0) {
            continue;
        }
        const double q = (spec.f(t, y1, w1) - spec.f(t, y2, w2)).norm() / denom;
        est.value = std::max(est.value, q);
        ++est.pairs;
    }
    return est;
}

double estimate_mu(const SystemSpec& spec, Window window, int samples) {
    if (spec.constant_A) {
        return operator_norm(*spec.constant_A);
    }
    samples = std::max(samples, 2);
    double mu = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = window.lo + window.length() * i / (samples - 1);
        mu = std::max(mu, operator_norm(spec.A(t)));
    }
    return mu;
}

std::vector<SpecCheck> validate_system(const SystemSpec& spec, Window window, int samples, std::uint64_t seed) {
    std::vector<SpecCheck> out;
    samples = std::max(samples, 2);

    SpecCheck cont{"A continuity", 0.0, 0.0, true, "max |A(t+1e-7) - A(t)| / (1 + |A(t)|)"};
    cont.limit = 1e-4;
    double max_norm = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = window.lo + window.length() * i / (samples - 1);
        const Matrix a = spec.A_at(t);
        const double na = operator_norm(a);
        max_norm = std::max(max_norm, na);
        if (!spec.constant_A && window.contains(t + 1e-7)) {
            cont.observed = std::max(cont.observed, operator_norm(spec.A(t + 1e-7) - a) / (1.0 + na));
        }
    }
    cont.holds = cont.observed <= cont.limit;
    out.push_back(cont);

    SpecCheck mu{"sup |A(t)| <= mu", max_norm, spec.mu ? spec.mu->value : max_norm, true, ""};
    mu.holds = !spec.mu || max_norm <= spec.mu->value * (1.0 + 1e-12) + 1e-15;
    mu.note = !spec.mu ? "mu not declared; sampled value shown" : (spec.mu->estimated ? "based on sampled estimates" : "");
    out.push_back(mu);

    DomainBox box = spec.domain ? *spec.domain : DomainBox::symmetric(spec.n, -1.0, 1.0, window.lo, window.hi);
    box.t_lo = std::max(box.t_lo, window.lo);
    box.t_hi = std::min(box.t_hi, window.hi);
    if (box.t_hi < box.t_lo) {
        box.t_lo = window.lo;
        box.t_hi = window.hi;
    }
    const auto est = estimate_lipschitz(spec, box, samples, seed);
    SpecCheck lip{"Lipschitz of f <= l", est.value, spec.lip ? spec.lip->value : est.value, true, ""};
    lip.holds = !spec.lip || est.value <= spec.lip->value * (1.0 + 1e-9) + 1e-15;
    lip.note = spec.domain ? "on declared domain" : "on box [-1,1]^n (no domain declared)";
    if (spec.lip && spec.lip->estimated) {
        lip.note += "; based on sampled estimates";
    }
    out.push_back(lip);
    return out;
}

// ---------------------------------------------------------------------------
// Registry

namespace {

constexpr Window kRegistryWindow{-1000.0, 1000.0};

SystemSpec example_1() {
    auto grid = ThetaGrid::uniform(1.0, 0.0, kRegistryWindow);
    SystemSpec s(
        "paper-example-1", 1, [](double) { return Matrix::Constant(1, 1, 2.0); },
        [](double, const Vector&, const Vector& w) {
            Vector out(1);
            out[0] = -w[0] * w[0];
            return out;
        },
        grid);
    s.constant_A = Matrix::Constant(1, 1, 2.0);
    s.mu = Constant{2.0, false};
    // -w^2 is Lipschitz only on bounded sets; constant stated for |y|, |w| <= 1.
    s.lip = Constant{2.0, false};
    s.domain = DomainBox::symmetric(1, -1.0, 1.0, kRegistryWindow.lo, kRegistryWindow.hi);
    s.h0 = 0.0;
    return s;
}

SystemSpec diag_dichotomy(const RegistryOptions& opt) {
    const double a = opt.coupling.value_or(0.01);
    const double s0 = opt.sigma0.value_or(1.0);
    if (!(s0 > 0.0)) {
        throw InvalidParameter("diag-dichotomy: sigma0 must be positive");
    }
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = -s0;
    A(1, 1) = s0;
    auto grid = ThetaGrid::uniform(1.0, 0.0, kRegistryWindow);
    SystemSpec s(
        "diag-dichotomy", 2, [A](double) { return A; },
        [a](double, const Vector& y, const Vector& w) {
            Vector out(2);
            out[0] = a * std::sin(y[1]);
            out[1] = a * std::sin(w[0]);
            return out;
        },
        grid);
    s.constant_A = A;
    s.mu = Constant{s0, false};
    s.lip = Constant{std::abs(a), false};
    s.h0 = 0.0;
    return s;
}

SystemSpec forced_scalar(const RegistryOptions& opt) {
    const double b = opt.coupling.value_or(0.0);
    constexpr double h = 0.5;
    auto grid = ThetaGrid::uniform(1.0, 0.0, kRegistryWindow);
    SystemSpec s(
        "forced-scalar", 1, [](double) { return Matrix::Constant(1, 1, -1.0); },
        [b](double, const Vector&, const Vector& w) {
            Vector out(1);
            out[0] = h + b * w[0];
            return out;
        },
        grid);
    s.constant_A = Matrix::Constant(1, 1, -1.0);
    s.mu = Constant{1.0, false};
    s.lip = Constant{std::abs(b), false};
    s.h0 = h;
    return s;
}

SystemSpec periodic_coupled() {
    auto grid = ThetaGrid::uniform(0.5, 0.0, kRegistryWindow);
    SystemSpec s(
        "periodic-coupled", 1, [](double) { return Matrix::Constant(1, 1, -1.0); },
        [](double t, const Vector&, const Vector& w) {
            Vector out(1);
            out[0] = std::sin(2.0 * std::numbers::pi * t) + 0.1 * w[0];
            return out;
        },
        grid);
    s.constant_A = Matrix::Constant(1, 1, -1.0);
    s.mu = Constant{1.0, false};
    s.lip = Constant{0.1, false};
    s.h0 = 1.0;
    s.period = 1.0;
    return s;
}

}  // namespace

std::vector<std::string> problem_names() {
    return {"paper-example-1", "diag-dichotomy", "forced-scalar", "periodic-coupled"};
}

SystemSpec get_problem(std::string_view name, const RegistryOptions& options) {
    if (name == "paper-example-1") {
        return example_1();
    }
    if (name == "diag-dichotomy") {
        return diag_dichotomy(options);
    }
    if (name == "forced-scalar") {
        return forced_scalar(options);
    }
    if (name == "periodic-coupled") {
        return periodic_coupled();
    }
    throw InvalidParameter("unknown problem '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Config

namespace {

Window parse_window(const IniEntry& e) {
    auto parts = split_value(e.value, e.value_at, ',');
    if (parts.size() != 2) {
        throw ParseError("window needs two numbers 'lo, hi'", e.value_at);
    }
    Window w{parse_real(parts[0]), parse_real(parts[1])};
    if (!(w.lo < w.hi)) {
        throw ParseError("window must satisfy lo < hi", e.value_at);
    }
    return w;
}

std::vector<double> parse_list(const IniEntry& e) {
    std::vector<double> out;
    for (const auto& p : split_value(e.value, e.value_at, ',')) {
        out.push_back(parse_real(p));
    }
    return out;
}

const IniEntry& require(const IniSection& s, std::string_view key) {
    const IniEntry* e = s.find(key);
    if (e == nullptr) {
        throw ParseError("missing key '" + std::string(key) + "' in [" + s.name + "]", s.at);
    }
    return *e;
}

double real_of(const IniEntry& e) { return parse_real(ValuePiece{e.value, e.value_at}); }

std::optional<Constant> parse_constant(const IniSection* s, std::string_view key) {
    if (s == nullptr) {
        return std::nullopt;
    }
    const IniEntry* e = s->find(key);
    if (e == nullptr) {
        return std::nullopt;
    }
    if (e->value == "estimate") {
        return Constant{0.0, true};
    }
    return Constant{real_of(*e), false};
}

}  // namespace

ThetaGrid grid_from_section(const IniSection& g) {
    g.reject_unknown({"kind", "step", "offset", "window", "knots", "pattern", "period", "p", "omega_bar"});
    const IniEntry& kind = require(g, "kind");
    if (kind.value == "uniform") {
        const double step = real_of(require(g, "step"));
        const double offset = g.find("offset") ? real_of(*g.find("offset")) : 0.0;
        const Window w = g.find("window") ? parse_window(*g.find("window")) : Window{-1000.0, 1000.0};
        return ThetaGrid::uniform(step, offset, w);
    }
    if (kind.value == "explicit") {
        std::optional<ThetaGrid::Periodicity> per;
        if (g.find("p") || g.find("omega_bar")) {
            const IniEntry& pe = require(g, "p");
            per = ThetaGrid::Periodicity{static_cast<int>(parse_integer(ValuePiece{pe.value, pe.value_at})),
                                         real_of(require(g, "omega_bar"))};
        }
        return ThetaGrid::explicit_knots(parse_list(require(g, "knots")), per);
    }
    if (kind.value == "periodic-pattern") {
        const Window w = g.find("window") ? parse_window(*g.find("window")) : Window{-1000.0, 1000.0};
        return ThetaGrid::periodic_pattern(parse_list(require(g, "pattern")), real_of(require(g, "period")), w);
    }
    throw ParseError("grid kind must be uniform, explicit or periodic-pattern", kind.value_at);
}

SystemSpec system_from_config(const IniDocument& doc) {
    const IniSection* sys = doc.section("system");
    if (sys == nullptr) {
        throw ParseError("missing [system] section", SourceLocation{1, 1});
    }
    sys->reject_unknown({"name", "problem", "coupling", "sigma0", "n", "A", "f", "rhs"});
    const IniSection* consts = doc.section("constants");
    if (consts) {
        consts->reject_unknown({"mu", "lip", "h0", "period", "domain"});
    }
    const IniSection* grid_sec = doc.section("grid");
    const IniSection* dich = doc.section("dichotomy");
    if (dich) {
        dich->reject_unknown({"K", "sigma", "k"});
    }

    if (const IniEntry* prob = sys->find("problem")) {
        for (const auto* key : {"n", "A", "f", "rhs"}) {
            if (sys->find(key)) {
                throw ParseError(std::string("key '") + key + "' conflicts with 'problem'", sys->find(key)->key_at);
            }
        }
        RegistryOptions opt;
        if (const IniEntry* c = sys->find("coupling")) {
            opt.coupling = real_of(*c);
        }
        if (const IniEntry* c = sys->find("sigma0")) {
            opt.sigma0 = real_of(*c);
        }
        try {
            SystemSpec s = get_problem(prob->value, opt);
            if (grid_sec) {
                s.grid = grid_from_section(*grid_sec);
            }
            return s;
        } catch (const InvalidParameter& e) {
            throw ParseError(e.what(), prob->value_at);
        }
    }

    const IniEntry& n_entry = require(*sys, "n");
    const long n_long = parse_integer(ValuePiece{n_entry.value, n_entry.value_at});
    if (n_long < 1 || n_long > 64) {
        throw ParseError("n must be in [1, 64]", n_entry.value_at);
    }
    const int n = static_cast<int>(n_long);

    // A: rows separated by ';', entries by ','.
    const IniEntry& a_entry = require(*sys, "A");
    auto rows = split_value(a_entry.value, a_entry.value_at, ';');
    if (static_cast<int>(rows.size()) != n) {
        throw ParseError("dimension mismatch: A has " + std::to_string(rows.size()) + " rows, n = " +
                             std::to_string(n),
                         a_entry.value_at);
    }
    std::vector<Expression> a_exprs;
    bool a_depends_on_t = false;
    for (const auto& row : rows) {
        auto cells = split_value(row.text, row.at, ',');
        if (static_cast<int>(cells.size()) != n) {
            throw ParseError("dimension mismatch: A row has " + std::to_string(cells.size()) + " entries, n = " +
                                 std::to_string(n),
                             row.at);
        }
        for (const auto& c : cells) {
            Expression e = Expression::parse(c.text, n, c.at);
            if (e.uses_state()) {
                throw ParseError("entries of A may depend on t only", c.at);
            }
            a_depends_on_t = a_depends_on_t || e.uses_time();
            a_exprs.push_back(std::move(e));
        }
    }
    auto a_fn = [a_exprs, n](double t) {
        Matrix m(n, n);
        const double dummy = 0.0;
        std::span<const double> none(&dummy, 1);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                m(i, j) = a_exprs[static_cast<std::size_t>(i * n + j)].evaluate(t, none, none);
            }
        }
        return m;
    };

    const IniEntry* f_entry = sys->find("f");
    const IniEntry* rhs_entry = sys->find("rhs");
    if ((f_entry == nullptr) == (rhs_entry == nullptr)) {
        throw ParseError("[system] needs exactly one of 'f' or 'rhs'", sys->at);
    }
    const IniEntry& fe = f_entry ? *f_entry : *rhs_entry;
    auto comps = split_value(fe.value, fe.value_at, ',');
    if (static_cast<int>(comps.size()) != n) {
        throw ParseError("dimension mismatch: " + fe.key + " has " + std::to_string(comps.size()) +
                             " components, n = " + std::to_string(n),
                         fe.value_at);
    }
    std::vector<Expression> f_exprs;
    bool f_depends_on_t = false;
    for (const auto& c : comps) {
        f_exprs.push_back(Expression::parse(c.text, n, c.at));
        f_depends_on_t = f_depends_on_t || f_exprs.back().uses_time();
    }
    const bool subtract_linear = rhs_entry != nullptr;
    NonlinearityFn f_fn = [f_exprs, n, subtract_linear, a_fn](double t, const Vector& y, const Vector& w) {
        Vector out(n);
        std::span<const double> ys(y.data(), static_cast<std::size_t>(y.size()));
        std::span<const double> ws(w.data(), static_cast<std::size_t>(w.size()));
        for (int i = 0; i < n; ++i) {
            out[i] = f_exprs[static_cast<std::size_t>(i)].evaluate(t, ys, ws);
        }
        if (subtract_linear) {
            out -= a_fn(t) * y;
        }
        return out;
    };

    if (grid_sec == nullptr) {
        throw ParseError("missing [grid] section", SourceLocation{1, 1});
    }
    ThetaGrid grid = grid_from_section(*grid_sec);

    std::string name = sys->find("name") ? sys->find("name")->value : std::string("config");
    SystemSpec spec(name, n, a_fn, f_fn, grid);
    if (!a_depends_on_t) {
        spec.constant_A = a_fn(0.0);
    }

    if (consts) {
        if (const IniEntry* d = consts->find("domain")) {
            auto parts = split_value(d->value, d->value_at, ',');
            if (parts.size() != 2) {
                throw ParseError("domain needs 'lo, hi'", d->value_at);
            }
            spec.domain = DomainBox::symmetric(n, parse_real(parts[0]), parse_real(parts[1]), grid.window().lo,
                                               grid.window().hi);
            if (spec.domain->degenerate()) {
                throw ParseError("domain must satisfy lo < hi", d->value_at);
            }
        }
        if (const IniEntry* h = consts->find("h0")) {
            spec.h0 = real_of(*h);
        }
        if (const IniEntry* p = consts->find("period")) {
            spec.period = real_of(*p);
            if (!(*spec.period > 0.0)) {
                throw ParseError("period must be positive", p->value_at);
            }
        }
    }
    spec.mu = parse_constant(consts, "mu");
    if (spec.mu && spec.mu->estimated) {
        spec.mu->value = estimate_mu(spec, grid.window(), 2001);
    }
    spec.lip = parse_constant(consts, "lip");
    if (spec.lip && spec.lip->estimated) {
        DomainBox box = spec.domain ? *spec.domain
                                    : DomainBox::symmetric(n, -1.0, 1.0, grid.window().lo, grid.window().hi);
        spec.lip->value = estimate_lipschitz(spec, box, 20000).value;
    }
    if (dich) {
        DeclaredDichotomy d;
        d.K = real_of(require(*dich, "K"));
        d.sigma = real_of(require(*dich, "sigma"));
        const IniEntry& ke = require(*dich, "k");
        d.k = static_cast<int>(parse_integer(ValuePiece{ke.value, ke.value_at}));
        if (d.k < 0 || d.k > n || d.K < 1.0 || !(d.sigma > 0.0)) {
            throw ParseError("dichotomy needs 0 <= k <= n, K >= 1, sigma > 0", dich->at);
        }
        spec.dichotomy = d;
    }
    (void)f_depends_on_t;
    return spec;
}

SystemSpec parse_system(std::string_view config_text) { return system_from_config(IniDocument::parse(config_text)); }

}  // namespace epcag
