#include "epcag/cli.hpp"

#include "epcag/acceptance.hpp"
#include "epcag/epcag_solver.hpp"
#include "epcag/error.hpp"
#include "epcag/ini_config.hpp"
#include "epcag/linear_flow.hpp"
#include "epcag/lyapunov_reduction.hpp"
#include "epcag/manifold_engine.hpp"
#include "epcag/report.hpp"
#include "epcag/steady_state.hpp"
#include "epcag/system_model.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace epcag::cli {

namespace {

using nlohmann::json;

/// Options shared by every subcommand.
struct Common {
    std::string config_path;
    std::string problem;
    std::optional<double> coupling;
    std::optional<double> sigma0;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string stamp;
};

/// Settings from an optional [run] section.
struct RunSection {
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::optional<int> substeps;
};

struct Loaded {
    std::optional<SystemSpec> spec;
    std::string problem = "manual";
    RunSection run;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidParameter("cannot read config file " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunSection run_section(const IniDocument& doc) {
    RunSection r;
    const IniSection* s = doc.section("run");
    if (!s) {
        return r;
    }
    s->reject_unknown({"out", "seed", "tol", "max_iter", "substeps"});
    for (const auto& e : s->entries) {
        const ValuePiece v{e.value, e.value_at};
        if (e.key == "out") {
            r.out = e.value;
        } else if (e.key == "seed") {
            const long x = parse_integer(v);
            if (x < 0) {
                throw ParseError("seed must be non-negative", e.value_at);
            }
            r.seed = static_cast<std::uint64_t>(x);
        } else if (e.key == "tol") {
            r.tol = parse_real(v);
            if (!(*r.tol > 0.0 && *r.tol < 1.0)) {
                throw ParseError("tol must lie in (0, 1)", e.value_at);
            }
        } else if (e.key == "max_iter") {
            const long x = parse_integer(v);
            if (x < 1 || x > 100000) {
                throw ParseError("max_iter must lie in [1, 100000]", e.value_at);
            }
            r.max_iter = static_cast<int>(x);
        } else if (e.key == "substeps") {
            const long x = parse_integer(v);
            if (x < 2 || x > 65536) {
                throw ParseError("substeps must lie in [2, 65536]", e.value_at);
            }
            r.substeps = static_cast<int>(x);
        }
    }
    return r;
}

Loaded load(const Common& c, bool system_required) {
    Loaded l;
    if (!c.config_path.empty() && !c.problem.empty()) {
        throw InvalidParameter("give either a config file or --problem, not both");
    }
    if (!c.config_path.empty()) {
        const std::string text = read_file(c.config_path);
        try {
            const IniDocument doc = IniDocument::parse(text);
            for (const auto& s : doc.sections()) {
                if (s.name != "system" && s.name != "grid" && s.name != "constants" && s.name != "dichotomy" &&
                    s.name != "run") {
                    throw ParseError("unknown section [" + s.name + "]", s.at);
                }
            }
            l.run = run_section(doc);
            l.spec = system_from_config(doc);
        } catch (const ParseError& e) {
            throw ParseError(c.config_path + ":" + e.what(), e.where());
        }
        l.problem = l.spec->name;
    } else if (!c.problem.empty()) {
        RegistryOptions opt;
        opt.coupling = c.coupling;
        opt.sigma0 = c.sigma0;
        l.spec = get_problem(c.problem, opt);
        l.problem = c.problem;
    } else if (system_required) {
        throw InvalidParameter("no system: pass a config file or --problem <name> (one of: paper-example-1, "
                               "diag-dichotomy, forced-scalar, periodic-coupled)");
    }
    return l;
}

std::string out_dir(const Common& c, const Loaded& l) {
    if (!c.out_dir.empty()) {
        return c.out_dir;
    }
    if (const char* env = std::getenv("EPCAG_LAB_OUT"); env && *env) {
        return env;
    }
    if (l.run.out) {
        return *l.run.out;
    }
    return "epcag-out";
}

std::uint64_t seed_of(const Common& c, const Loaded& l) { return c.seed.value_or(l.run.seed.value_or(1)); }

Vector parse_vector(const std::string& text, const std::string& what) {
    std::vector<double> xs;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) {
            throw InvalidParameter(what + ": empty component in '" + text + "'");
        }
        item = item.substr(b, e - b + 1);
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) {
            throw InvalidParameter(what + ": '" + item + "' is not a number");
        }
        xs.push_back(x);
    }
    Vector v(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = xs[i];
    }
    return v;
}

Vector require_dim(const Vector& v, int n, const std::string& what) {
    if (v.size() != n) {
        throw InvalidParameter(what + " has " + std::to_string(v.size()) + " components, expected " +
                               std::to_string(n));
    }
    return v;
}

json json_vector(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(json_real(v(i)));
    }
    return a;
}

std::string show(const Vector& v) {
    std::ostringstream s;
    s << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        s << (i ? ", " : "") << std::setprecision(10) << v(i);
    }
    s << ')';
    return s.str();
}

json inequality_json(const InequalityResult& r) {
    return json{{"name", r.name},       {"formula", r.formula},         {"lhs", json_real(r.lhs)},
                {"rhs", json_real(r.rhs)}, {"margin", json_real(r.margin())}, {"holds", r.holds}};
}

void print_table(std::ostream& out, const std::vector<InequalityResult>& rows) {
    out << std::left << std::setw(15) << "inequality" << std::right << std::setw(16) << "lhs" << std::setw(16)
        << "rhs" << std::setw(16) << "margin" << "  verdict\n";
    for (const auto& r : rows) {
        out << std::left << std::setw(15) << r.name << std::right << std::setprecision(8) << std::setw(16) << r.lhs
            << std::setw(16) << r.rhs << std::setw(16) << r.margin() << "  " << (r.holds ? "holds" : "FAILS") << '\n';
    }
}

void path_rows(const SolutionPath& p, std::vector<CsvRow>& rows) {
    for (const auto& pt : p.points) {
        CsvRow r{format_real(pt.t)};
        for (Eigen::Index i = 0; i < pt.y.size(); ++i) {
            r.push_back(format_real(pt.y(i)));
        }
        r.push_back(std::to_string(pt.interval));
        for (Eigen::Index i = 0; i < pt.w.size(); ++i) {
            r.push_back(format_real(pt.w(i)));
        }
        rows.push_back(std::move(r));
    }
}

CsvRow path_header(int n) {
    CsvRow h{"t"};
    for (int i = 1; i <= n; ++i) {
        h.push_back("y" + std::to_string(i));
    }
    h.push_back("interval_index");
    for (int i = 1; i <= n; ++i) {
        h.push_back("frozen_w" + std::to_string(i));
    }
    return h;
}

CsvRow state_header(const std::string& prefix, int n) {
    CsvRow h{"t"};
    for (int i = 1; i <= n; ++i) {
        h.push_back(prefix + std::to_string(i));
    }
    return h;
}

std::shared_ptr<ReducedSystem> reduce_spec(const SystemSpec& spec) {
    return std::make_shared<ReducedSystem>(reduce(spec, dichotomy_for(spec)));
}

/// The envelope written for every run.
json envelope(const std::string& status, int code, json results) {
    return json{{"status", status}, {"exit_code", code}, {"results", std::move(results)}};
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    double t0 = 0.0;
    std::string x0;
    double t_end = 0.0;
    std::string w0;
    int substeps = 64;
};

int cmd_simulate(const Common& c, const SimulateArgs& a, std::ostream& out) {
    const Loaded l = load(c, true);
    const SystemSpec& spec = *l.spec;
    const Vector x0 = require_dim(parse_vector(a.x0, "--x0"), spec.n, "--x0");
    std::optional<Vector> w0;
    if (!a.w0.empty()) {
        w0 = require_dim(parse_vector(a.w0, "--w0"), spec.n, "--w0");
    }
    SolverOptions opt;
    opt.substeps = l.run.substeps.value_or(a.substeps);
    ArtifactWriter w(out_dir(c, l), "simulate", l.problem, c.stamp);
    const SolutionPath p = solve_forward(spec, a.t0, x0, a.t_end, opt, w0);

    std::vector<CsvRow> rows;
    path_rows(p, rows);
    const auto csv = w.write_csv(path_header(spec.n), rows);
    json intervals = json::array();
    for (const auto& d : p.diagnostics) {
        intervals.push_back(
            {{"interval", d.interval}, {"t_begin", d.t_begin}, {"t_end", d.t_end}, {"steps", d.steps}});
    }
    json res{{"t0", a.t0},
             {"t_end", a.t_end},
             {"x0", json_vector(x0)},
             {"final_state", json_vector(p.back().y)},
             {"points", p.points.size()},
             {"intervals", intervals},
             {"csv", csv.filename().string()}};
    const auto js = w.write_json(envelope("ok", kOk, res));
    out << "simulate " << l.problem << ": " << p.points.size() << " points over " << p.diagnostics.size()
        << " intervals, y(" << a.t_end << ") = " << show(p.back().y) << "\n  " << csv.string() << "\n  "
        << js.string() << '\n';
    return kOk;
}

// ------------------------------------------------------------ backcontinue

struct BackArgs {
    double t0 = 0.0;
    std::string x0;
    double t_target = 0.0;
    int lattice = 17;
};

int cmd_backcontinue(const Common& c, const BackArgs& a, std::ostream& out) {
    const Loaded l = load(c, true);
    const SystemSpec& spec = *l.spec;
    const Vector x0 = require_dim(parse_vector(a.x0, "--x0"), spec.n, "--x0");
    BackOptions opt;
    opt.lattice = a.lattice;
    if (l.run.substeps) {
        opt.solver.substeps = *l.run.substeps;
    }
    ArtifactWriter w(out_dir(c, l), "backcontinue", l.problem, c.stamp);
    const BackContinuation bc = back_continue(spec, a.t0, x0, a.t_target, opt);

    json steps = json::array();
    for (const auto& s : bc.steps) {
        json roots = json::array();
        for (const auto& r : s.roots) {
            roots.push_back({{"x", json_vector(r.x)}, {"residual", json_real(r.residual)}, {"degenerate", r.degenerate}});
        }
        steps.push_back({{"interval", s.interval},
                         {"t_target", s.t_target},
                         {"x_target", json_vector(s.x_target)},
                         {"classification", to_string(s.classification)},
                         {"roots", roots},
                         {"starts", s.starts},
                         {"budget_exhausted", s.budget_exhausted}});
    }
    json res{{"t0", a.t0},
             {"t_target", a.t_target},
             {"x0", json_vector(x0)},
             {"ok", bc.ok},
             {"non_unique", bc.non_unique},
             {"bw_holds", bc.bw_holds ? json(*bc.bw_holds) : json(nullptr)},
             {"steps", steps}};
    if (bc.failed_interval) {
        res["failed_interval"] = *bc.failed_interval;
    }
    const int code = bc.ok ? kOk : kNoPreimage;
    if (bc.ok) {
        std::vector<CsvRow> rows;
        path_rows(bc.path, rows);
        res["csv"] = w.write_csv(path_header(spec.n), rows).filename().string();
        res["state_at_target"] = json_vector(bc.path.front().y);
    }
    const auto js = w.write_json(envelope(bc.ok ? "ok" : "no-preimage", code, res));
    out << "backcontinue " << l.problem << ": " << bc.steps.size() << " interval(s)";
    if (bc.ok) {
        out << ", y(" << a.t_target << ") = " << show(bc.path.front().y);
        if (bc.non_unique) {
            out << " [non-unique branch chosen]";
        }
    } else {
        out << ", no preimage on interval " << *bc.failed_interval;
    }
    out << "\n  " << js.string() << '\n';
    return code;
}

// ---------------------------------------------------------------- manifold

struct ManifoldArgs {
    std::string side = "stable";
    double t0 = 0.0;
    std::string c;
    std::string grid_of_c;
    std::optional<double> tol;
    std::optional<double> alpha;
    std::optional<double> eps;
    std::optional<double> horizon;
    std::optional<int> max_iter;
    bool jacobian = false;
    int threads = 0;
};

int cmd_manifold(const Common& c, const ManifoldArgs& a, std::ostream& out) {
    const Loaded l = load(c, true);
    const SystemSpec& spec = *l.spec;
    if (a.side != "stable" && a.side != "unstable") {
        throw InvalidParameter("--side must be stable or unstable");
    }
    const Side side = a.side == "stable" ? Side::Stable : Side::Unstable;
    const auto red = reduce_spec(spec);
    ManifoldParams p;
    p.alpha = a.alpha;
    p.eps = a.eps;
    p.horizon = a.horizon;
    p.tol = a.tol.value_or(l.run.tol.value_or(p.tol));
    p.max_iter = a.max_iter.value_or(l.run.max_iter.value_or(p.max_iter));
    p.substeps = l.run.substeps.value_or(p.substeps);
    const ManifoldFn F(red, side, p);
    const int din = F.input_dim();
    const int dout = F.output_dim();
    ArtifactWriter w(out_dir(c, l), "manifold", l.problem, c.stamp);

    std::vector<Vector> cs;
    if (!a.grid_of_c.empty()) {
        if (!a.c.empty()) {
            throw InvalidParameter("give either --c or --grid-of-c");
        }
        const Vector g = parse_vector(a.grid_of_c, "--grid-of-c");
        if (g.size() != 3 || g(2) < 1 || g(2) != std::floor(g(2)) || g(2) > 100000) {
            throw InvalidParameter("--grid-of-c expects lo,hi,count with an integer count in [1, 100000]");
        }
        const int count = static_cast<int>(g(2));
        for (int j = 0; j < count; ++j) {
            const double x = count == 1 ? g(0) : g(0) + (g(1) - g(0)) * j / (count - 1);
            cs.push_back(Vector::Constant(din, x));
        }
    } else {
        cs.push_back(require_dim(parse_vector(a.c.empty() ? std::string("0") : a.c, "--c"), din, "--c"));
    }

    // Points are independent; results are collected in input order.
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(cs.size(), a.threads > 0 ? a.threads : std::min(hw, 8u));
    std::vector<std::shared_ptr<const ManifoldPoint>> pts(cs.size());
    std::vector<Matrix> jac(cs.size());
    {
        std::vector<std::future<void>> jobs;
        std::atomic<std::size_t> next{0};
        for (std::size_t wk = 0; wk < workers; ++wk) {
            jobs.push_back(std::async(std::launch::async, [&] {
                for (std::size_t j = next++; j < cs.size(); j = next++) {
                    pts[j] = F.point(a.t0, cs[j]);
                    if (a.jacobian) {
                        jac[j] = jacobian_F(F, a.t0, cs[j]);
                    }
                }
            }));
        }
        for (auto& j : jobs) {
            j.get();
        }
    }

    CsvRow header;
    for (int i = 1; i <= din; ++i) {
        header.push_back("c" + std::to_string(i));
    }
    for (int i = 1; i <= dout; ++i) {
        header.push_back("F" + std::to_string(i));
    }
    header.push_back("iterations");
    header.push_back("contraction_ratio");
    if (a.jacobian) {
        for (int r = 1; r <= dout; ++r) {
            for (int q = 1; q <= din; ++q) {
                header.push_back("dF" + std::to_string(r) + "_dc" + std::to_string(q));
            }
        }
    }
    std::vector<CsvRow> rows;
    json points = json::array();
    for (std::size_t j = 0; j < cs.size(); ++j) {
        const ManifoldPoint& pt = *pts[j];
        CsvRow r;
        for (int i = 0; i < din; ++i) {
            r.push_back(format_real(pt.c(i)));
        }
        for (int i = 0; i < dout; ++i) {
            r.push_back(format_real(pt.F(i)));
        }
        r.push_back(std::to_string(pt.iterations));
        r.push_back(format_real(pt.contraction_ratio));
        json jj = nullptr;
        if (a.jacobian) {
            jj = json::array();
            for (int rr = 0; rr < dout; ++rr) {
                json row = json::array();
                for (int q = 0; q < din; ++q) {
                    r.push_back(format_real(jac[j](rr, q)));
                    row.push_back(json_real(jac[j](rr, q)));
                }
                jj.push_back(row);
            }
        }
        rows.push_back(std::move(r));

        // Trajectory on the solution side of t0.
        const int lo = side == Side::Stable ? pt.anchor : 0;
        const int hi = side == Side::Stable ? static_cast<int>(pt.times.size()) - 1 : pt.anchor;
        std::vector<CsvRow> traj;
        for (int k = lo; k <= hi; ++k) {
            CsvRow tr{format_real(pt.times[static_cast<std::size_t>(k)])};
            for (Eigen::Index i = 0; i < pt.z.rows(); ++i) {
                tr.push_back(format_real(pt.z(i, k)));
            }
            traj.push_back(std::move(tr));
        }
        const auto tp = w.write_csv(state_header("z", red->n), traj, "point" + std::to_string(j));
        json ratios = json::array();
        for (double x : pt.ratios) {
            ratios.push_back(json_real(x));
        }
        points.push_back({{"c", json_vector(pt.c)},
                          {"F", json_vector(pt.F)},
                          {"iterations", pt.iterations},
                          {"contraction_ratio", json_real(pt.contraction_ratio)},
                          {"ratios", ratios},
                          {"decay_ratio_max", json_real(pt.decay_ratio_max)},
                          {"decay_holds", pt.decay_holds},
                          {"proven_regime", pt.proven_regime},
                          {"labels", pt.labels},
                          {"jacobian", jj},
                          {"trajectory", tp.filename().string()}});
    }
    const auto csv = w.write_csv(header, rows);
    const ManifoldPoint& first = *pts.front();
    json small = json::array();
    for (const auto& it : first.smallness.items) {
        small.push_back(inequality_json(it));
    }
    json res{{"side", a.side},
             {"t0", a.t0},
             {"k", red->k},
             {"K", red->K},
             {"sigma", red->sigma},
             {"L", red->L},
             {"alpha", first.alpha},
             {"eps", first.eps},
             {"tol", first.tol},
             {"theoretical_ratio", json_real(first.theoretical_ratio)},
             {"smallness", small},
             {"proven_regime", first.proven_regime},
             {"labels", first.labels},
             {"points", points},
             {"csv", csv.filename().string()}};
    const auto js = w.write_json(envelope("ok", kOk, res));
    out << "manifold " << l.problem << " (" << a.side << ", t0 = " << a.t0 << "): " << cs.size() << " point(s)\n";
    for (std::size_t j = 0; j < cs.size() && j < 20; ++j) {
        out << "  c = " << show(pts[j]->c) << "  F = " << show(pts[j]->F) << "  iterations " << pts[j]->iterations
            << '\n';
    }
    for (const auto& lab : first.labels) {
        out << "  note: " << lab << '\n';
    }
    out << "  " << csv.string() << "\n  " << js.string() << '\n';
    return kOk;
}

// ------------------------------------------------------- bounded, periodic

struct SteadyArgs {
    std::string window = "0,10";
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::optional<double> horizon;
    std::optional<double> h;
    std::optional<double> omega;
    std::optional<double> omega_bar;
    std::optional<int> p;
};

SteadyParams steady_params(const Common& c, const Loaded& l, const SteadyArgs& a) {
    SteadyParams sp;
    sp.tol = a.tol.value_or(l.run.tol.value_or(sp.tol));
    sp.max_iter = a.max_iter.value_or(l.run.max_iter.value_or(sp.max_iter));
    sp.substeps = l.run.substeps.value_or(sp.substeps);
    sp.horizon = a.horizon;
    sp.h = a.h;
    sp.seed = seed_of(c, l);
    return sp;
}

json bounded_json(const BoundedSolveResult& r) {
    return json{{"window", {r.window.lo, r.window.hi}},
                {"bound", json_real(r.bound)},
                {"sup_norm", json_real(r.sup_norm)},
                {"within_bound", r.within_bound},
                {"iterations", r.iterations},
                {"h", r.h},
                {"h_estimated", r.h_estimated},
                {"H", r.H},
                {"contraction_factor", r.contraction_factor},
                {"horizon", r.horizon},
                {"geometric_worst", r.geometric_worst ? json_real(*r.geometric_worst) : json(nullptr)},
                {"geometric_holds", r.geometric_holds},
                {"first_iterate_holds", r.first_iterate_holds},
                {"uniqueness_residual",
                 r.uniqueness_residual ? json_real(*r.uniqueness_residual) : json(nullptr)},
                {"labels", r.labels}};
}

std::vector<CsvRow> original_rows(const ReducedSystem& red, const std::vector<double>& t, const Matrix& z) {
    std::vector<CsvRow> rows;
    for (std::size_t j = 0; j < t.size(); ++j) {
        const Vector y = red.U * z.col(static_cast<Eigen::Index>(j));
        CsvRow r{format_real(t[j])};
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            r.push_back(format_real(y(i)));
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

int cmd_bounded(const Common& c, const SteadyArgs& a, std::ostream& out) {
    const Loaded l = load(c, true);
    const auto red = reduce_spec(*l.spec);
    const Vector wv = parse_vector(a.window, "--window");
    if (wv.size() != 2) {
        throw InvalidParameter("--window expects lo,hi");
    }
    const SteadyParams sp = steady_params(c, l, a);
    ArtifactWriter w(out_dir(c, l), "bounded", l.problem, c.stamp);
    const BoundedSolveResult r = bounded_solution(*red, Window{wv(0), wv(1)}, sp);
    const auto csv = w.write_csv(state_header("y", red->n), original_rows(*red, r.times, r.z));
    json res = bounded_json(r);
    res["csv"] = csv.filename().string();
    const auto js = w.write_json(envelope("ok", kOk, res));
    out << "bounded " << l.problem << ": sup |z| = " << r.sup_norm << " <= " << r.bound << " ("
        << (r.within_bound ? "holds" : "FAILS") << "), " << r.iterations << " iterations";
    if (r.uniqueness_residual) {
        out << ", uniqueness probe " << *r.uniqueness_residual;
    }
    out << "\n  " << csv.string() << "\n  " << js.string() << '\n';
    return kOk;
}

int cmd_periodic(const Common& c, const SteadyArgs& a, std::ostream& out) {
    const Loaded l = load(c, true);
    const SystemSpec& spec = *l.spec;
    const auto red = reduce_spec(spec);
    const auto gp = spec.grid.periodicity();
    const std::optional<double> omega = a.omega ? a.omega : spec.period;
    if (!omega) {
        throw InvalidParameter("no period: pass --omega or set [constants] period");
    }
    if (!a.omega_bar && !gp) {
        throw InvalidParameter("grid has no periodicity: pass --omega-bar and --p");
    }
    const double omega_bar = a.omega_bar ? *a.omega_bar : gp->omega_bar;
    const int p = a.p ? *a.p : (gp ? gp->p : 1);
    const PeriodicityParams pp = periodicity_params(*omega, omega_bar, p);
    const SteadyParams sp = steady_params(c, l, a);
    ArtifactWriter w(out_dir(c, l), "periodic", l.problem, c.stamp);
    const PeriodicSolveResult r = periodic_solution(*red, pp, sp);

    const auto csv = w.write_csv(state_header("y", red->n), original_rows(*red, r.times, r.z));
    json res{{"omega", pp.omega},
             {"omega_bar", pp.omega_bar},
             {"p", pp.p},
             {"k", pp.k},
             {"m", pp.m},
             {"period", pp.period},
             {"residual", json_real(r.residual)},
             {"certified", r.certified},
             {"worst_iterate_residual", json_real(r.worst_iterate_residual)},
             {"iterates_periodic", r.iterates_periodic},
             {"bw_holds", r.bw_holds ? json(*r.bw_holds) : json(nullptr)},
             {"bounded", bounded_json(r.bounded)},
             {"csv", csv.filename().string()}};
    const auto js = w.write_json(envelope("ok", kOk, res));
    out << "periodic " << l.problem << ": omega/omega_bar = " << pp.k << "/" << pp.m << ", period " << pp.period
        << ", shift residual " << r.residual << (r.certified ? " (certified)" : " (NOT certified)")
        << "\n  " << csv.string() << "\n  " << js.string() << '\n';
    return kOk;
}

// ------------------------------------------------------------------- check

struct CheckArgs {
    std::optional<double> l;
    std::optional<double> mu;
    std::optional<double> theta;
    std::optional<double> K;
    std::optional<double> sigma;
    std::optional<double> alpha;
    std::optional<double> eps;
    std::optional<double> L;
};

int cmd_check(const Common& c, const CheckArgs& a, std::ostream& out) {
    const Loaded ld = load(c, false);
    const SystemSpec* spec = ld.spec ? &*ld.spec : nullptr;
    const auto pick = [](const std::optional<double>& flag, std::optional<double> fallback, const char* name) {
        if (flag) {
            return *flag;
        }
        if (fallback) {
            return *fallback;
        }
        throw InvalidParameter(std::string("missing --") + name);
    };
    const double l = pick(a.l, spec && spec->lip ? std::optional(spec->lip->value) : std::nullopt, "l");
    const double mu = pick(a.mu, spec && spec->mu ? std::optional(spec->mu->value) : std::nullopt, "mu");
    const double theta = pick(a.theta, spec ? std::optional(spec->grid.gap_bound()) : std::nullopt, "theta");

    std::vector<InequalityResult> rows{check_backward_uniqueness(mu, l, theta)};
    // The smallness conditions need dichotomy data: flags, or the system's own.
    std::optional<double> K = a.K, sigma = a.sigma, L = a.L;
    if (spec && (!K || !sigma || !L)) {
        try {
            const auto red = reduce_spec(*spec);
            K = K ? K : red->K;
            sigma = sigma ? sigma : red->sigma;
            if (!L) {
                L = a.l ? 2.0 * red->U_norm * red->U_inv_norm * *a.l : red->L;
            }
        } catch (const NoDichotomy&) {
        }
    }
    if (K && sigma && !L) {
        L = 2.0 * l;
    }
    json small = nullptr;
    if (K && sigma) {
        const double alpha = a.alpha.value_or(*sigma / 2.0);
        const double eps = a.eps.value_or(*K);
        const SmallnessReport sm = check_smallness(*K, *sigma, alpha, theta, *L, eps);
        rows.insert(rows.end(), sm.items.begin(), sm.items.end());
        small = json{{"K", *K}, {"sigma", *sigma}, {"alpha", alpha}, {"eps", eps}, {"L", *L}};
    }
    const bool all = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.holds; });
    const int code = all ? kOk : kConditionFailure;
    ArtifactWriter w(out_dir(c, ld), "check", ld.problem, c.stamp);

    out << "check " << ld.problem << ": l = " << l << ", mu = " << mu << ", theta = " << theta;
    if (K && sigma) {
        out << ", K = " << *K << ", sigma = " << *sigma << ", L = " << *L;
    }
    out << '\n';
    print_table(out, rows);

    json items = json::array();
    for (const auto& r : rows) {
        items.push_back(inequality_json(r));
    }
    json res{{"l", l}, {"mu", mu}, {"theta", theta}, {"smallness_parameters", small}, {"inequalities", items},
             {"all_hold", all}};
    const auto js = w.write_json(envelope(all ? "ok" : "condition-failure", code, res));
    out << "  " << js.string() << '\n';
    return code;
}

// ------------------------------------------------------------------ reduce

int cmd_reduce(const Common& c, std::ostream& out) {
    const Loaded l = load(c, true);
    const auto red = reduce_spec(*l.spec);
    ArtifactWriter w(out_dir(c, l), "reduce", l.problem, c.stamp);
    const std::vector<double> gaps{0.25, 0.5, 1.0, 2.0, 4.0};
    const PropagatorBoundReport pb = check_propagator_bounds(*red, gaps, 0.0);

    out << "reduce " << l.problem << ": k = " << red->k << ", n-k = " << red->n - red->k << ", |U| = " << red->U_norm
        << ", |U^-1| = " << red->U_inv_norm << ", K = " << red->K << ", sigma = " << red->sigma << ", l = " << red->lip
        << ", L = " << red->L << '\n';
    out << std::setw(8) << "d" << std::setw(16) << "|U(d,0)|" << std::setw(16) << "|V(0,d)|" << std::setw(16)
        << "K e^{-sigma d}" << '\n';
    json rows = json::array();
    for (const auto& r : pb.rows) {
        out << std::setw(8) << r.t - r.s << std::setprecision(8) << std::setw(16) << r.norm_U << std::setw(16)
            << r.norm_V << std::setw(16) << r.bound_U << '\n';
        rows.push_back({{"d", r.t - r.s},
                        {"norm_U", json_real(r.norm_U)},
                        {"norm_V", json_real(r.norm_V)},
                        {"bound", json_real(r.bound_U)}});
    }
    if (!pb.within_bounds) {
        out << "  warning: propagator norms exceed K e^{-sigma d} by " << pb.max_excess << '\n';
    }
    json U = json::array();
    for (Eigen::Index i = 0; i < red->U.rows(); ++i) {
        U.push_back(json_vector(red->U.row(i).transpose()));
    }
    json res{{"n", red->n},           {"k", red->k},
             {"U", U},                {"U_norm", red->U_norm},
             {"U_inv_norm", red->U_inv_norm}, {"K", red->K},
             {"sigma", red->sigma},   {"l", red->lip},
             {"L", red->L},           {"propagator_bounds", rows},
             {"within_bounds", pb.within_bounds}, {"max_excess", json_real(pb.max_excess)}};
    const auto js = w.write_json(envelope("ok", kOk, res));
    out << "  " << js.string() << '\n';
    return kOk;
}

// ------------------------------------------------------------------ verify

int cmd_verify(const Common& c, const std::vector<int>& only, std::ostream& out) {
    for (int id : only) {
        if (id < 1 || id > kCriterionCount) {
            throw InvalidParameter("--only: criterion ids run from 1 to " + std::to_string(kCriterionCount));
        }
    }
    Loaded l;
    l.problem = "registry";
    AcceptanceOptions opt;
    if (c.seed) {
        opt.seed = *c.seed;
    }
    opt.only = only;
    ArtifactWriter w(out_dir(c, l), "verify", l.problem, c.stamp);
    const auto results = run_acceptance(opt, [&out](const CriterionResult& r) { out << format_result(r) << std::endl; });
    const bool all = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
    int passed = 0;
    json items = json::array();
    for (const auto& r : results) {
        passed += r.pass;
        items.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
    }
    const int code = all ? kOk : kConditionFailure;
    out << passed << "/" << results.size() << " criteria passed\n";
    const auto js = w.write_json(envelope(all ? "ok" : "condition-failure", code,
                                          json{{"criteria", items}, {"passed", passed}, {"total", results.size()}}));
    out << "  " << js.string() << '\n';
    return code;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("config", c.config_path, "System config file (INI, see docs/config.md)");
    sub->add_option("--problem", c.problem, "Registry problem instead of a config file");
    sub->add_option("--coupling", c.coupling, "Registry coupling parameter (diag-dichotomy, forced-scalar)");
    sub->add_option("--sigma0", c.sigma0, "Registry sigma0 (diag-dichotomy)")->check(CLI::PositiveNumber);
    sub->add_option("--out", c.out_dir, "Output directory (default: $EPCAG_LAB_OUT, [run] out, ./epcag-out)");
    sub->add_option("--seed", c.seed, "Seed for sampled checks");
    sub->add_option("--stamp", c.stamp, "Timestamp used in artifact names (default: current UTC time)");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulation, backward continuation, integral manifolds and steady states of differential "
                 "equations with piecewise constant argument of generalized type",
                 "epcag-lab"};
    app.require_subcommand(1);
    Common common;

    SimulateArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "Forward integration");
    add_common(s_sim, common);
    s_sim->add_option("--t0", sim.t0, "Start time");
    s_sim->add_option("--x0", sim.x0, "Initial state, comma separated")->required();
    s_sim->add_option("--t-end", sim.t_end, "End time")->required();
    s_sim->add_option("--w0", sim.w0, "Frozen value y(beta(t0)) when t0 is not a grid knot");
    s_sim->add_option("--substeps", sim.substeps, "RK4 steps per grid gap")->check(CLI::Range(2, 65536));

    BackArgs back;
    auto* s_back = app.add_subcommand("backcontinue", "Backward continuation");
    add_common(s_back, common);
    s_back->add_option("--t0", back.t0, "Time of the known state");
    s_back->add_option("--x0", back.x0, "Known state, comma separated")->required();
    s_back->add_option("--t-target", back.t_target, "Earlier time to continue to")->required();
    s_back->add_option("--lattice", back.lattice, "Newton starts per coordinate")->check(CLI::Range(1, 201));

    ManifoldArgs man;
    auto* s_man = app.add_subcommand("manifold", "Stable or unstable integral manifold");
    add_common(s_man, common);
    s_man->add_option("--side", man.side, "stable or unstable")->check(CLI::IsMember({"stable", "unstable"}));
    s_man->add_option("--t0", man.t0, "Base time");
    s_man->add_option("--c", man.c, "Point on the stable (unstable) subspace, comma separated");
    s_man->add_option("--grid-of-c", man.grid_of_c, "Sweep lo,hi,count (every component set to the same value)");
    s_man->add_option("--tol", man.tol, "Sup-norm stop threshold")->check(CLI::Range(1e-15, 1e-1));
    s_man->add_option("--alpha", man.alpha, "Decay rate in (0, sigma); default sigma/2");
    s_man->add_option("--eps", man.eps, "Bound slack; default K")->check(CLI::PositiveNumber);
    s_man->add_option("--horizon", man.horizon, "Truncation horizon (raised to the tail estimate when short)")
        ->check(CLI::PositiveNumber);
    s_man->add_option("--max-iter", man.max_iter, "Iteration limit")->check(CLI::Range(1, 100000));
    s_man->add_flag("--jacobian", man.jacobian, "Also compute dF/dc");
    s_man->add_option("--threads", man.threads, "Worker threads for sweeps (default: up to 8)")
        ->check(CLI::Range(0, 256));

    SteadyArgs bnd;
    auto* s_bnd = app.add_subcommand("bounded", "Solution bounded on the whole line");
    add_common(s_bnd, common);
    s_bnd->add_option("--window", bnd.window, "Output window lo,hi");
    s_bnd->add_option("--tol", bnd.tol, "Sup-norm stop threshold")->check(CLI::Range(1e-15, 1e-1));
    s_bnd->add_option("--max-iter", bnd.max_iter, "Iteration limit")->check(CLI::Range(1, 100000));
    s_bnd->add_option("--horizon", bnd.horizon, "Truncation horizon")->check(CLI::PositiveNumber);
    s_bnd->add_option("--h0", bnd.h, "Bound on |f(t,0,0)| (default: declared h0 or sampled)")
        ->check(CLI::NonNegativeNumber);

    SteadyArgs per;
    auto* s_per = app.add_subcommand("periodic", "Periodic solution");
    add_common(s_per, common);
    s_per->add_option("--omega", per.omega, "Period of A and f (default: [constants] period)")
        ->check(CLI::PositiveNumber);
    s_per->add_option("--omega-bar", per.omega_bar, "Grid period (default: from the grid)")
        ->check(CLI::PositiveNumber);
    s_per->add_option("--p", per.p, "Knots per grid period (default: from the grid)")->check(CLI::Range(1, 1000000));
    s_per->add_option("--tol", per.tol, "Sup-norm stop threshold")->check(CLI::Range(1e-15, 1e-1));
    s_per->add_option("--max-iter", per.max_iter, "Iteration limit")->check(CLI::Range(1, 100000));
    s_per->add_option("--horizon", per.horizon, "Truncation horizon")->check(CLI::PositiveNumber);

    CheckArgs chk;
    auto* s_chk = app.add_subcommand("check", "Evaluate the backward-uniqueness and smallness inequalities");
    add_common(s_chk, common);
    s_chk->add_option("--l", chk.l, "Lipschitz constant of f")->check(CLI::NonNegativeNumber);
    s_chk->add_option("--mu", chk.mu, "Bound on |A(t)|")->check(CLI::NonNegativeNumber);
    s_chk->add_option("--theta", chk.theta, "Grid gap bound")->check(CLI::PositiveNumber);
    s_chk->add_option("--K", chk.K, "Dichotomy constant")->check(CLI::Range(1.0, 1e300));
    s_chk->add_option("--sigma", chk.sigma, "Dichotomy rate")->check(CLI::PositiveNumber);
    s_chk->add_option("--alpha", chk.alpha, "Decay rate in (0, sigma); default sigma/2")->check(CLI::PositiveNumber);
    s_chk->add_option("--eps", chk.eps, "Bound slack; default K")->check(CLI::PositiveNumber);
    s_chk->add_option("--L", chk.L, "Lipschitz constant of the reduced nonlinearity; default 2 |U| |U^-1| l")
        ->check(CLI::NonNegativeNumber);

    auto* s_red = app.add_subcommand("reduce", "Block-diagonalizing change of variables");
    add_common(s_red, common);

    std::vector<int> only;
    auto* s_ver = app.add_subcommand("verify", "Run the acceptance suite");
    add_common(s_ver, common);
    s_ver->add_option("--only", only, "Criterion ids to run")->delimiter(',');

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }
    if (common.stamp.empty()) {
        common.stamp = utc_stamp();
    }

    if (s_sim->parsed()) return cmd_simulate(common, sim, out);
    if (s_back->parsed()) return cmd_backcontinue(common, back, out);
    if (s_man->parsed()) return cmd_manifold(common, man, out);
    if (s_bnd->parsed()) return cmd_bounded(common, bnd, out);
    if (s_per->parsed()) return cmd_periodic(common, per, out);
    if (s_chk->parsed()) return cmd_check(common, chk, out);
    if (s_red->parsed()) return cmd_reduce(common, out);
    return cmd_verify(common, only, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const ParseError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvalidParameter& e) {
        err << "invalid parameter: " << e.what() << '\n';
        return kConfigError;
    } catch (const OutOfWindow& e) {
        err << "out of window: " << e.what() << '\n';
        return kConfigError;
    } catch (const UnsupportedSystem& e) {
        err << "unsupported system: " << e.what() << '\n';
        return kConfigError;
    } catch (const IntegrationFailure& e) {
        err << "integration failure: " << e.what() << '\n';
        return kIntegrationFailure;
    } catch (const EvaluationError& e) {
        err << "evaluation failure: " << e.what() << '\n';
        return kIntegrationFailure;
    } catch (const ConvergenceFailure& e) {
        err << "no convergence: " << e.what() << " (after " << e.iterations() << " iterations, last ratio "
            << e.last_ratio() << ")\n";
        return kIntegrationFailure;
    } catch (const ConditionViolation& e) {
        err << "condition violated: " << e.what() << '\n';
        return kConditionFailure;
    } catch (const NoDichotomy& e) {
        err << "no exponential dichotomy: " << e.what() << '\n';
        return kConditionFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run(args, std::cout, std::cerr);
}

}  // namespace epcag::cli
