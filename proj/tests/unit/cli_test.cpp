#include "doctest.h"

#include "epcag/cli.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using epcag::cli::run;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run lab(std::vector<std::string> args) {
    std::ostringstream o, e;
    const int code = run(args, o, e);
    return {code, o.str(), e.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("epcag-cli-test-" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json load_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("cli: usage errors exit 1") {
    CHECK(lab({}).code == 1);
    CHECK(lab({"frobnicate"}).code == 1);
    CHECK(lab({"simulate", "--problem", "paper-example-1"}).code == 1);
    CHECK(lab({"simulate", "--problem", "nope", "--x0", "1", "--t-end", "1"}).code == 1);
    CHECK(lab({"manifold", "--problem", "diag-dichotomy", "--c", "1,2"}).code == 1);
    CHECK(lab({"simulate", "/nonexistent.ini", "--x0", "1", "--t-end", "1"}).code == 1);
    CHECK(lab({"--help"}).code == 0);
}

TEST_CASE("cli: config errors report line and column") {
    const fs::path d = fresh_dir("badcfg");
    fs::create_directories(d);
    const fs::path cfg = d / "bad.ini";
    std::ofstream(cfg) << "[system]\nn = 2\nA = 1, 0\nf = 0, 0\n[grid]\nkind = uniform\nstep = 1\n";
    const auto r = lab({"reduce", cfg.string(), "--out", d.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("bad.ini:3:") != std::string::npos);
    std::ofstream(cfg) << "[system]\nproblem = diag-dichotomy\n[extra]\nx = 1\n";
    CHECK(lab({"reduce", cfg.string(), "--out", d.string()}).code == 1);
}

TEST_CASE("cli: simulate writes CSV and JSON") {
    const fs::path d = fresh_dir("simulate");
    const auto r = lab({"simulate", "--problem", "paper-example-1", "--x0", "0.1", "--t-end", "2", "--out", d.string(),
                        "--stamp", "T"});
    REQUIRE(r.code == 0);
    const auto csv = slurp(d / "simulate-paper-example-1-t.csv");
    CHECK(csv.rfind("t,y1,interval_index,frozen_w1\n", 0) == 0);
    const auto js = load_json(d / "simulate-paper-example-1-t.json");
    CHECK(js["schema"] == "epcag-lab/1");
    CHECK(js["command"] == "simulate");
    CHECK(js["status"] == "ok");
    CHECK(js["results"]["intervals"].size() == 2);
}

TEST_CASE("cli: backcontinue exit codes") {
    const fs::path d = fresh_dir("back");
    auto r = lab({"backcontinue", "--problem", "paper-example-1", "--t0", "1", "--x0", "1", "--t-target", "0", "--out",
                  d.string(), "--stamp", "a"});
    CHECK(r.code == 0);
    CHECK(load_json(d / "backcontinue-paper-example-1-a.json")["results"]["non_unique"] == true);
    r = lab({"backcontinue", "--problem", "paper-example-1", "--t0", "1", "--x0", "100", "--t-target", "0", "--out",
             d.string(), "--stamp", "b"});
    CHECK(r.code == 2);
    CHECK(load_json(d / "backcontinue-paper-example-1-b.json")["status"] == "no-preimage");
}

TEST_CASE("cli: check exit codes follow the verdicts") {
    const fs::path d = fresh_dir("check");
    CHECK(lab({"check", "--l", "0.2", "--mu", "1", "--theta", "1", "--out", d.string()}).code == 4);
    const auto ok = lab({"check", "--l", "0.01", "--mu", "1", "--theta", "1", "--K", "1", "--sigma", "1", "--out",
                         d.string()});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("cone") != std::string::npos);
    CHECK(lab({"check", "--mu", "1", "--theta", "1", "--out", d.string()}).code == 1);
}

TEST_CASE("cli: condition failures exit 4") {
    const fs::path d = fresh_dir("cond");
    CHECK(lab({"bounded", "--problem", "forced-scalar", "--coupling", "0.6", "--out", d.string()}).code == 4);
    CHECK(lab({"manifold", "--problem", "forced-scalar", "--c", "1", "--out", d.string()}).code == 4);
}

TEST_CASE("cli: bounded and periodic report required fields") {
    const fs::path d = fresh_dir("steady");
    REQUIRE(lab({"bounded", "--problem", "forced-scalar", "--out", d.string(), "--stamp", "s"}).code == 0);
    const auto b = load_json(d / "bounded-forced-scalar-s.json")["results"];
    CHECK(b.contains("bound"));
    CHECK(b.contains("sup_norm"));
    CHECK(b.contains("iterations"));
    REQUIRE(lab({"periodic", "--problem", "periodic-coupled", "--out", d.string(), "--stamp", "s"}).code == 0);
    const auto p = load_json(d / "periodic-periodic-coupled-s.json")["results"];
    CHECK(p["k"] == 2);
    CHECK(p["m"] == 1);
    CHECK(p["residual"].get<double>() <= 1e-9);
}

TEST_CASE("cli: manifold sweeps are identical across thread counts") {
    const fs::path d = fresh_dir("determinism");
    std::vector<std::string> base{"manifold", "--problem", "diag-dichotomy", "--grid-of-c", "-1,1,9", "--jacobian",
                                  "--out", d.string()};
    auto one = base, many = base;
    one.insert(one.end(), {"--threads", "1", "--stamp", "one"});
    many.insert(many.end(), {"--threads", "4", "--stamp", "many"});
    REQUIRE(lab(one).code == 0);
    REQUIRE(lab(many).code == 0);
    CHECK(slurp(d / "manifold-diag-dichotomy-one.csv") == slurp(d / "manifold-diag-dichotomy-many.csv"));
    CHECK(slurp(d / "manifold-diag-dichotomy-one-point4.csv") ==
          slurp(d / "manifold-diag-dichotomy-many-point4.csv"));
    const auto js = load_json(d / "manifold-diag-dichotomy-one.json");
    CHECK(js["results"]["points"].size() == 9);
}

TEST_CASE("cli: output directory precedence") {
    const fs::path d = fresh_dir("outdir");
    fs::create_directories(d);
    const fs::path cfg = d / "run.ini";
    std::ofstream(cfg) << "[system]\nproblem = diag-dichotomy\n[run]\nout = " << (d / "from-config").string() << "\n";
    REQUIRE(lab({"reduce", cfg.string(), "--stamp", "x"}).code == 0);
    CHECK(fs::exists(d / "from-config" / "reduce-diag-dichotomy-x.json"));
    REQUIRE(lab({"reduce", cfg.string(), "--stamp", "x", "--out", (d / "flag").string()}).code == 0);
    CHECK(fs::exists(d / "flag" / "reduce-diag-dichotomy-x.json"));
}

TEST_CASE("cli: verify runs a subset") {
    const fs::path d = fresh_dir("verify");
    const auto r = lab({"verify", "--only", "1,5", "--out", d.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("[PASS]  1") != std::string::npos);
    CHECK(r.out.find("[PASS]  5") != std::string::npos);
    CHECK(lab({"verify", "--only", "14", "--out", d.string()}).code == 1);
}
