#include "doctest.h"

#include "epcag/error.hpp"
#include "epcag/expression.hpp"
#include "epcag/ini_config.hpp"
#include "epcag/system_model.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

using namespace epcag;

namespace {

// Reference evaluator: random trees rendered to text and evaluated directly.
struct Tree {
    std::string text;
    std::function<double(double, const double*, const double*)> eval;
};

Tree random_tree(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 9 : 3);
    std::uniform_real_distribution<double> num(0.1, 3.0);
    switch (pick(rng)) {
    case 0: {
        const double v = std::round(num(rng) * 100) / 100;
        std::ostringstream s;
        s << v;
        return {s.str(), [v](double, const double*, const double*) { return v; }};
    }
    case 1:
        return {"t", [](double t, const double*, const double*) { return t; }};
    case 2: {
        const int i = static_cast<int>(rng() % 2);
        return {"y" + std::to_string(i + 1), [i](double, const double* y, const double*) { return y[i]; }};
    }
    case 3: {
        const int i = static_cast<int>(rng() % 2);
        return {"w" + std::to_string(i + 1), [i](double, const double*, const double* w) { return w[i]; }};
    }
    case 4: {
        auto a = random_tree(rng, depth - 1), b = random_tree(rng, depth - 1);
        return {"(" + a.text + " + " + b.text + ")",
                [a, b](double t, const double* y, const double* w) { return a.eval(t, y, w) + b.eval(t, y, w); }};
    }
    case 5: {
        auto a = random_tree(rng, depth - 1), b = random_tree(rng, depth - 1);
        return {"(" + a.text + " - " + b.text + ")",
                [a, b](double t, const double* y, const double* w) { return a.eval(t, y, w) - b.eval(t, y, w); }};
    }
    case 6: {
        auto a = random_tree(rng, depth - 1), b = random_tree(rng, depth - 1);
        return {a.text + "*" + b.text,
                [a, b](double t, const double* y, const double* w) { return a.eval(t, y, w) * b.eval(t, y, w); }};
    }
    case 7: {
        auto a = random_tree(rng, depth - 1);
        return {"sin(" + a.text + ")",
                [a](double t, const double* y, const double* w) { return std::sin(a.eval(t, y, w)); }};
    }
    case 8: {
        auto a = random_tree(rng, depth - 1);
        return {"-cos(" + a.text + ")",
                [a](double t, const double* y, const double* w) { return -std::cos(a.eval(t, y, w)); }};
    }
    default: {
        auto a = random_tree(rng, depth - 1);
        return {"exp(abs(" + a.text + ")/10)", [a](double t, const double* y, const double* w) {
                    return std::exp(std::abs(a.eval(t, y, w)) / 10);
                }};
    }
    }
}

double ev(const std::string& text, double t = 0.0, std::vector<double> y = {0, 0}, std::vector<double> w = {0, 0}) {
    return Expression::parse(text, 2).evaluate(t, y, w);
}

}  // namespace

TEST_CASE("expression: precedence and associativity") {
    CHECK(ev("1 + 2*3") == 7.0);
    CHECK(ev("2^3^2") == 512.0);
    CHECK(ev("-2^2") == -4.0);
    CHECK(ev("(1 + 2)*3") == 9.0);
    CHECK(ev("8/4/2") == 1.0);
    CHECK(ev("pi") == doctest::Approx(std::numbers::pi));
    CHECK(ev("2*t + y1 - w2", 1.5, {3, 0}, {0, 4}) == doctest::Approx(2.0));
    CHECK(ev("log(exp(1.5))") == doctest::Approx(1.5));
    CHECK(ev("1e-3*2") == doctest::Approx(2e-3));
}

TEST_CASE("expression: errors carry positions") {
    CHECK_THROWS_AS(Expression::parse("1 +", 2), ParseError);
    CHECK_THROWS_AS(Expression::parse("y3", 2), ParseError);
    CHECK_THROWS_AS(Expression::parse("tan(1)", 2), ParseError);
    CHECK_THROWS_AS(Expression::parse("(1", 2), ParseError);
    try {
        Expression::parse("1 + @", 2, SourceLocation{4, 10});
        FAIL("no throw");
    } catch (const ParseError& e) {
        CHECK(e.where().line == 4);
        CHECK(e.where().column == 14);
    }
}

TEST_CASE("expression: flags") {
    const auto e = Expression::parse("sin(t) + w1", 2);
    CHECK(e.uses_time());
    CHECK(e.uses_frozen_state());
    CHECK_FALSE(e.uses_current_state());
}

TEST_CASE("property: parser agrees with a direct tree evaluator") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 400; ++i) {
        const Tree tr = random_tree(rng, 4);
        const auto e = Expression::parse(tr.text, 2);
        for (int j = 0; j < 5; ++j) {
            const double t = u(rng);
            const double y[2] = {u(rng), u(rng)};
            const double w[2] = {u(rng), u(rng)};
            const double want = tr.eval(t, y, w);
            const double got = e.evaluate(t, y, w);
            INFO(tr.text);
            REQUIRE(got == doctest::Approx(want).epsilon(1e-13));
        }
    }
}

TEST_CASE("ini: sections, comments, errors") {
    const auto doc = IniDocument::parse("# c\n[a]\nx = 1\n\n[b]\ny=2 # trailing\n");
    REQUIRE(doc.section("a"));
    CHECK(doc.section("a")->find("x")->value == "1");
    CHECK(doc.section("b")->find("y")->value == "2");
    CHECK_THROWS_AS(IniDocument::parse("x = 1\n"), ParseError);
    CHECK_THROWS_AS(IniDocument::parse("[a]\nx=1\nx=2\n"), ParseError);
    CHECK_THROWS_AS(IniDocument::parse("[a]\n[a]\n"), ParseError);
    CHECK_THROWS_AS(IniDocument::parse("[a]\njunk\n"), ParseError);
}

TEST_CASE("config: explicit system") {
    const auto s = parse_system(R"(
[system]
name = toy
n = 2
A = -1, 0; 0, 2
f = 0.1*sin(w1), 0.2*y1

[grid]
kind = uniform
step = 0.5

[constants]
mu = 2
lip = 0.2
)");
    CHECK(s.name == "toy");
    CHECK(s.n == 2);
    REQUIRE(s.constant_A);
    CHECK((*s.constant_A)(1, 1) == 2.0);
    CHECK(s.grid.gap_bound() == 0.5);
    Vector y(2), w(2);
    y << 1.0, 0.0;
    w << 0.5, 0.0;
    const Vector f = eval_f(s, 0.1, y, w);
    CHECK(f(0) == doctest::Approx(0.1 * std::sin(0.5)));
    CHECK(f(1) == doctest::Approx(0.2));
    const Vector r = eval_rhs(s, 0.1, y, w);
    CHECK(r(0) == doctest::Approx(-1.0 + 0.1 * std::sin(0.5)));
}

TEST_CASE("config: rhs form subtracts the linear part") {
    const auto s = parse_system("[system]\nn = 1\nA = 2\nrhs = 2*y1 - w1^2\n[grid]\nkind = uniform\nstep = 1\n");
    Vector y(1), w(1);
    y << 0.7;
    w << 0.3;
    CHECK(eval_f(s, 0.2, y, w)(0) == doctest::Approx(-0.09));
}

TEST_CASE("config: dimension mismatch and unknown keys are located") {
    const char* bad = "[system]\nn = 2\nA = 1, 0\nf = 0, 0\n[grid]\nkind = uniform\nstep = 1\n";
    try {
        parse_system(bad);
        FAIL("no throw");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("dimension mismatch") != std::string::npos);
        CHECK(e.where().line == 3);
    }
    CHECK_THROWS_AS(parse_system("[system]\nn = 1\nA = 1\nf = 0\nzz = 1\n[grid]\nkind = uniform\nstep = 1\n"),
                    ParseError);
    CHECK_THROWS_AS(parse_system("[system]\nn = 1\nA = y1\nf = 0\n[grid]\nkind = uniform\nstep = 1\n"), ParseError);
    CHECK_THROWS_AS(parse_system("[system]\nn = 1\nA = 1\nf = 0\n"), ParseError);
    CHECK_THROWS_AS(parse_system("[system]\nn = 1\nA = 1\nf = 0\nrhs = 0\n[grid]\nkind = uniform\nstep = 1\n"),
                    ParseError);
}

TEST_CASE("config: registry problem with overrides") {
    const auto s = parse_system("[system]\nproblem = diag-dichotomy\ncoupling = 0.05\nsigma0 = 2\n");
    CHECK(s.name == "diag-dichotomy");
    REQUIRE(s.lip);
    CHECK(s.lip->value == 0.05);
    CHECK((*s.constant_A)(1, 1) == 2.0);
    CHECK_THROWS_AS(parse_system("[system]\nproblem = nope\n"), ParseError);
}

TEST_CASE("registry problems") {
    for (const auto& name : problem_names()) {
        const auto s = get_problem(name);
        CHECK(s.n >= 1);
        CHECK(s.mu);
    }
    CHECK_THROWS_AS(get_problem("missing"), InvalidParameter);
    const auto p = get_problem("paper-example-1");
    Vector y(1), w(1);
    y << 0.0;
    w << 0.5;
    CHECK(eval_rhs(p, 0.3, y, w)(0) == doctest::Approx(-0.25));
}

TEST_CASE("eval_f outside the grid window throws") {
    const auto s = parse_system(
        "[system]\nn = 1\nA = 1\nf = 0\n[grid]\nkind = uniform\nstep = 1\nwindow = 0, 5\n");
    Vector y = Vector::Zero(1);
    CHECK_THROWS_AS(eval_f(s, 6.0, y, y), OutOfWindow);
}

TEST_CASE("lipschitz estimate is a lower bound near the true constant") {
    const auto s = get_problem("diag-dichotomy", RegistryOptions{.coupling = 0.3});
    const auto est = estimate_lipschitz(s, DomainBox::symmetric(2, -1, 1, 0, 10), 4000, 3);
    CHECK(est.value <= 0.3 + 1e-12);
    CHECK(est.value >= 0.25);
}
