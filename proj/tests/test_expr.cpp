#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

using namespace claw;
using testutil::corpus_path;
using testutil::fd_partial;
using testutil::random_points;

TEST_CASE("smallest well-formed input") {
    SourceSpec spec = parse_source("system s vars u1; flux u1: u1*u1/2;");
    CHECK(spec.n() == 1);
    CHECK(spec.is_primal());
    CHECK(spec.laws.empty());
    std::vector<double> u = {3.0};
    CHECK(spec.fluxes[0].evaluate(u) == doctest::Approx(4.5));
}

TEST_CASE("bundled intro file parses to n=3 with two additional laws") {
    SourceSpec spec = parse_file(corpus_path("example_intro.claw"));
    CHECK(spec.n() == 3);
    CHECK(spec.laws.size() == 2);
    CHECK(spec.hamiltonian.has_value());
    CHECK(spec.domain.has_value());
    CHECK(spec.domain->first == doctest::Approx(0.6));
}

TEST_CASE("unknown variable is reported by name with position") {
    try {
        parse_source("system s vars u1; flux u1: u2;");
        FAIL("expected parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.message).find("u2") != std::string::npos);
        CHECK(e.line == 1);
        CHECK(e.column > 0);
    }
}

TEST_CASE("parser rejections") {
    CHECK_THROWS_AS(parse_source("system s vars u1, u1; flux u1: u1;"), ParseError);
    CHECK_THROWS_AS(parse_source("system s vars u1; flux u1: u1; law a: u1|u1; law a: u1|u1;"),
                    ParseError);
    CHECK_THROWS_AS(parse_source("system s vars u1; flux u1: u1^-2;"), ParseError);
    CHECK_THROWS_AS(parse_source("system s vars u1, u2; flux u1: u1; flux u2: u2; "
                                 "hamiltonian: u1 eta [1, 2; 3, 1];"),
                    ParseError); // not symmetric
    CHECK_THROWS_AS(parse_source("system s vars u1, u2; flux u1: u1; flux u2: u2; "
                                 "hamiltonian: u1 eta [1, 1; 1, 1];"),
                    ParseError); // singular
    CHECK_THROWS_AS(parse_source("system s vars u1, u2; flux u1: u1;"), ParseError);
}

TEST_CASE("evaluation of closed forms") {
    std::vector<std::string> vars = {"u1", "u2", "u3"};
    std::vector<double> u = {1.0, 2.0, 3.0};

    Expr b = parse_expression("-(u1*u2 + u2*u3 + u3*u1)/2", vars);
    CHECK(b.evaluate(u) == doctest::Approx(-5.5).epsilon(1e-14));

    Expr seven = parse_expression("7", vars);
    CHECK(seven.evaluate(u) == 7.0);

    // b^2 - a c with a = 6, c = 6 at (1,2,3): 121/4 - 36 = -23/4
    Expr f = parse_expression("((u1*u2 + u2*u3 + u3*u1)/2)^2 - (u1 + u2 + u3)*u1*u2*u3", vars);
    CHECK(f.evaluate(u) == doctest::Approx(-23.0 / 4.0).epsilon(1e-14));
}

TEST_CASE("division by zero names the offending subexpression") {
    std::vector<std::string> vars = {"u1", "u2"};
    Expr e = parse_expression("u1/(u1 - u2)", vars);
    std::vector<double> u = {1.0, 1.0};
    try {
        e.evaluate(u);
        FAIL("expected singularity");
    } catch (const EvalSingular& ex) {
        CHECK(ex.subexpression == "u1 - u2");
    }
}

TEST_CASE("differentiation basics") {
    std::vector<std::string> vars = {"u1", "u2", "u3"};
    Expr prod = parse_expression("u1*u2*u3", vars);
    CHECK(Expr::structurally_equal(prod.differentiate(0), parse_expression("u2*u3", vars)));

    Expr sigma1_flux = parse_expression("(u2*u3 - u1*(u2 + u3))/2", vars);
    std::vector<double> u = {1.0, 2.0, 3.0};
    CHECK(sigma1_flux.differentiate(1).evaluate(u) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(fd_partial(sigma1_flux, u, 1) == doctest::Approx(1.0).epsilon(1e-8));

    Expr c = parse_expression("5/3", vars);
    CHECK(c.differentiate(0).is_constant());
    CHECK(c.differentiate(0).constant_value().is_zero());
}

TEST_CASE("power binds tighter than unary minus") {
    std::vector<std::string> vars = {"u1"};
    Expr e = parse_expression("-u1^2", vars);
    std::vector<double> u = {2.0};
    CHECK(e.evaluate(u) == -4.0);
}

static std::vector<Expr> corpus_expressions() {
    std::vector<Expr> exprs;
    for (const char* file :
         {"example_intro.claw", "burgers.claw", "linear_diag.claw", "cubic_diag.claw"}) {
        SourceSpec spec = parse_file(corpus_path(file));
        for (const auto& e : spec.fluxes) exprs.push_back(e);
        for (const auto& l : spec.laws) {
            exprs.push_back(l.density);
            exprs.push_back(l.flux);
        }
        if (spec.hamiltonian) exprs.push_back(spec.hamiltonian->h);
    }
    return exprs;
}

TEST_CASE("symbolic derivatives match finite differences on the corpus") {
    unsigned seed = 11;
    for (const auto& e : corpus_expressions()) {
        int n = std::max(1, e.max_variable_count());
        for (const auto& p : random_points(n, 100, seed++)) {
            for (int k = 0; k < n; ++k) {
                double sym = e.differentiate(k).evaluate(p);
                double fd = fd_partial(e, p, k);
                CHECK(std::abs(sym - fd) <= 1e-6 * (1.0 + std::abs(sym)));
            }
        }
    }
}

TEST_CASE("mixed partial derivatives commute") {
    unsigned seed = 101;
    for (const auto& e : corpus_expressions()) {
        int n = std::max(1, e.max_variable_count());
        if (n < 2) continue;
        for (const auto& p : random_points(n, 10, seed++)) {
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    double ij = e.differentiate(i).differentiate(j).evaluate(p);
                    double ji = e.differentiate(j).differentiate(i).evaluate(p);
                    CHECK(std::abs(ij - ji) <= 1e-12 * (1.0 + std::abs(ij)));
                }
        }
    }
}

TEST_CASE("print-parse idempotence on the corpus") {
    for (const char* file :
         {"example_intro.claw", "burgers.claw", "linear_diag.claw", "cubic_diag.claw"}) {
        SourceSpec one = parse_file(corpus_path(file));
        std::string printed = format_source(one);
        SourceSpec two = parse_source(printed);
        REQUIRE(one.fluxes.size() == two.fluxes.size());
        for (std::size_t i = 0; i < one.fluxes.size(); ++i)
            CHECK(Expr::structurally_equal(one.fluxes[i], two.fluxes[i]));
        REQUIRE(one.laws.size() == two.laws.size());
        for (std::size_t i = 0; i < one.laws.size(); ++i) {
            CHECK(Expr::structurally_equal(one.laws[i].density, two.laws[i].density));
            CHECK(Expr::structurally_equal(one.laws[i].flux, two.laws[i].flux));
        }
        CHECK(format_source(two) == printed);
    }
}

TEST_CASE("rational constants survive printing") {
    std::vector<std::string> vars = {"u1"};
    Expr e = parse_expression("u1*(-3/2) + 0.25*u1^2", vars);
    Expr back = parse_expression(e.str(), vars);
    CHECK(Expr::structurally_equal(e, back));
    std::vector<double> u = {2.0};
    CHECK(e.evaluate(u) == doctest::Approx(-2.0));
}

TEST_CASE("expressions evaluate identically when shared in a batch") {
    std::vector<std::string> vars = {"u1", "u2"};
    Expr shared = parse_expression("u1*u2 + u2^2", vars);
    Expr a = shared * shared;
    Expr b = shared + Expr::constant(1);
    std::vector<double> u = {1.5, 0.5};
    ExprEvaluator ev(u);
    double s = shared.evaluate(u);
    CHECK(ev.value(a) == doctest::Approx(s * s));
    CHECK(ev.value(b) == doctest::Approx(s + 1.0));
}
