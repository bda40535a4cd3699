#include <doctest.h>

#include <cmath>

#include "magflow/expr.hpp"

using namespace magflow;

TEST_SUITE("expr") {

TEST_CASE("parsing and evaluation") {
    CHECK(Expr::parse("1+2*3").eval(0, 0) == doctest::Approx(7.0));
    CHECK(Expr::parse("(1+2)*3").eval(0, 0) == doctest::Approx(9.0));
    CHECK(Expr::parse("2*3+4*5").eval(0, 0) == doctest::Approx(26.0));
    CHECK(Expr::parse("u+2*v").eval(1.0, 2.0) == doctest::Approx(5.0));
    CHECK(Expr::parse("-u*v").eval(3.0, 2.0) == doctest::Approx(-6.0));
    CHECK(Expr::parse("sin(pi/2)").eval(0, 0) == doctest::Approx(1.0));
    CHECK(Expr::parse("cos(0)").eval(0, 0) == doctest::Approx(1.0));
    CHECK(Expr::parse("exp(1)").eval(0, 0) == doctest::Approx(std::exp(1.0)));
    CHECK(Expr::parse("1/4").eval(0, 0) == doctest::Approx(0.25));
    CHECK(Expr::parse("0.1*sin(2*pi*u)*cos(2*pi*v)").eval(0.25, 0.0) == doctest::Approx(0.1));
}

TEST_CASE("malformed input throws with a message") {
    CHECK_THROWS_AS(Expr::parse("u +"), ExprError);
    CHECK_THROWS_AS(Expr::parse("foo(u)"), ExprError);
    CHECK_THROWS_AS(Expr::parse("((u)"), ExprError);
    CHECK_THROWS_AS(Expr::parse(""), ExprError);
    CHECK_THROWS_AS(Expr::parse("1 2"), ExprError);
}

TEST_CASE("symbolic derivatives") {
    Expr f = Expr::parse("sin(2*pi*u)");
    Expr fu = f.derivative_u();
    for (double u : {0.0, 0.13, 0.4, 0.77}) {
        CHECK(fu.eval(u, 0.0) ==
              doctest::Approx(2.0 * M_PI * std::cos(2.0 * M_PI * u)).epsilon(1e-12));
    }
    CHECK(f.derivative_v().eval(0.3, 0.9) == doctest::Approx(0.0));

    Expr g = Expr::parse("u*v + exp(u*v)");
    // dg/du = v + v*exp(u*v)
    CHECK(g.derivative_u().eval(0.5, 0.25) ==
          doctest::Approx(0.25 + 0.25 * std::exp(0.125)).epsilon(1e-12));
    Expr h = Expr::parse("u/v");
    CHECK(h.derivative_v().eval(2.0, 4.0) == doctest::Approx(-2.0 / 16.0).epsilon(1e-12));
}

TEST_CASE("constant folding") {
    double c = 0.0;
    CHECK(Expr::parse("2*3+1").is_constant(&c));
    CHECK(c == doctest::Approx(7.0));
    CHECK(Expr::parse("sin(0)").is_constant(&c));
    CHECK(c == doctest::Approx(0.0));
    CHECK_FALSE(Expr::parse("u").is_constant());
    // derivative of a constant folds back to a constant
    CHECK(Expr::parse("exp(2)").derivative_u().is_constant(&c));
    CHECK(c == doctest::Approx(0.0));
}

TEST_CASE("compiled tape matches tree evaluation") {
    Expr f = Expr::parse("0.1*sin(2*pi*u)*cos(2*pi*v) + exp(-u*v)/(1+v)");
    ExprTape tape = f.compile();
    for (double u = 0.0; u <= 1.0; u += 0.17) {
        for (double v = 0.0; v <= 1.0; v += 0.23) {
            CHECK(tape.eval(u, v) == doctest::Approx(f.eval(u, v)).epsilon(1e-15));
        }
    }
}

} // TEST_SUITE
