#include <doctest.h>

#include <cmath>
#include <random>

#include "tstop/errors.hpp"
#include "tstop/expr.hpp"

using namespace tstop;

TEST_CASE("parse and evaluate formulas") {
  CHECK(parse("(x-1)^3 + x^4")(2.0) == doctest::Approx(17.0).epsilon(1e-15));
  CHECK(parse("x")(3.5) == 3.5);
  CHECK(parse("((x-1)^2+1)*x^2")(2.0) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(parse("x - 9 + 15/4*x^2")(2.0) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(parse("-x^2")(3.0) == -9.0);
  CHECK(parse("2^3^2")(0.0) == 512.0);
  CHECK(parse("min(x, 2) + max(x, 2)")(5.0) == 7.0);
  CHECK(parse("exp(log(x)) + sqrt(abs(-x))")(4.0) == doctest::Approx(6.0));
  CHECK(parse("1.5e1 - .5")(0.0) == 14.5);
}

TEST_CASE("parse errors carry a position") {
  CHECK_THROWS_AS(parse("x +"), ParseError);
  CHECK_THROWS_AS(parse("y + 1"), ParseError);
  CHECK_THROWS_AS(parse("sin(x)"), ParseError);
  CHECK_THROWS_AS(parse("step(x)"), ParseError);
  CHECK_THROWS_AS(parse("(x"), ParseError);
  CHECK_THROWS_AS(parse("max(x)"), ParseError);
  try {
    parse("x + * 2");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("printing round-trips evaluation") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (const char* text : {"(x-1)^3 + x^4", "-x^2 + exp(-x/3)", "min(x, 2) * max(1, log(x))",
                           "sqrt(x) / (1 + abs(x - 2))", "x - 9 + 15/4*x^2", "-(-3) - x"}) {
    const Expression e = parse(text);
    const Expression back = parse(e.to_string());
    for (int i = 0; i < 20; ++i) {
      const double x = u(rng);
      CHECK(back(x) == e(x));
    }
  }
}

TEST_CASE("derivative examples") {
  CHECK(differentiate(parse("(x-1)^3 + x^4"))(1.0) == doctest::Approx(4.0));
  CHECK(differentiate(parse("3.25")).is_constant(0.0));
  CHECK(differentiate(parse("x - 9 + 15/4*x^2"))(2.0) == doctest::Approx(16.0));
  CHECK(differentiate(parse("((x-1)^2+1)*x^2"))(2.0) == doctest::Approx(16.0));
}

TEST_CASE("derivatives agree with central differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 4.0);
  for (const char* text : {"(x-1)^3 + x^4", "exp(-x) * x^2.5", "log(1 + x^2) / sqrt(x)",
                           "x^x", "((x-1)^2+1)*x^2", "1/(x+1) - 3*x", "abs(x - 10) + min(x, 9)"}) {
    const Expression e = parse(text);
    const Expression de = differentiate(e);
    const Expression d2e = differentiate(de);
    for (int i = 0; i < 100; ++i) {
      const double x = u(rng), h = 1e-5;
      const double fd = (e(x + h) - e(x - h)) / (2 * h);
      CHECK(std::fabs(de(x) - fd) <= 1e-6 * (1 + std::fabs(de(x))));
      const double fd2 = (de(x + h) - de(x - h)) / (2 * h);
      CHECK(std::fabs(d2e(x) - fd2) <= 1e-5 * (1 + std::fabs(d2e(x))));
    }
  }
}

TEST_CASE("kinks take the right derivative") {
  CHECK(differentiate(parse("abs(x - 1)"))(1.0) == 1.0);
  CHECK(differentiate(parse("max(x - 1, 0)"))(1.0) == 1.0);
  CHECK(differentiate(parse("min(x - 1, 0)"))(1.0) == 0.0);
  CHECK(differentiate(parse("max(x - 1, 0)"))(0.5) == 0.0);
}

TEST_CASE("polynomial derivatives drop one degree") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> deg(1, 7);
  std::uniform_real_distribution<double> coef(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = deg(rng);
    Expression p = Expression::constant(coef(rng));
    for (int k = 1; k <= n; ++k) {
      double c = coef(rng);
      if (k == n && c == 0.0) c = 1.0;
      p = p + Expression::constant(c) * pow(Expression::variable(), Expression::constant(k));
    }
    REQUIRE(polynomial_degree(p) == n);
    CHECK(polynomial_degree(differentiate(p)) == n - 1);
  }
  CHECK(polynomial_degree(parse("exp(x)")) == std::nullopt);
  CHECK(polynomial_degree(parse("0")) == -1);
}

TEST_CASE("compiled expressions evaluate bit-identically") {
  const Expression e = parse("x*(1.1 + 0.3*x) - exp(-x)/sqrt(x) + max(x, 2)^2");
  const CompiledExpression c(e);
  for (double x = 0.1; x < 10; x += 0.37) CHECK(c(x) == e(x));
  CHECK(e(1.7) == e(1.7));
}
