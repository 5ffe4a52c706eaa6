#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "tstop/errors.hpp"

using namespace tstop;

TEST_CASE("generator on simple functions") {
  const auto d = DiffusionSpec::gbm(0.5, 1.0);
  for (double delta : {2.0, 3.0, 4.0})
    for (double x : {0.3, 1.0, 2.5}) {
      const Jet f{std::pow(x, delta), delta * std::pow(x, delta - 1),
                  delta * (delta - 1) * std::pow(x, delta - 2)};
      CHECK(generator_apply(d, f, x) == doctest::Approx(delta * delta / 2 * f.value));
    }
  CHECK(generator_apply(d, Jet{7.0, 0.0, 0.0}, 3.0) == 0.0);
  const auto e = DiffusionSpec::gbm(0.3, 0.7);
  CHECK(generator_apply(e, Jet{1.0, 2.0, 2.0}, 1.0) == doctest::Approx(2 * 0.3 + 0.49));
  CHECK_THROWS_AS(generator_apply(d, Jet{}, 0.0), DomainError);
  CHECK_THROWS_AS(generator_apply(d, Jet{}, -1.0), DomainError);
}

TEST_CASE("diffusion validation") {
  CHECK_THROWS_AS(DiffusionSpec::gbm(0.1, 0.0).validate(), ValidationError);
  CHECK_THROWS_AS(DiffusionSpec::abm(0.1, -1.0).validate(), ValidationError);
  CHECK_THROWS_AS(DiffusionSpec::general(parse("x"), parse("x - 1"), 0.0, fixtures::inf).validate(),
                  ValidationError);
  CHECK_NOTHROW(DiffusionSpec::general(parse("0.1*x"), parse("x"), 0.0, fixtures::inf).validate());
}

TEST_CASE("closed-form pairs") {
  const fixtures::Cubic ex(4);
  const auto fp = fundamental_pair(ex.d, ex.rho, 1.0);
  CHECK(fp.representation() == Representation::closed_form);
  for (double x : {0.1, 1.0, 3.0, 7.0}) {
    CHECK(fp.psi(x).value == doctest::Approx(std::pow(x, 4)).epsilon(1e-13));
    CHECK(fp.phi(x).value == doctest::Approx(std::pow(x, -4)).epsilon(1e-13));
  }
  const fixtures::Quadratic q;
  const auto fq = fundamental_pair(q.d, q.rho, 1.0);
  CHECK(fq.exponents()->first == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fq.exponents()->second == doctest::Approx(-1.2).epsilon(1e-14));

  // Arithmetic Brownian motion: exponents solve sigma^2/2 g^2 + mu g - rho = 0.
  const auto fa = fundamental_pair(DiffusionSpec::abm(0.2, 0.5), 0.3, 0.0);
  const auto [gp, gm] = *fa.exponents();
  for (double g : {gp, gm}) CHECK(0.125 * g * g + 0.2 * g - 0.3 == doctest::Approx(0.0).scale(1));
  CHECK(fa.psi(1.0).value == doctest::Approx(std::exp(gp)));
}

TEST_CASE("unsupported and invalid discount rates") {
  CHECK_THROWS_AS(fundamental_pair(DiffusionSpec::gbm(0.1, 1.0), 0.0, 1.0), UnsupportedError);
  CHECK_THROWS_AS(fundamental_pair(DiffusionSpec::gbm(0.1, 1.0), -1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(fundamental_pair(DiffusionSpec::gbm(0.1, 1.0), 1.0, -1.0), ValidationError);
}

TEST_CASE("shooting reproduces closed forms") {
  SUBCASE("gbm") {
    const auto gen = DiffusionSpec::general(parse("0.5*x"), parse("x"), 0.0, fixtures::inf);
    const auto fp = fundamental_pair(gen, 2.0, 1.0);
    CHECK(fp.representation() == Representation::spline_table);
    double worst = 0;
    for (double x = 0.1; x <= 10.0; x *= 1.05)
      worst = std::max(worst, std::fabs(fp.psi(x).value / (x * x) - 1));
    CHECK(worst <= 1e-6);
  }
  SUBCASE("abm") {
    const auto gen = DiffusionSpec::general(parse("0.2"), parse("0.5"), -fixtures::inf, fixtures::inf);
    const auto fp = fundamental_pair(gen, 0.3, 0.0);
    const auto closed = fundamental_pair(DiffusionSpec::abm(0.2, 0.5), 0.3, 0.0);
    double worst = 0;
    for (double x = -3; x <= 3; x += 0.1) {
      worst = std::max(worst, std::fabs(fp.psi(x).value / closed.psi(x).value - 1));
      worst = std::max(worst, std::fabs(fp.phi(x).value / closed.phi(x).value - 1));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("pair invariants on a general process") {
  // Mean-reverting drift, linear at both ends, proportional volatility.
  const auto d = DiffusionSpec::general(parse("0.3*x*(2 - x)/(1 + x)"), parse("0.4*x"), 0.0, fixtures::inf);
  const auto fp = fundamental_pair(d, 0.5, 1.0);
  std::vector<double> pts;
  for (double x = 0.05; x < 30; x *= 1.1) pts.push_back(x);
  const PairDiagnostics dg = diagnose(d, fp, pts);
  CHECK(dg.max_residual_psi <= 1e-6);
  CHECK(dg.max_residual_phi <= 1e-6);
  CHECK(dg.min_wronskian > 0);
  CHECK(dg.psi_increasing_positive);
  CHECK(dg.phi_decreasing_positive);
  CHECK(dg.psi_vanishes_at_left);
  CHECK(fp.psi(1.0).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rescaling multiplies psi only") {
  const fixtures::Quadratic q;
  const auto fp = fundamental_pair(q.d, q.rho, 1.0);
  const auto fp2 = fundamental_pair(q.d, q.rho, 3.0);
  const double c = fp2.psi(5.0).value / fp.psi(5.0).value;
  for (double x : {0.2, 1.0, 9.0}) CHECK(fp2.psi(x).value == doctest::Approx(c * fp.psi(x).value));
  const auto r = fp.rescaled(2.5);
  CHECK(r.psi(4.0).value == doctest::Approx(2.5 * 16));
  CHECK(r.phi(4.0).value == fp.phi(4.0).value);
}

TEST_CASE("left-end condition") {
  const fixtures::Cubic ex(4);
  const auto fp = fundamental_pair(ex.d, ex.rho, 1.0);
  CHECK(left_end_condition(ex.d, fp, ex.g) == LeftEndVerdict::holds);
  const auto zero = PiecewiseFunction::single(parse("0"), 0.0, fixtures::inf);
  CHECK(left_end_condition(ex.d, fp, zero) == LeftEndVerdict::holds);
  const auto phi = PiecewiseFunction::single(parse("x^(-4)"), 0.0, fixtures::inf);
  CHECK(left_end_condition(ex.d, fp, phi) == LeftEndVerdict::fails);
}
