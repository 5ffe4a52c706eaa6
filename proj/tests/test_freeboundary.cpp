#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tstop/freeboundary.hpp"

using namespace tstop;

TEST_CASE("free-boundary solutions of the piecewise payoff") {
  const fixtures::Quadratic q;
  const auto tf = fixtures::threshold_function(q.d, q.rho, q.g);
  const auto sols = solve_fb(tf);
  REQUIRE(sols.size() == 2);
  CHECK(std::fabs(sols[0].p_star - 1) <= 1e-6);
  CHECK(std::fabs(sols[1].p_star - 18) <= 1e-4);
  CHECK(std::fabs(sols[0].multiplier - 1) <= 1e-8);
  CHECK(std::fabs(sols[1].multiplier - 34.0 / 9) <= 1e-6);
  CHECK(sols[0].u_second == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(sols[1].u_second == doctest::Approx(68.0 / 9).epsilon(1e-9));
  CHECK(*sols[0].g_second == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(*sols[1].g_second == doctest::Approx(7.5).epsilon(1e-12));
  CHECK(sols[0].second_order == SecondOrder::local_min);
  CHECK(sols[1].second_order == SecondOrder::local_max);
  CHECK(*sols[1].gap < 0);
  for (const auto& s : sols) {
    CHECK(s.stationarity_residual <= s.stationarity_tolerance);
    CHECK(s.value_matching_residual <= 1e-9 * (1 + std::fabs(q.g(s.p_star))));
    CHECK(*second_derivative_identity_residual(s, tf) <= 1e-6 * (1 + std::fabs(*s.g_second)));
    CHECK(fb_ode_residual(q.d, tf.pair(), s) <= 1e-6);
  }
}

TEST_CASE("free-boundary solutions of the cubic example") {
  const fixtures::Cubic d4(4), d2(2);
  const auto s4 = solve_fb(fixtures::threshold_function(d4.d, d4.rho, d4.g));
  REQUIRE(s4.size() == 2);
  CHECK(s4[0].p_star == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(s4[0].multiplier == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s4[0].second_order == SecondOrder::inconclusive);
  CHECK(s4[1].p_star == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(s4[1].multiplier == doctest::Approx(283.0 / 256).epsilon(1e-12));
  CHECK(s4[1].second_order == SecondOrder::local_max);

  const auto s2 = solve_fb(fixtures::threshold_function(d2.d, d2.rho, d2.g));
  REQUIRE(s2.size() == 1);
  CHECK(s2[0].p_star == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("no stationary points gives an empty list") {
  const fixtures::Quadratic q;
  const auto g = PiecewiseFunction::single(parse("x^3"), 0.0, fixtures::inf);
  CHECK(solve_fb(fixtures::threshold_function(q.d, q.rho, g)).empty());
}

TEST_CASE("certificates") {
  const fixtures::Quadratic q;
  const auto tf = fixtures::threshold_function(q.d, q.rho, q.g);
  const auto c18 = certify_optimality(tf, tf.pair(), q.g, q.d, q.rho, 18.0);
  CHECK(c18.h_max_left.pass);
  CHECK(c18.pasting_inequality.pass);
  CHECK(c18.generator_inequality.pass);
  CHECK(c18.h_strict_max_left.pass);
  CHECK(c18.overall == OptimalityCertificate::Overall::continuation_semi_interval);
  CHECK(c18.certifies_optimal());

  const auto c1 = certify_optimality(tf, tf.pair(), q.g, q.d, q.rho, 1.0);
  CHECK_FALSE(c1.h_max_left.pass);
  REQUIRE(c1.h_max_left.witness);
  CHECK(*c1.h_max_left.witness < 1.0);
  CHECK(c1.overall == OptimalityCertificate::Overall::necessary_fail);

  const fixtures::Cubic d4(4);
  const auto t4 = fixtures::threshold_function(d4.d, d4.rho, d4.g);
  const auto c4 = certify_optimality(t4, t4.pair(), d4.g, d4.d, d4.rho, 4.0);
  CHECK(c4.certifies_optimal());
}

TEST_CASE("linear payoff certificate") {
  const auto d = DiffusionSpec::gbm(0.05, 0.2);
  const double rho = 0.1, c = 1.0;
  const auto g = PiecewiseFunction::single(parse("x - 1"), 0.0, fixtures::inf);
  const auto tf = fixtures::threshold_function(d, rho, g);
  const auto m = maximize_h(tf);
  REQUIRE(m.kind == MaximizeResult::Kind::attained_interior);
  // Independent root of 0.02 b(b-1) + 0.05 b - 0.1 = 0.
  const double beta = (-0.03 + std::sqrt(0.03 * 0.03 + 4 * 0.02 * 0.1)) / (2 * 0.02);
  CHECK(m.p_star == doctest::Approx(beta / (beta - 1)).epsilon(1e-9));
  const std::vector<double> grid(tf.grid().begin(), tf.grid().end());
  const auto cert = certify_linear_payoff(d, tf.pair(), rho, c, m.p_star, grid);
  CHECK(cert.h_max_left.pass);
  CHECK(cert.pasting_inequality.pass);
  CHECK(cert.generator_inequality.pass);
  CHECK(cert.certifies_optimal());

  // Drift equal to rho (p - c): the drift condition holds with equality.
  const auto eq = DiffusionSpec::general(parse("0.1*(x - 1)"), parse("0.2*x"), 0.5, fixtures::inf);
  const auto fe = fundamental_pair(eq, rho, 1.0);
  const auto ce = certify_linear_payoff(eq, fe, rho, c, 3.0, {3.5, 10.0, 100.0});
  CHECK(ce.generator_inequality.pass);

  // alpha > rho: no interior maximiser.
  const auto fast = DiffusionSpec::gbm(0.15, 0.2);
  const auto mf = maximize_h(fixtures::threshold_function(fast, rho, g));
  CHECK(mf.kind == MaximizeResult::Kind::sup_at_boundary);
}

TEST_CASE("monotone tail detector") {
  const fixtures::Quadratic q;
  const auto tf = fixtures::threshold_function(q.d, q.rho, q.g);
  CHECK(monotone_tail_check(tf, 18.0).consistent);
  const fixtures::Cubic d4(4);
  CHECK(monotone_tail_check(fixtures::threshold_function(d4.d, d4.rho, d4.g), 4.0).consistent);

  std::vector<double> p, h;
  for (int i = 0; i < 40; ++i) {
    p.push_back(i);
    h.push_back(i < 10 ? i : 10.0 - 0.1 * (i - 10));
  }
  h[30] += 5.0;
  const auto bumped = monotone_tail_check(ThresholdFunction::from_table(p, h), 10.0);
  CHECK_FALSE(bumped.consistent);
  CHECK(*bumped.witness == 30.0);
}
