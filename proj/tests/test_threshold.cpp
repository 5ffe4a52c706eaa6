#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "tstop/errors.hpp"

using namespace tstop;

TEST_CASE("two-sided exit value") {
  const fixtures::Cubic ex(4);
  const auto fp = fundamental_pair(ex.d, ex.rho, 1.0);
  CHECK(two_sided_value(fp, ex.g, 0.5, 0.5, 3.0) == doctest::Approx(ex.g(0.5)));
  CHECK(two_sided_value(fp, ex.g, 3.0, 0.5, 3.0) == doctest::Approx(ex.g(3.0)));
  CHECK(std::fabs(two_sided_value(fp, ex.g, 1.0, 0.01, 4.0) - 283.0 / 256) <= 1e-3);
  CHECK_THROWS_AS(two_sided_value(fp, ex.g, 1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("threshold value representation") {
  const fixtures::Cubic ex(4);
  const auto fp = fundamental_pair(ex.d, ex.rho, 1.0);
  CHECK(value_threshold(fp, ex.g, 1.0, 4.0, LeftEndVerdict::holds) ==
        doctest::Approx(283.0 / 256).epsilon(1e-14));
  CHECK(value_threshold(fp, ex.g, 5.0, 4.0, LeftEndVerdict::holds) == ex.g(5.0));
  CHECK_THROWS_AS(value_threshold(fp, ex.g, 1.0, 4.0, LeftEndVerdict::undetermined), DomainError);

  const fixtures::Quadratic q;
  const auto fq = fundamental_pair(q.d, q.rho, 1.0);
  CHECK(value_threshold(fq, q.g, 9.0, 18.0, LeftEndVerdict::holds) ==
        doctest::Approx(306.0).epsilon(1e-13));
}

TEST_CASE("h times psi recovers g") {
  const fixtures::Quadratic q;
  const auto tf = fixtures::threshold_function(q.d, q.rho, q.g);
  const auto ps = tf.grid();
  const auto hv = tf.values();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double g = q.g(ps[i]);
    CHECK(std::fabs(hv[i] * tf.pair().psi(ps[i]).value - g) <= 1e-10 * (1 + std::fabs(g)));
    CHECK(hv[i] == doctest::Approx(fixtures::Quadratic::h(ps[i])).epsilon(1e-12));
  }
  // The knot at 2 is on the grid.
  CHECK(std::find(ps.begin(), ps.end(), 2.0) != ps.end());
}

TEST_CASE("maximize h in the three cubic regimes") {
  const fixtures::Cubic d4(4), d3(3), d2(2);
  const auto m4 = maximize_h(fixtures::threshold_function(d4.d, d4.rho, d4.g));
  CHECK(m4.kind == MaximizeResult::Kind::attained_interior);
  CHECK(std::fabs(m4.p_star - 4.0) <= 1e-6);
  CHECK(m4.h_star == doctest::Approx(283.0 / 256).epsilon(1e-12));

  const auto m2 = maximize_h(fixtures::threshold_function(d2.d, d2.rho, d2.g));
  CHECK(m2.kind == MaximizeResult::Kind::sup_at_boundary);
  CHECK(m2.unbounded);

  const auto m3 = maximize_h(fixtures::threshold_function(d3.d, d3.rho, d3.g));
  CHECK(m3.kind == MaximizeResult::Kind::sup_at_boundary);
  CHECK_FALSE(m3.unbounded);
  CHECK(m3.limit_estimate >= 1.99);
  CHECK(m3.limit_estimate <= 2.01);
  CHECK(m3.doublings == 8);
}

TEST_CASE("maximize h breaks ties towards smaller p") {
  const auto tf = ThresholdFunction::from_table({1, 2, 3, 4, 5}, {0, 1, 0, 1, 0});
  const auto m = maximize_h(tf);
  CHECK(m.kind == MaximizeResult::Kind::attained_interior);
  CHECK(m.p_star == 2.0);
}

TEST_CASE("threshold optimality checks") {
  const fixtures::Quadratic q;
  const auto tf = fixtures::threshold_function(q.d, q.rho, q.g);
  const auto at18 = check_threshold_optimality(tf, 18.0);
  CHECK(at18.weak.pass);
  CHECK(at18.strict.pass);
  const auto at1 = check_threshold_optimality(tf, 1.0);
  CHECK_FALSE(at1.weak.pass);
  CHECK_FALSE(at1.strict.pass);
  REQUIRE(at1.weak.witness);
  CHECK(fixtures::Quadratic::h(*at1.weak.witness) > 1.0);

  // Constant h: weak holds everywhere, strictness fails.
  std::vector<double> p, h;
  for (int i = 1; i <= 50; ++i) {
    p.push_back(i);
    h.push_back(2.5);
  }
  const auto flat = check_threshold_optimality(ThresholdFunction::from_table(p, h), 20.0);
  CHECK(flat.weak.pass);
  CHECK_FALSE(flat.strict.pass);
}

TEST_CASE("strict implies weak on random tables") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p, h;
    for (int i = 0; i < 30; ++i) {
      p.push_back(i);
      h.push_back(u(rng));
    }
    const auto r = check_threshold_optimality(ThresholdFunction::from_table(p, h), 1.0 + trial % 28);
    if (r.strict.pass) CHECK(r.weak.pass);
  }
}

TEST_CASE("value function dominates the payoff and matches the sup form") {
  const fixtures::Quadratic q;
  const auto tf = fixtures::threshold_function(q.d, q.rho, q.g);
  const auto m = maximize_h(tf);
  const auto ps = tf.grid();
  for (std::size_t i = 0; i < ps.size(); i += 7) {
    const double x = ps[i];
    const double v = threshold_value(tf, x, m.p_star);
    const double g = q.g(x);
    CHECK(v >= g - 1e-10 * (1 + std::fabs(g)));
    const double psi = tf.pair().psi(x).value;
    double sup = tf.sup_right_of(x);
    if (m.p_star > x) sup = std::max(sup, m.h_star);
    CHECK(std::fabs(v - std::max(g, psi * sup)) <= 1e-10 * (1 + std::fabs(v)));
    if (x >= m.p_star) CHECK(std::fabs(v - g) <= 1e-10 * (1 + std::fabs(g)));
    else CHECK(v > g);
  }
  const auto cs = continuation_set(tf, m.p_star);
  CHECK(cs.semi_interval);
}

TEST_CASE("argmax is invariant under rescaling psi") {
  const fixtures::Quadratic q;
  const auto fp = fundamental_pair(q.d, q.rho, 1.0);
  const auto grid = make_grid(q.d, fp, q.g);
  const ThresholdFunction base(fp, q.g, grid);
  const auto m0 = maximize_h(base);
  const auto t0 = check_threshold_optimality(base, m0.p_star);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> logc(-5, 5);
  for (int i = 0; i < 10; ++i) {
    const double c = std::exp(logc(rng));
    const ThresholdFunction tf(fp.rescaled(c), q.g, grid);
    const auto m = maximize_h(tf);
    CHECK(m.kind == m0.kind);
    CHECK(m.p_star == doctest::Approx(m0.p_star).epsilon(1e-9));
    CHECK(m.h_star * c == doctest::Approx(m0.h_star).epsilon(1e-12));
    const auto t = check_threshold_optimality(tf, m.p_star);
    CHECK(t.weak.pass == t0.weak.pass);
    CHECK(t.strict.pass == t0.strict.pass);
    CHECK(threshold_value(tf, 9.0, m.p_star) == doctest::Approx(306.0).epsilon(1e-9));
  }
}

TEST_CASE("smooth pasting") {
  const fixtures::Quadratic q;
  const auto fq = fundamental_pair(q.d, q.rho, 1.0);
  const auto sp = smooth_pasting_check(fq, q.g, 18.0);
  CHECK(sp.kind == SmoothPasting::Kind::smooth);
  CHECK(sp.value_derivative_left == doctest::Approx(136.0).epsilon(1e-12));
  CHECK(sp.payoff_derivative_right == doctest::Approx(136.0).epsilon(1e-12));

  const fixtures::Cubic ex(4);
  const auto fe = fundamental_pair(ex.d, ex.rho, 1.0);
  const auto se = smooth_pasting_check(fe, ex.g, 4.0);
  CHECK(se.kind == SmoothPasting::Kind::smooth);
  CHECK(se.value_derivative_left == doctest::Approx(283.0));

  // Call-type payoff with its kink below the threshold.
  const auto d = DiffusionSpec::gbm(0.05, 0.2);
  const auto fr = fundamental_pair(d, 0.1, 1.0);
  const PiecewiseFunction call({{0.0, 1.0, parse("0")}, {1.0, fixtures::inf, parse("x - 1")}});
  const double beta = fr.exponents()->first;
  CHECK(smooth_pasting_check(fr, call, beta / (beta - 1)).kind == SmoothPasting::Kind::smooth);

  // At the kink itself the derivative chain is one-sided.
  const auto kinked = smooth_pasting_check(fr, call, 1.0);
  CHECK(kinked.payoff_derivative_left == 0.0);
  CHECK(kinked.payoff_derivative_right == 1.0);
}

TEST_CASE("grid policy") {
  const fixtures::Quadratic q;
  const auto fp = fundamental_pair(q.d, q.rho, 1.0);
  const auto grid = make_grid(q.d, fp, q.g);
  CHECK(grid.geometric);
  CHECK(grid.right_truncated);
  CHECK(grid.p.front() == doctest::Approx(1e-4));
  CHECK(grid.p.back() == doctest::Approx(1e3));
  CHECK(grid.p.size() == 2002);  // 2001 plus the knot
  CHECK(std::is_sorted(grid.p.begin(), grid.p.end()));

  const auto abm = DiffusionSpec::abm(0.0, 1.0);
  const auto g = PiecewiseFunction::single(parse("x"), -fixtures::inf, fixtures::inf);
  const auto fa = fundamental_pair(abm, 0.5, 0.0);
  const auto ga = make_grid(abm, fa, g);
  CHECK_FALSE(ga.geometric);
  CHECK(ga.p.front() == doctest::Approx(-20.0));  // 40 scale units of 1/2
  CHECK(ga.p.back() == doctest::Approx(20.0));
}
