#include "tstop/freeboundary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "tstop/errors.hpp"

namespace tstop {

namespace {

constexpr double kGoldenFrac = 0.38196601125010515;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double stationarity_tolerance(double p, double h) {
  return 1e-8 * (1.0 + std::fabs(h) / (1.0 + std::fabs(p)));
}

// Largest |h'| over the sides that exist at p (both sides at payoff knots).
double stationarity_residual(const ThresholdFunction& tf, double p) {
  const double r = std::fabs(tf.h(p, Side::right).d1);
  if (tf.payoff().near_knot(p, 1e-12)) return std::max(r, std::fabs(tf.h(p, Side::left).d1));
  return r;
}

double bisect(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

double golden_min(const std::function<double(double)>& f, double a, double b) {
  double c = b - (1.0 - kGoldenFrac) * (b - a);
  double d = a + (1.0 - kGoldenFrac) * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + std::fabs(a)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (1.0 - kGoldenFrac) * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (1.0 - kGoldenFrac) * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

struct LeftChecks {
  Verdict weak;
  Verdict strict;
};

// h(p) <= h(p*) (weak) and h(p) < h(p*) (strict, away from p*) left of p*.
LeftChecks left_checks(const std::vector<double>& ps, const std::function<double(double)>& h,
                       double p_star) {
  const double hs = h(p_star);
  const double tol = h_comparison_tolerance(hs);
  const double near = 1e-6 * (1.0 + std::fabs(p_star));
  LeftChecks out;
  out.weak.tolerance = tol;
  out.strict.tolerance = tol;
  double worst = 0.0, tightest = std::numeric_limits<double>::infinity();
  for (double p : ps) {
    if (!(p < p_star)) break;
    const double v = h(p);
    if (v - hs > tol && v - hs > worst) {
      worst = v - hs;
      out.weak.pass = false;
      out.weak.witness = p;
    }
    if (std::fabs(p - p_star) > near && hs - v <= tol && hs - v < tightest) {
      tightest = hs - v;
      out.strict.pass = false;
      out.strict.witness = p;
    }
  }
  if (!out.weak.pass) out.strict = {false, out.weak.witness, tol};
  return out;
}

void settle(OptimalityCertificate& c) {
  using O = OptimalityCertificate::Overall;
  for (const Verdict* v : {&c.h_max_left, &c.pasting_inequality, &c.generator_inequality}) {
    if (!v->pass) {
      c.overall = O::necessary_fail;
      c.witness = v->witness;
      return;
    }
  }
  c.overall = c.h_strict_max_left.pass ? O::continuation_semi_interval : O::optimal_all_stopping_times;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<FBSolution> solve_fb(const ThresholdFunction& tf) {
  const auto ps = tf.grid();
  const auto h1 = tf.first();
  const auto h2 = tf.second();
  const std::size_t n = ps.size();
  auto dh = [&](double p) { return tf.h(p, Side::right).d1; };
  auto d2h = [&](double p) { return tf.h(p, Side::right).d2; };

  std::vector<double> cand;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (h1[i] == 0.0) cand.push_back(ps[i]);
    if ((h1[i] < 0.0 && h1[i + 1] > 0.0) || (h1[i] > 0.0 && h1[i + 1] < 0.0))
      cand.push_back(bisect(dh, ps[i], ps[i + 1]));
  }
  // Touching zeros: |h'| has a local minimum without a sign change.
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double a = std::fabs(h1[i - 1]), b = std::fabs(h1[i]), c = std::fabs(h1[i + 1]);
    if (!(b <= a && b <= c) || b == 0.0) continue;
    const bool same_sign = (h1[i - 1] > 0) == (h1[i] > 0) && (h1[i] > 0) == (h1[i + 1] > 0);
    if (!same_sign) continue;
    double p;
    if ((h2[i - 1] < 0.0 && h2[i + 1] > 0.0) || (h2[i - 1] > 0.0 && h2[i + 1] < 0.0))
      p = bisect(d2h, ps[i - 1], ps[i + 1]);
    else
      p = golden_min([&](double x) { return std::fabs(dh(x)); }, ps[i - 1], ps[i + 1]);
    cand.push_back(p);
  }

  std::vector<FBSolution> out;
  for (double p : cand) {
    const double hp = tf.value(p);
    const double res = stationarity_residual(tf, p);
    const double tol = stationarity_tolerance(p, hp);
    if (!(res <= tol)) continue;
    FBSolution s;
    s.p_star = p;
    s.multiplier = hp;
    s.stationarity_residual = res;
    s.stationarity_tolerance = tol;
    const Jet psi = tf.pair().psi(p);
    s.value_matching_residual = std::fabs(hp * psi.value - tf.payoff()(p));
    s.u_second = hp * psi.d2;
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(),
            [](const FBSolution& a, const FBSolution& b) { return a.p_star < b.p_star; });
  // Collapse duplicates found by more than one detector.
  std::vector<FBSolution> merged;
  for (const FBSolution& s : out) {
    if (!merged.empty() &&
        std::fabs(s.p_star - merged.back().p_star) <= 1e-8 * (1.0 + std::fabs(s.p_star))) {
      if (s.stationarity_residual < merged.back().stationarity_residual) merged.back() = s;
      continue;
    }
    merged.push_back(s);
  }
  for (FBSolution& s : merged) {
    const PiecewiseFunction& g = tf.payoff();
    if (!g.near_knot(s.p_star, 1e-9)) {
      s.g_second = g.jet(s.p_star, Side::right).d2;
      s.gap = *s.g_second - s.u_second;
      s.classification_tolerance =
          1e-9 * (1.0 + std::max(std::fabs(s.u_second), std::fabs(*s.g_second)));
    }
    s.second_order = classify_second_order(s, g, tf.pair());
  }
  return merged;
}

SecondOrder classify_second_order(const FBSolution& sol, const PiecewiseFunction& g,
                                  const FundamentalPair& fp) {
  if (g.near_knot(sol.p_star, 1e-9)) return SecondOrder::inconclusive;
  const double g2 = g.jet(sol.p_star, Side::right).d2;
  const double u2 = sol.multiplier * fp.psi(sol.p_star).d2;
  if (!std::isfinite(g2) || !std::isfinite(u2)) return SecondOrder::inconclusive;
  const double tol = 1e-9 * (1.0 + std::max(std::fabs(u2), std::fabs(g2)));
  if (u2 > g2 + tol) return SecondOrder::local_max;
  if (u2 < g2 - tol) return SecondOrder::local_min;
  return SecondOrder::inconclusive;
}

std::optional<double> second_derivative_identity_residual(const FBSolution& sol,
                                                          const ThresholdFunction& tf) {
  const PiecewiseFunction& g = tf.payoff();
  const FundamentalPair& fp = tf.pair();
  const double p = sol.p_star;
  const Jet psi = fp.psi(p);
  const double u2 = sol.multiplier * psi.d2;
  std::vector<Side> sides{Side::right};
  if (g.near_knot(p, 1e-12)) sides = {Side::left, Side::right};
  double worst = 0.0;
  bool any = false;
  for (Side side : sides) {
    if (side == Side::left && !(p > g.lower())) continue;
    if (side == Side::right && !(p < g.upper())) continue;
    const double g2 = g.jet(p, side).d2;
    const double h2 = tf.h(p, side).d2;
    if (!std::isfinite(g2) || !std::isfinite(h2)) continue;
    worst = std::max(worst, std::fabs(psi.value * h2 - (g2 - u2)));
    any = true;
  }
  if (!any) return std::nullopt;
  return worst;
}

double fb_ode_residual(const DiffusionSpec& d, const FundamentalPair& fp, const FBSolution& sol,
                       int points) {
  const double rho = fp.rho();
  const double lo = std::max(d.l, fp.lower());
  double worst = 0.0;
  for (int k = 1; k <= points; ++k) {
    double x;
    if (std::isfinite(lo))
      x = lo + (sol.p_star - lo) * static_cast<double>(k) / (points + 1);
    else
      x = sol.p_star - scale_unit(d, rho, sol.p_star) * 0.5 * (points + 1 - k);
    if (!d.contains(x) || !fp.contains(x)) continue;
    const Jet psi = fp.psi(x);
    const Jet u{sol.multiplier * psi.value, sol.multiplier * psi.d1, sol.multiplier * psi.d2};
    const double r = std::fabs(generator_apply(d, u, x) - rho * u.value) /
                     (1.0 + rho * std::fabs(u.value));
    worst = std::max(worst, r);
  }
  return worst;
}

// ---------------------------------------------------------------------------

OptimalityCertificate certify_optimality(const ThresholdFunction& tf, const FundamentalPair& fp,
                                         const PiecewiseFunction& g, const DiffusionSpec& d,
                                         double rho, double p_star) {
  OptimalityCertificate c;
  c.p_star = p_star;
  const auto grid = tf.grid();
  c.r_max = grid.back();
  if (!(p_star > grid.front() && p_star < grid.back())) {
    c.overall = OptimalityCertificate::Overall::inconclusive;
    c.caveats.push_back("p* = " + fmt(p_star) + " is not inside the threshold grid");
    return c;
  }
  try {
    const std::vector<double> ps(grid.begin(), grid.end());
    const auto h = [&](double p) { return g(p) / fp.psi(p).value; };
    const LeftChecks left = left_checks(ps, h, p_star);
    c.h_max_left = left.weak;
    c.h_strict_max_left = left.strict;

    const Jet psi = fp.psi(p_star);
    const double lhs = psi.d1 * g(p_star);
    const double rhs = psi.value * g.one_sided(p_star, Side::right, 1);
    c.pasting_inequality.tolerance = 1e-9 * (1.0 + std::max(std::fabs(lhs), std::fabs(rhs)));
    c.pasting_inequality.pass = lhs >= rhs - c.pasting_inequality.tolerance;
    if (!c.pasting_inequality.pass) c.pasting_inequality.witness = p_star;

    for (double k : g.knots())
      if (k > p_star)
        c.caveats.push_back("payoff is not C2 at " + fmt(k) +
                            " > p*; Lg <= rho g checked on each side of the knot");
    double worst = 0.0;
    c.generator_inequality.tolerance = 1e-9;  // relative, per point: 1e-9 (1 + max(|Lg|, |rho g|))
    for (double p : ps) {
      if (!(p > p_star)) continue;
      std::vector<Side> sides{Side::right};
      if (g.near_knot(p, 1e-12)) sides = {Side::left, Side::right};
      for (Side side : sides) {
        const double lg = generator_apply(d, g, p, side);
        const double rg = rho * g(p);
        const double scale = 1.0 + std::max(std::fabs(lg), std::fabs(rg));
        const double excess = (lg - rg) / scale;
        if (excess > 1e-9 && excess > worst) {
          worst = excess;
          c.generator_inequality.pass = false;
          c.generator_inequality.witness = p;
        }
      }
    }
    if (tf.grid_info().right_truncated) {
      c.caveats.push_back("Lg <= rho g checked up to the truncation radius " + fmt(c.r_max));
      if (c.h_strict_max_left.pass)
        c.caveats.push_back("limsup of max(0, h) at the right end observed only on the grid tail: "
                            "h(" + fmt(c.r_max) + ") = " + fmt(h(c.r_max)));
    }
  } catch (const Error& e) {
    c.overall = OptimalityCertificate::Overall::inconclusive;
    c.caveats.push_back(std::string("evaluation failed: ") + e.what());
    return c;
  }
  settle(c);
  return c;
}

OptimalityCertificate certify_linear_payoff(const DiffusionSpec& d, const FundamentalPair& fp,
                                            double rho, double c, double p_star,
                                            const std::vector<double>& grid) {
  OptimalityCertificate out;
  out.p_star = p_star;
  out.r_max = grid.empty() ? p_star : grid.back();
  try {
    const auto h = [&](double p) { return (p - c) / fp.psi(p).value; };
    const LeftChecks left = left_checks(grid, h, p_star);
    out.h_max_left = left.weak;
    out.h_strict_max_left = left.strict;

    const Jet psi = fp.psi(p_star);
    const double lhs = psi.d1 * (p_star - c);
    const double rhs = psi.value;
    out.pasting_inequality.tolerance = 1e-9 * (1.0 + std::max(std::fabs(lhs), std::fabs(rhs)));
    out.pasting_inequality.pass = lhs >= rhs - out.pasting_inequality.tolerance;
    if (!out.pasting_inequality.pass) out.pasting_inequality.witness = p_star;

    out.generator_inequality.tolerance = 1e-9;
    double worst = 0.0;
    for (double p : grid) {
      if (!(p > p_star)) continue;
      const double a = d.drift_at(p), b = rho * (p - c);
      const double excess = (a - b) / (1.0 + std::max(std::fabs(a), std::fabs(b)));
      if (excess > 1e-9 && excess > worst) {
        worst = excess;
        out.generator_inequality.pass = false;
        out.generator_inequality.witness = p;
      }
    }
  } catch (const Error& e) {
    out.overall = OptimalityCertificate::Overall::inconclusive;
    out.caveats.push_back(std::string("evaluation failed: ") + e.what());
    return out;
  }
  settle(out);
  return out;
}

MonotoneTail monotone_tail_check(const ThresholdFunction& tf, double p_star) {
  MonotoneTail out;
  const auto ps = tf.grid();
  const auto hv = tf.values();
  double prev = tf.value(p_star);
  out.tolerance = h_comparison_tolerance(prev);
  double worst = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!(ps[i] > p_star)) continue;
    const double rise = hv[i] - prev;
    if (rise > out.tolerance && rise > worst) {
      worst = rise;
      out.consistent = false;
      out.witness = ps[i];
    }
    prev = hv[i];
  }
  return out;
}

const char* to_string(SecondOrder s) {
  switch (s) {
    case SecondOrder::local_max: return "local_max";
    case SecondOrder::local_min: return "local_min";
    case SecondOrder::inconclusive: return "inconclusive";
  }
  return "?";
}

const char* to_string(OptimalityCertificate::Overall o) {
  using O = OptimalityCertificate::Overall;
  switch (o) {
    case O::optimal_all_stopping_times: return "optimal_all_stopping_times";
    case O::continuation_semi_interval: return "continuation_semi_interval";
    case O::necessary_fail: return "necessary_fail";
    case O::inconclusive: return "inconclusive";
  }
  return "?";
}

}  // namespace tstop
