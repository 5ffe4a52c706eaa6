#include "tstop/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "tstop/errors.hpp"

namespace tstop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGoldenFrac = 0.38196601125010515;  // (3 - sqrt(5)) / 2

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::size_t argmax_first(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

std::size_t default_grid_points() {
  if (const char* env = std::getenv("THRESHOLD_STOP_GRID_POINTS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 11) return static_cast<std::size_t>(v);
  }
  return 2001;
}

ThresholdGrid make_grid(const DiffusionSpec& d, const FundamentalPair& fp,
                        const PiecewiseFunction& g, const GridPolicy& policy) {
  if (policy.points < 3) throw ValidationError("grid needs at least 3 points", "analysis.grid_points");
  const bool lf = std::isfinite(d.l), rf = std::isfinite(d.r);
  const double x_ref = fp.x_ref();
  const double unit = scale_unit(d, fp.rho(), x_ref);

  double left = lf ? d.l + policy.left_offset * (x_ref - d.l) : x_ref - policy.scale_units * unit;
  double right;
  if (rf)
    right = d.r - policy.left_offset * (d.r - x_ref);
  else if (lf)
    right = d.l + policy.right_factor * (x_ref - d.l);
  else
    right = x_ref + policy.scale_units * unit;
  left = std::max(left, fp.lower());
  right = std::min(right, fp.upper());
  left = std::max(left, g.lower());
  right = std::min(right, g.upper());

  ThresholdGrid grid;
  grid.geometric = lf && !rf;
  grid.right_truncated = !rf;
  grid.l = d.l;
  grid.x_ref = x_ref;

  const std::size_t n = policy.points;
  grid.p.resize(n);
  if (grid.geometric) {
    const double a = left - d.l, b = right - d.l;
    grid.spacing = std::pow(b / a, 1.0 / static_cast<double>(n - 1));
    for (std::size_t i = 0; i < n; ++i)
      grid.p[i] = d.l + a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(n - 1));
  } else {
    grid.spacing = (right - left) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) grid.p[i] = left + grid.spacing * static_cast<double>(i);
  }
  grid.p.front() = left;
  grid.p.back() = right;
  for (double k : g.knots())
    if (k > left && k < right) grid.p.push_back(k);
  std::sort(grid.p.begin(), grid.p.end());
  grid.p.erase(std::unique(grid.p.begin(), grid.p.end()), grid.p.end());
  return grid;
}

// ---------------------------------------------------------------------------
// ThresholdFunction

ThresholdFunction::ThresholdFunction(FundamentalPair fp, PiecewiseFunction g, ThresholdGrid grid)
    : fp_(std::move(fp)), g_(std::move(g)), grid_(std::move(grid)) {
  if (grid_.p.size() < 3) throw ValidationError("threshold grid needs at least 3 points");
  tabulate();
}

ThresholdFunction ThresholdFunction::from_table(std::vector<double> p, std::vector<double> h) {
  if (p.size() != h.size() || p.size() < 3)
    throw ValidationError("table needs matching p and h columns with at least 3 rows");
  for (std::size_t i = 1; i < p.size(); ++i)
    if (!(p[i] > p[i - 1])) throw ValidationError("table abscissae must be increasing");
  ThresholdFunction tf;
  tf.grid_.p = std::move(p);
  tf.grid_.geometric = false;
  tf.grid_.l = tf.grid_.p.front();
  tf.grid_.x_ref = tf.grid_.p.front();
  tf.h_ = std::move(h);
  const std::size_t n = tf.grid_.p.size();
  tf.h1_.assign(n, 0.0);
  tf.h2_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? n - 1 : i + 1;
    tf.h1_[i] = (tf.h_[b] - tf.h_[a]) / (tf.grid_.p[b] - tf.grid_.p[a]);
  }
  tf.suffix_max_.assign(n + 1, -kInf);
  for (std::size_t i = n; i-- > 0;) tf.suffix_max_[i] = std::max(tf.suffix_max_[i + 1], tf.h_[i]);
  return tf;
}

void ThresholdFunction::tabulate() {
  const std::size_t n = grid_.p.size();
  h_.resize(n);
  h1_.resize(n);
  h2_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Jet j = h(grid_.p[i], Side::right);
    h_[i] = j.value;
    h1_[i] = j.d1;
    h2_[i] = j.d2;
  }
  suffix_max_.assign(n + 1, -kInf);
  for (std::size_t i = n; i-- > 0;) suffix_max_[i] = std::max(suffix_max_[i + 1], h_[i]);
}

Jet ThresholdFunction::h(double p, Side side) const {
  if (!fp_) {
    const auto& xs = grid_.p;
    if (!(p >= xs.front() && p <= xs.back()))
      throw DomainError("threshold " + fmt(p) + " outside the tabulated range");
    auto it = std::upper_bound(xs.begin(), xs.end(), p);
    std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(it - xs.begin()), 1, xs.size() - 1) - 1;
    const double t = (p - xs[i]) / (xs[i + 1] - xs[i]);
    const double slope = (h_[i + 1] - h_[i]) / (xs[i + 1] - xs[i]);
    return {h_[i] + t * (h_[i + 1] - h_[i]), slope, 0.0};
  }
  const Jet s = fp_->psi(p);
  const Jet g = g_->jet(p, side);
  Jet out;
  out.value = g.value / s.value;
  out.d1 = (g.d1 * s.value - g.value * s.d1) / (s.value * s.value);
  out.d2 = (g.d2 - 2.0 * out.d1 * s.d1 - out.value * s.d2) / s.value;
  return out;
}

const FundamentalPair& ThresholdFunction::pair() const {
  if (!fp_) throw Error("threshold table has no fundamental pair attached");
  return *fp_;
}

const PiecewiseFunction& ThresholdFunction::payoff() const {
  if (!g_) throw Error("threshold table has no payoff attached");
  return *g_;
}

ThresholdFunction ThresholdFunction::extended_to(double new_right) const {
  if (!fp_) throw Error("cannot extend a tabulated threshold function");
  ThresholdGrid grid = grid_;
  const double last = grid.p.back();
  if (!(new_right > last)) return *this;
  if (grid.geometric) {
    double q = grid.spacing > 1.0 ? grid.spacing : 1.01;
    double x = last;
    for (;;) {
      x = grid.l + (x - grid.l) * q;
      if (x >= new_right) break;
      grid.p.push_back(x);
    }
  } else {
    const double step = grid.spacing > 0.0 ? grid.spacing : (new_right - last) / 100.0;
    for (double x = last + step; x < new_right; x += step) grid.p.push_back(x);
  }
  grid.p.push_back(new_right);
  for (double k : g_->knots())
    if (k > last && k < new_right) grid.p.push_back(k);
  std::sort(grid.p.begin(), grid.p.end());
  grid.p.erase(std::unique(grid.p.begin(), grid.p.end()), grid.p.end());
  return ThresholdFunction(*fp_, *g_, std::move(grid));
}

double ThresholdFunction::sup_right_of(double x) const {
  auto it = std::upper_bound(grid_.p.begin(), grid_.p.end(), x);
  return suffix_max_[static_cast<std::size_t>(it - grid_.p.begin())];
}

// ---------------------------------------------------------------------------
// Values

double two_sided_value(const FundamentalPair& fp, const PiecewiseFunction& g, double x, double a,
                       double p) {
  if (!(a <= x && x <= p && a < p))
    throw DomainError("two-sided value needs a <= x <= p with a < p");
  const Jet pa = fp.psi(a), pp = fp.psi(p), px = fp.psi(x);
  const Jet qa = fp.phi(a), qp = fp.phi(p), qx = fp.phi(x);
  const double den = pa.value * qp.value - pp.value * qa.value;
  if (!(std::fabs(den) >= 1e-14))
    throw DomainError("two-sided exit determinant " + fmt(den) + " below 1e-14");
  const double u1 = (px.value * qp.value - pp.value * qx.value) / den;
  const double u2 = (pa.value * qx.value - px.value * qa.value) / den;
  return g(a) * u1 + g(p) * u2;
}

double value_threshold(const FundamentalPair& fp, const PiecewiseFunction& g, double x, double p,
                       LeftEndVerdict left_end) {
  if (left_end != LeftEndVerdict::holds)
    throw DomainError(std::string("threshold value representation needs the left-end condition; "
                                  "verdict is ") +
                      to_string(left_end));
  if (x >= p) return g(x);
  return g(p) / fp.psi(p).value * fp.psi(x).value;
}

// ---------------------------------------------------------------------------
// Maximisation

namespace {

double golden_max(const ThresholdFunction& tf, double a, double b, double tol, double seed_p,
                  double seed_h) {
  double best_p = seed_p, best_h = seed_h;
  auto consider = [&](double p, double h) {
    if (h > best_h || (h == best_h && p < best_p)) {
      best_p = p;
      best_h = h;
    }
  };
  double c = b - (1.0 - kGoldenFrac) * (b - a);
  double d = a + (1.0 - kGoldenFrac) * (b - a);
  double fc = tf.value(c), fd = tf.value(d);
  consider(c, fc);
  consider(d, fd);
  for (int it = 0; it < 300 && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (1.0 - kGoldenFrac) * (b - a);
      fc = tf.value(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (1.0 - kGoldenFrac) * (b - a);
      fd = tf.value(d);
      consider(d, fd);
    }
  }
  return best_p;
}

// Root of h' in [a, b] by bisection, NaN without a sign change.
double polish_stationary(const ThresholdFunction& tf, double a, double b) {
  double fa = tf.h(a).d1, fb = tf.h(b).d1;
  if (!(fa > 0.0 && fb < 0.0)) return std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = tf.h(m).d1;
    if (fm > 0.0) a = m;
    else if (fm < 0.0) b = m;
    else return m;
  }
  return 0.5 * (a + b);
}

double aitken(double a, double b, double c) {
  const double d1 = b - a, d2 = c - b;
  const double denom = d2 - d1;
  if (denom == 0.0 || !std::isfinite(denom)) return c;
  const double est = c - d2 * d2 / denom;
  return std::isfinite(est) ? est : c;
}

}  // namespace

MaximizeResult maximize_h(const ThresholdFunction& tf, const GridPolicy& policy) {
  MaximizeResult out;
  ThresholdFunction cur = tf;
  const ThresholdGrid& info = tf.grid_info();
  const bool can_extend = tf.has_pair() && info.right_truncated;
  std::vector<double> end_values{cur.values().back()};

  for (int doubling = 0;; ++doubling) {
    const auto hv = cur.values();
    const auto ps = cur.grid();
    const std::size_t i = argmax_first(hv);
    out.doublings = doubling;
    out.truncation_radius = ps.back();

    if (i == 0) {
      out.kind = MaximizeResult::Kind::sup_at_boundary;
      out.at_left = true;
      out.p_star = ps.front();
      out.h_star = hv.front();
      out.limit_estimate = hv.front();
      out.caveats.push_back("sup of h approached at the left truncation p = " + fmt(ps.front()));
      return out;
    }
    if (i + 1 < hv.size()) {
      out.kind = MaximizeResult::Kind::attained_interior;
      out.tolerance = 1e-9 * (1.0 + std::fabs(ps[i]));
      if (cur.has_pair()) {
        out.p_star = golden_max(cur, ps[i - 1], ps[i + 1], out.tolerance, ps[i], hv[i]);
        // Golden section only resolves p to about sqrt(eps); where h' changes
        // sign in the bracket its root is located to machine precision.
        const double polished = polish_stationary(cur, ps[i - 1], ps[i + 1]);
        if (std::isfinite(polished) &&
            cur.value(polished) >= cur.value(out.p_star) - h_comparison_tolerance(hv[i]))
          out.p_star = polished;
      } else
        out.p_star = ps[i];
      out.h_star = cur.value(out.p_star);
      return out;
    }

    if (!can_extend || doubling >= policy.max_doublings) break;
    const double last = ps.back();
    const double origin = std::isfinite(info.l) ? info.l : info.x_ref;
    double next = origin + 2.0 * (last - origin);
    next = std::min(next, cur.pair().upper());
    next = std::min(next, cur.payoff().upper());
    if (!(next > last)) {
      out.caveats.push_back("grid extension stopped at p = " + fmt(last) +
                            ": outside the domain of the fundamental solutions");
      break;
    }
    cur = cur.extended_to(next);
    end_values.push_back(cur.values().back());
  }

  const auto hv = cur.values();
  out.kind = MaximizeResult::Kind::sup_at_boundary;
  out.p_star = cur.grid().back();
  out.h_star = hv.back();
  out.truncation_radius = cur.grid().back();
  const double h0 = end_values.front();
  out.unbounded = end_values.size() > 1 && out.h_star > 0.0 && out.h_star > 10.0 * std::fabs(h0);
  if (out.unbounded) {
    out.limit_estimate = kInf;
  } else if (end_values.size() >= 3) {
    const std::size_t n = end_values.size();
    out.limit_estimate = aitken(end_values[n - 3], end_values[n - 2], end_values[n - 1]);
  } else {
    out.limit_estimate = out.h_star;
  }
  out.caveats.push_back("h still increasing at truncation radius " + fmt(out.truncation_radius));
  return out;
}

// ---------------------------------------------------------------------------
// h maximal at p* among thresholds

double h_comparison_tolerance(double h_star) { return 1e-12 * (1.0 + std::fabs(h_star)); }

ThresholdOptimality check_threshold_optimality(const ThresholdFunction& tf, double p_star) {
  const double hs = tf.value(p_star);
  const double tol = h_comparison_tolerance(hs);
  const double near = 1e-6 * (1.0 + std::fabs(p_star));
  const auto ps = tf.grid();
  const auto hv = tf.values();

  ThresholdOptimality out;
  out.weak.tolerance = tol;
  out.strict.tolerance = tol;

  double worst_left = 0.0;
  double weakest_margin = kInf;
  std::optional<double> strict_witness;
  double prev = hs;
  double worst_right = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double p = ps[i], h = hv[i];
    if (p < p_star) {
      const double excess = h - hs;
      if (excess > tol && excess > worst_left) {
        worst_left = excess;
        out.weak.pass = false;
        out.weak.witness = p;
      }
      if (std::fabs(p - p_star) > near && hs - h <= tol && hs - h < weakest_margin) {
        weakest_margin = hs - h;
        strict_witness = p;
      }
    } else if (p > p_star) {
      const double rise = h - prev;
      if (rise > tol && rise > worst_right) {
        worst_right = rise;
        if (out.weak.pass || !out.weak.witness) {
          out.weak.pass = false;
          out.weak.witness = p;
        }
      }
      prev = h;
    }
  }
  if (!out.weak.pass) {
    out.strict.pass = false;
    out.strict.witness = out.weak.witness;
  } else if (strict_witness) {
    out.strict.pass = false;
    out.strict.witness = strict_witness;
  }
  return out;
}

double threshold_value(const ThresholdFunction& tf, double x, std::optional<double> p_star) {
  const FundamentalPair& fp = tf.pair();
  const double hx = tf.value(x);
  double sup = tf.sup_right_of(x);
  if (p_star && *p_star > x) sup = std::max(sup, tf.value(*p_star));
  return fp.psi(x).value * std::max(hx, sup);
}

ContinuationSet continuation_set(const ThresholdFunction& tf, double p_star) {
  const double hs = tf.value(p_star);
  const auto ps = tf.grid();
  const auto hv = tf.values();
  ContinuationSet out;
  out.semi_interval = true;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double x = ps[i], h = hv[i];
    const double tol = h_comparison_tolerance(h);
    double sup = tf.sup_right_of(x);
    if (x < p_star) sup = std::max(sup, hs);
    const bool continuing = sup > h + tol;
    if ((x < p_star) != continuing) {
      out.semi_interval = false;
      out.witness = x;
      return out;
    }
  }
  return out;
}

SmoothPasting smooth_pasting_check(const FundamentalPair& fp, const PiecewiseFunction& g,
                                   double p_star) {
  SmoothPasting out;
  const Jet s = fp.psi(p_star);
  const double hs = g(p_star) / s.value;
  out.value_derivative_left = hs * s.d1;
  out.payoff_derivative_left = g.one_sided(p_star, Side::left, 1);
  out.payoff_derivative_right = g.one_sided(p_star, Side::right, 1);
  const double gl = out.payoff_derivative_left, gr = out.payoff_derivative_right;
  out.tolerance = 1e-6 * (1.0 + std::max(std::fabs(gl), std::fabs(gr)));
  const bool differentiable = std::fabs(gl - gr) <= 1e-12 * (1.0 + std::fabs(gl));
  const double v = out.value_derivative_left;
  if (differentiable) {
    out.kind = std::fabs(v - gr) <= out.tolerance ? SmoothPasting::Kind::smooth
                                                  : SmoothPasting::Kind::fail;
  } else {
    out.kind = (gr <= v + out.tolerance && v <= gl + out.tolerance)
                   ? SmoothPasting::Kind::one_sided_chain
                   : SmoothPasting::Kind::fail;
  }
  return out;
}

ThresholdAnalysis analyze_threshold(const ThresholdFunction& tf, const MaximizeResult& m,
                                    std::span<const double> queries) {
  ThresholdAnalysis out;
  std::optional<double> p_star;
  if (m.kind == MaximizeResult::Kind::attained_interior) p_star = m.p_star;
  out.p_star = p_star;
  for (double x : queries) out.value_at.emplace_back(x, threshold_value(tf, x, p_star));
  if (p_star) {
    out.threshold_optimality = check_threshold_optimality(tf, *p_star);
    out.continuation = continuation_set(tf, *p_star);
  }
  return out;
}

const char* to_string(MaximizeResult::Kind k) {
  return k == MaximizeResult::Kind::attained_interior ? "attained_interior" : "sup_at_boundary";
}

const char* to_string(SmoothPasting::Kind k) {
  switch (k) {
    case SmoothPasting::Kind::smooth: return "smooth";
    case SmoothPasting::Kind::one_sided_chain: return "one_sided_chain";
    case SmoothPasting::Kind::fail: return "fail";
  }
  return "?";
}

}  // namespace tstop
