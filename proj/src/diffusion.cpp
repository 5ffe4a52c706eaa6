#include "tstop/diffusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>

#include "tstop/errors.hpp"
#include "tstop/ode.hpp"

namespace tstop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double representative_point(double l, double r) {
  const bool lf = std::isfinite(l), rf = std::isfinite(r);
  if (lf && rf) return 0.5 * (l + r);
  if (lf) return l + 1.0;
  if (rf) return r - 1.0;
  return 0.0;
}

// Roots of A z^2 + B z + C = 0 with A > 0 and C < 0, returned as (positive, negative).
std::pair<double, double> signed_roots(double A, double B, double C) {
  const double disc = B * B - 4.0 * A * C;
  const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
  double r1 = q / A, r2 = C / q;
  if (r1 < r2) std::swap(r1, r2);
  return {r1, r2};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// DiffusionSpec

DiffusionSpec DiffusionSpec::gbm(double alpha, double sigma) {
  DiffusionSpec d;
  d.kind = ProcessKind::gbm;
  d.drift_param = alpha;
  d.vol_param = sigma;
  d.drift = Expression::constant(alpha) * Expression::variable();
  d.volatility = Expression::constant(sigma) * Expression::variable();
  d.l = 0.0;
  d.r = kInf;
  d.left_boundary = BoundaryAssertion::natural;
  return d;
}

DiffusionSpec DiffusionSpec::abm(double mu, double sigma) {
  DiffusionSpec d;
  d.kind = ProcessKind::abm;
  d.drift_param = mu;
  d.vol_param = sigma;
  d.drift = Expression::constant(mu);
  d.volatility = Expression::constant(sigma);
  d.l = -kInf;
  d.r = kInf;
  d.left_boundary = BoundaryAssertion::natural;
  return d;
}

DiffusionSpec DiffusionSpec::general(Expression drift, Expression volatility, double l,
                                     double r, BoundaryAssertion left) {
  DiffusionSpec d;
  d.kind = ProcessKind::general;
  d.drift = std::move(drift);
  d.volatility = std::move(volatility);
  d.l = l;
  d.r = r;
  d.left_boundary = left;
  return d;
}

void DiffusionSpec::validate() const {
  if (std::isnan(l) || std::isnan(r) || !(l < r))
    throw ValidationError("interval must satisfy l < r", "process.interval");
  if (l == kInf || r == -kInf)
    throw ValidationError("interval ends must be l < inf and r > -inf", "process.interval");
  if (kind == ProcessKind::gbm || kind == ProcessKind::abm) {
    if (!std::isfinite(drift_param))
      throw ValidationError("drift parameter must be finite",
                            kind == ProcessKind::gbm ? "process.alpha" : "process.mu");
    if (!(vol_param > 0.0) || !std::isfinite(vol_param))
      throw ValidationError("sigma must be positive and finite", "process.sigma");
  }
  if (kind == ProcessKind::gbm && (l != 0.0 || r != kInf))
    throw ValidationError("geometric Brownian motion lives on ]0, inf[", "process.interval");
  if (kind == ProcessKind::abm && (l != -kInf || r != kInf))
    throw ValidationError("arithmetic Brownian motion lives on ]-inf, inf[",
                          "process.interval");

  const auto pts = sample_interior(l, r, representative_point(l, r), 200);
  for (double x : pts) {
    const double s = volatility_at(x);
    const double a = drift_at(x);
    if (!(s > 0.0) || !std::isfinite(s))
      throw ValidationError("volatility must be positive and finite; sigma(" + fmt(x) +
                                ") = " + fmt(s),
                            "process.volatility");
    if (!std::isfinite(a))
      throw ValidationError("drift not finite at x = " + fmt(x), "process.drift");
    const double proxy = (1.0 + std::fabs(a)) / (s * s);
    if (!std::isfinite(proxy))
      throw ValidationError("(1+|a|)/sigma^2 not finite at x = " + fmt(x), "process");
  }
}

std::vector<double> sample_interior(double l, double r, double anchor, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  const bool lf = std::isfinite(l), rf = std::isfinite(r);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n - 1);
    double x;
    if (lf && rf) {
      x = l + (r - l) * (static_cast<double>(i) + 1.0) / (static_cast<double>(n) + 1.0);
    } else if (lf) {
      x = l + (anchor - l) * std::pow(10.0, -4.0 + 8.0 * t);
    } else if (rf) {
      x = r - (r - anchor) * std::pow(10.0, 4.0 - 8.0 * t);
    } else {
      const double s = std::max(1.0, std::fabs(anchor));
      x = anchor + s * 1e3 * (2.0 * t - 1.0);
    }
    out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double generator_apply(const DiffusionSpec& d, const Jet& f, double x) {
  if (!d.contains(x))
    throw DomainError("generator argument " + fmt(x) + " outside the open state interval");
  const double s = d.volatility_at(x);
  return d.drift_at(x) * f.d1 + 0.5 * s * s * f.d2;
}

double generator_apply(const DiffusionSpec& d, const PiecewiseFunction& g, double x, Side side) {
  return generator_apply(d, g.jet(x, side), x);
}

double scale_unit(const DiffusionSpec& d, double rho, double x) {
  const double a = d.drift_at(x), s = d.volatility_at(x);
  const double gap = 2.0 * std::sqrt(a * a + 2.0 * rho * s * s) / (s * s);
  if (!(gap > 0.0) || !std::isfinite(gap)) return std::max(1.0, std::fabs(x));
  return 1.0 / gap;
}

// ---------------------------------------------------------------------------
// FundamentalPair

struct FundamentalPair::Impl {
  enum class Form { power, exponential, table } form = Form::power;
  double rho = 0.0;
  double x_ref = 1.0;
  double psi_scale = 1.0;
  double e_plus = 0.0;
  double e_minus = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  HermiteTable psi_t;
  HermiteTable phi_t;
  std::string description;
};

namespace {

Jet power_jet(double scale, double x, double x_ref, double b) {
  const double v = scale * std::pow(x / x_ref, b);
  return {v, v * b / x, v * b * (b - 1.0) / (x * x)};
}

Jet exp_jet(double scale, double x, double x_ref, double g) {
  const double v = scale * std::exp(g * (x - x_ref));
  return {v, g * v, g * g * v};
}

void check_in_domain(const FundamentalPair& fp, double x) {
  if (!(x >= fp.lower() && x <= fp.upper()))
    throw DomainError("fundamental solution argument " + fmt(x) + " outside [" +
                      fmt(fp.lower()) + ", " + fmt(fp.upper()) + "]");
}

}  // namespace

Jet FundamentalPair::psi(double x) const {
  check_in_domain(*this, x);
  const Impl& m = *impl_;
  switch (m.form) {
    case Impl::Form::power: return power_jet(m.psi_scale, x, m.x_ref, m.e_plus);
    case Impl::Form::exponential: return exp_jet(m.psi_scale, x, m.x_ref, m.e_plus);
    case Impl::Form::table: {
      Jet j = m.psi_t(x);
      j.value *= m.psi_scale;
      j.d1 *= m.psi_scale;
      j.d2 *= m.psi_scale;
      return j;
    }
  }
  return {};
}

Jet FundamentalPair::phi(double x) const {
  check_in_domain(*this, x);
  const Impl& m = *impl_;
  switch (m.form) {
    case Impl::Form::power: return power_jet(1.0, x, m.x_ref, m.e_minus);
    case Impl::Form::exponential: return exp_jet(1.0, x, m.x_ref, m.e_minus);
    case Impl::Form::table: return m.phi_t(x);
  }
  return {};
}

double FundamentalPair::rho() const { return impl_->rho; }
double FundamentalPair::x_ref() const { return impl_->x_ref; }
double FundamentalPair::lower() const { return impl_->lo; }
double FundamentalPair::upper() const { return impl_->hi; }

Representation FundamentalPair::representation() const {
  return impl_->form == Impl::Form::table ? Representation::spline_table
                                          : Representation::closed_form;
}

std::optional<std::pair<double, double>> FundamentalPair::exponents() const {
  if (impl_->form == Impl::Form::table) return std::nullopt;
  return std::make_pair(impl_->e_plus, impl_->e_minus);
}

FundamentalPair FundamentalPair::rescaled(double factor) const {
  if (!(factor > 0.0)) throw DomainError("psi rescaling factor must be positive");
  auto copy = std::make_shared<Impl>(*impl_);
  copy->psi_scale *= factor;
  return FundamentalPair(std::move(copy));
}

const HermiteTable* FundamentalPair::psi_table() const {
  return impl_->form == Impl::Form::table ? &impl_->psi_t : nullptr;
}
const HermiteTable* FundamentalPair::phi_table() const {
  return impl_->form == Impl::Form::table ? &impl_->phi_t : nullptr;
}

std::string FundamentalPair::describe() const { return impl_->description; }

FundamentalPair fundamental_pair(const DiffusionSpec& d, double rho, double x_ref,
                                 const ShootingOptions& options) {
  if (!(rho >= 0.0) || !std::isfinite(rho))
    throw ValidationError("discount rate must be finite and >= 0", "discount.rho");
  if (!d.contains(x_ref))
    throw ValidationError("normalisation point must lie inside ]l, r[", "analysis.x_ref");

  if (d.kind == ProcessKind::general) return shoot_fundamental_pair(d, rho, x_ref, options);

  if (rho == 0.0)
    throw UnsupportedError(
        "rho = 0: the characteristic equation has a zero root, so one fundamental solution is "
        "constant and no positive strictly monotone pair exists");

  auto impl = std::make_shared<FundamentalPair::Impl>();
  impl->rho = rho;
  impl->x_ref = x_ref;
  impl->lo = d.l;
  impl->hi = d.r;
  const double s2 = d.vol_param * d.vol_param;
  std::ostringstream desc;
  desc.precision(17);
  if (d.kind == ProcessKind::gbm) {
    // sigma^2/2 b(b-1) + alpha b - rho = 0
    auto [bp, bm] = signed_roots(0.5 * s2, d.drift_param - 0.5 * s2, -rho);
    impl->form = FundamentalPair::Impl::Form::power;
    impl->e_plus = bp;
    impl->e_minus = bm;
    desc << "psi(x) = (x/" << x_ref << ")^" << bp << ", phi(x) = (x/" << x_ref << ")^" << bm;
  } else {
    // sigma^2/2 g^2 + mu g - rho = 0
    auto [gp, gm] = signed_roots(0.5 * s2, d.drift_param, -rho);
    impl->form = FundamentalPair::Impl::Form::exponential;
    impl->e_plus = gp;
    impl->e_minus = gm;
    desc << "psi(x) = exp(" << gp << "(x-" << x_ref << ")), phi(x) = exp(" << gm << "(x-"
         << x_ref << "))";
  }
  impl->description = desc.str();
  return FundamentalPair(std::move(impl));
}

namespace {

std::shared_ptr<const FundamentalPair::Impl> shoot_from(const DiffusionSpec& d, double rho,
                                                       double x_ref,
                                                       const ShootingOptions& options,
                                                       double left_offset) {
  if (!(rho >= 0.0) || !std::isfinite(rho))
    throw ValidationError("discount rate must be finite and >= 0", "discount.rho");
  if (!d.contains(x_ref))
    throw ValidationError("normalisation point must lie inside ]l, r[", "analysis.x_ref");
  if (options.nodes < 16) throw ValidationError("shooting table needs at least 16 nodes");

  const bool lf = std::isfinite(d.l), rf = std::isfinite(d.r);
  const double unit = scale_unit(d, rho, x_ref);
  const double lo = lf ? d.l + left_offset * std::min(1.0, x_ref - d.l) : x_ref - 40.0 * unit;
  double hi;
  if (rf)
    hi = d.r - 1e-7 * std::min(1.0, d.r - x_ref);
  else if (lf)
    hi = d.l + (x_ref - d.l) * 1e3 * std::ldexp(1.0, options.right_doublings);
  else
    hi = x_ref + 160.0 * unit;
  const bool geometric = lf && !rf;

  const std::size_t n = options.nodes;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    xs[i] = geometric ? d.l + (lo - d.l) * std::pow((hi - d.l) / (lo - d.l), t)
                      : lo + (hi - lo) * t;
  }
  xs.front() = lo;
  xs.back() = hi;
  {
    // Split intervals that are long against the local scale of the equation
    // (stiff drift near entrance boundaries).
    std::vector<double> fine{xs.front()};
    for (std::size_t i = 1; i < n; ++i) {
      const double a = xs[i - 1], b = xs[i];
      const double u = std::min(scale_unit(d, rho, a), scale_unit(d, rho, b));
      const double k = std::ceil((b - a) / (0.02 * u));
      const int parts = k > 1.0 ? static_cast<int>(std::min(k, 1000.0)) : 1;
      for (int j = 1; j < parts; ++j) fine.push_back(a + (b - a) * j / parts);
      fine.push_back(b);
    }
    if (fine.size() > 50 * n)
      throw NumericalError("coefficients too stiff for the shooting table");
    xs = std::move(fine);
  }
  const std::size_t m = xs.size();

  const CompiledExpression drift(d.drift), vol(d.volatility);
  auto second = [&](double x, double u, double du) {
    const double s = vol(x);
    return 2.0 * (rho * u - drift(x) * du) / (s * s);
  };
  Rhs2 rhs = [&](double x, const State2& y) -> State2 { return {y[1], second(x, y[0], y[1])}; };

  constexpr double kSeed = 1e-8;
  constexpr double kOverflow = 1e290;

  std::vector<double> pu(m), pd(m), p2(m);
  {
    DormandPrince ode(rhs, {options.rtol, 1e-300, 2'000'000});
    State2 y{kSeed, kSeed};
    pu[0] = y[0];
    pd[0] = y[1];
    p2[0] = second(xs[0], y[0], y[1]);
    for (std::size_t i = 1; i < m; ++i) {
      y = ode.integrate(xs[i - 1], y, xs[i]);
      if (!(std::fabs(y[0]) < kOverflow))
        throw NumericalError("increasing solution overflows near x = " + fmt(xs[i]) +
                             "; coefficients too stiff for the shooting table");
      pu[i] = y[0];
      pd[i] = y[1];
      p2[i] = second(xs[i], y[0], y[1]);
    }
  }
  std::vector<double> qu(m), qd(m), q2(m);
  {
    DormandPrince ode(rhs, {options.rtol, 1e-300, 2'000'000});
    State2 y{kSeed, -kSeed};
    qu[m - 1] = y[0];
    qd[m - 1] = y[1];
    q2[m - 1] = second(xs[m - 1], y[0], y[1]);
    for (std::size_t i = m - 1; i-- > 0;) {
      y = ode.integrate(xs[i + 1], y, xs[i]);
      if (!(std::fabs(y[0]) < kOverflow))
        throw NumericalError("decreasing solution overflows near x = " + fmt(xs[i]) +
                             "; coefficients too stiff for the shooting table");
      qu[i] = y[0];
      qd[i] = y[1];
      q2[i] = second(xs[i], y[0], y[1]);
    }
  }

  auto impl = std::make_shared<FundamentalPair::Impl>();
  impl->form = FundamentalPair::Impl::Form::table;
  impl->rho = rho;
  impl->x_ref = x_ref;
  impl->lo = lo;
  impl->hi = hi;
  impl->psi_t = HermiteTable(xs, std::move(pu), std::move(pd), std::move(p2));
  impl->phi_t = HermiteTable(xs, std::move(qu), std::move(qd), std::move(q2));
  const double psi_ref = impl->psi_t(x_ref).value;
  const double phi_ref = impl->phi_t(x_ref).value;
  if (!(psi_ref > 0.0) || !(phi_ref > 0.0))
    throw NumericalError("shooting produced a non-positive solution at the normalisation point");
  impl->psi_t.scale(1.0 / psi_ref);
  impl->phi_t.scale(1.0 / phi_ref);

  std::ostringstream desc;
  desc.precision(17);
  desc << "shooting table, " << m << (geometric ? " geometric" : " uniform") << " nodes on ["
       << lo << ", " << hi << "]";
  impl->description = desc.str();

  return impl;
}

}  // namespace

FundamentalPair shoot_fundamental_pair(const DiffusionSpec& d, double rho, double x_ref,
                                       const ShootingOptions& options) {
  // Entrance-type left ends make the equation very stiff next to l; move the
  // start inwards until the integration goes through.
  double left_offset = 1e-7;
  for (;;) {
    try {
      FundamentalPair fp(shoot_from(d, rho, x_ref, options, left_offset));
      // Check the invariants between nodes, where the interpolant is least accurate.
      const auto& nodes = fp.psi_table()->nodes();
      const std::size_t n = nodes.size();
      std::vector<double> probe;
      const std::size_t stride = std::max<std::size_t>(1, (n - 1) / 100);
      for (std::size_t i = 0; i + 1 < n; i += stride) probe.push_back(0.5 * (nodes[i] + nodes[i + 1]));
      const PairDiagnostics diag = diagnose(d, fp, probe);
      if (diag.max_residual_psi > options.residual_tol || diag.max_residual_phi > options.residual_tol)
        throw NumericalError("shooting residual above tolerance: psi " + fmt(diag.max_residual_psi) +
                             ", phi " + fmt(diag.max_residual_phi) + " (tolerance " +
                             fmt(options.residual_tol) + ")");
      if (!diag.psi_increasing_positive || !diag.phi_decreasing_positive)
        throw UnsupportedError(
            "shooting did not produce a positive increasing/decreasing pair on the interval; no "
            "admissible fundamental solutions for this configuration");
      return fp;
    } catch (const NumericalError&) {
      left_offset *= std::sqrt(10.0);
      if (!std::isfinite(d.l) || left_offset > 0.2) throw;
    }
  }
}

PairDiagnostics diagnose(const DiffusionSpec& d, const FundamentalPair& fp,
                         const std::vector<double>& points) {
  PairDiagnostics out;
  out.min_wronskian = kInf;
  const double rho = fp.rho();
  double prev_psi = -kInf, prev_phi = kInf;
  for (double x : points) {
    if (!d.contains(x) || !fp.contains(x)) continue;
    ++out.points;
    const Jet p = fp.psi(x), q = fp.phi(x);
    const double lp = generator_apply(d, p, x), lq = generator_apply(d, q, x);
    out.max_residual_psi =
        std::max(out.max_residual_psi, std::fabs(lp - rho * p.value) / (1.0 + std::fabs(rho * p.value)));
    out.max_residual_phi =
        std::max(out.max_residual_phi, std::fabs(lq - rho * q.value) / (1.0 + std::fabs(rho * q.value)));
    out.min_wronskian = std::min(out.min_wronskian, p.d1 * q.value - p.value * q.d1);
    if (!(p.value > 0.0) || !(p.value > prev_psi)) out.psi_increasing_positive = false;
    if (!(q.value > 0.0) || !(q.value < prev_phi)) out.phi_decreasing_positive = false;
    prev_psi = p.value;
    prev_phi = q.value;
  }

  // psi(l+0) = 0: three points approaching l, values decreasing with an
  // extrapolated limit near zero.
  std::array<double, 3> eps_pts;
  if (std::isfinite(d.l)) {
    const double span = fp.x_ref() - d.l;
    eps_pts = {d.l + span * 1e-2, d.l + span * 1e-3, d.l + span * 1e-4};
  } else {
    const double u = scale_unit(d, rho, fp.x_ref());
    eps_pts = {fp.x_ref() - 10.0 * u, fp.x_ref() - 20.0 * u, fp.x_ref() - 40.0 * u};
  }
  std::array<double, 3> v{};
  bool ok = true;
  for (int i = 0; i < 3; ++i) {
    if (!fp.contains(eps_pts[i]) || !d.contains(eps_pts[i])) {
      ok = false;
      break;
    }
    v[i] = fp.psi(eps_pts[i]).value;
  }
  if (ok) {
    ok = v[0] > v[1] && v[1] > v[2] && v[2] > 0.0;
    const double d1 = v[1] - v[0], d2 = v[2] - v[1];
    const double denom = d2 - d1;
    const double limit = denom != 0.0 ? v[2] - d2 * d2 / denom : v[2];
    const double ref = fp.psi(fp.x_ref()).value;
    ok = ok && std::fabs(limit) <= 1e-3 * ref;
  }
  out.psi_vanishes_at_left = ok;
  return out;
}

LeftEndVerdict left_end_condition(const DiffusionSpec& d, const FundamentalPair& fp,
                                  const PiecewiseFunction& g) {
  const double x_ref = fp.x_ref();
  std::vector<double> xs;
  for (int k = 1; k <= 20; ++k) {
    double x;
    if (d.l == 0.0) {
      x = std::ldexp(x_ref, -k);
    } else if (std::isfinite(d.l)) {
      const double r0 = std::min(x_ref, d.l + 1.0);
      x = d.l + (r0 - d.l) * std::ldexp(1.0, -k);
    } else {
      x = x_ref - std::ldexp(1.0, k);
    }
    xs.push_back(x);
  }

  std::vector<double> ratios;
  for (double x : xs) {
    if (!(x > d.l) || !fp.contains(x) || x < g.lower()) break;
    const double q = fp.phi(x).value;
    const double r = std::fabs(g(x) / q);
    if (!std::isfinite(r)) break;
    ratios.push_back(r);
  }
  if (ratios.size() < 5) return LeftEndVerdict::undetermined;

  const double tau = 1e-8 * (1.0 + std::fabs(g(x_ref) / fp.phi(x_ref).value));
  const auto last = std::span<const double>(ratios).last(5);
  bool nonincreasing = true, nondecreasing = true;
  for (std::size_t i = 1; i < last.size(); ++i) {
    if (last[i] > last[i - 1]) nonincreasing = false;
    if (last[i] < last[i - 1] * (1.0 - 1e-12)) nondecreasing = false;
  }
  if (nonincreasing && last.back() <= tau) return LeftEndVerdict::holds;
  if (nondecreasing && last.back() > tau) return LeftEndVerdict::fails;
  return LeftEndVerdict::undetermined;
}

const char* to_string(LeftEndVerdict v) {
  switch (v) {
    case LeftEndVerdict::holds: return "holds";
    case LeftEndVerdict::fails: return "fails";
    case LeftEndVerdict::undetermined: return "undetermined";
  }
  return "?";
}

const char* to_string(ProcessKind k) {
  switch (k) {
    case ProcessKind::gbm: return "gbm";
    case ProcessKind::abm: return "abm";
    case ProcessKind::general: return "general";
  }
  return "?";
}

const char* to_string(BoundaryAssertion b) {
  return b == BoundaryAssertion::natural ? "natural" : "entry-not-exit";
}

}  // namespace tstop
