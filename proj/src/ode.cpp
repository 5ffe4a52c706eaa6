#include "tstop/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tstop/errors.hpp"

namespace tstop {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b* (fifth minus fourth order weights).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

State2 axpy(const State2& y, double h, std::initializer_list<std::pair<double, const State2*>> terms) {
  State2 out = y;
  for (int i = 0; i < 2; ++i) {
    double acc = 0.0;
    for (auto& [w, k] : terms) acc += w * (*k)[i];
    out[i] += h * acc;
  }
  return out;
}

}  // namespace

DormandPrince::DormandPrince(Rhs2 rhs, OdeOptions options)
    : rhs_(std::move(rhs)), opt_(options) {}

State2 DormandPrince::integrate(double x0, const State2& y0, double x1) {
  if (x0 == x1) return y0;
  const double dir = x1 > x0 ? 1.0 : -1.0;
  const double span = std::fabs(x1 - x0);

  double h = step_hint_ > 0.0 ? std::min(step_hint_, span) : span * 0.01;
  double x = x0;
  State2 y = y0;
  State2 k1 = rhs_(x, y);
  int steps = 0;

  while (dir * (x1 - x) > 0.0) {
    if (++steps > opt_.max_steps)
      throw NumericalError("ODE step budget exhausted at x=" + std::to_string(x));
    bool last = false;
    if (h >= std::fabs(x1 - x)) {
      h = std::fabs(x1 - x);
      last = true;
    }
    const double hs = dir * h;
    const State2 k2 = rhs_(x + c2 * hs, axpy(y, hs, {{a21, &k1}}));
    const State2 k3 = rhs_(x + c3 * hs, axpy(y, hs, {{a31, &k1}, {a32, &k2}}));
    const State2 k4 = rhs_(x + c4 * hs, axpy(y, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State2 k5 =
        rhs_(x + c5 * hs, axpy(y, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State2 k6 = rhs_(
        x + hs, axpy(y, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State2 ynew =
        axpy(y, hs, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State2 k7 = rhs_(last ? x1 : x + hs, ynew);

    double err = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                             e7 * k7[i]);
      const double sc = opt_.atol + opt_.rtol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
      err = std::max(err, std::fabs(e) / sc);
    }
    if (!std::isfinite(err) || !std::isfinite(ynew[0]) || !std::isfinite(ynew[1])) {
      if (h < 1e-14 * std::max(1.0, std::fabs(x)))
        throw NumericalError("non-finite ODE state near x=" + std::to_string(x));
      h *= 0.25;
      ++rejected_;
      continue;
    }

    if (err <= 1.0) {
      x = last ? x1 : x + hs;
      y = ynew;
      k1 = k7;
      ++accepted_;
      const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
      if (!last) step_hint_ = h * grow;
      else step_hint_ = std::max(step_hint_, h);
      h *= grow;
    } else {
      ++rejected_;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (h < 1e-15 * std::max(1.0, std::fabs(x)))
        throw NumericalError("ODE step size underflow at x=" + std::to_string(x));
    }
  }
  return y;
}

}  // namespace tstop
