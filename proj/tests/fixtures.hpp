#pragma once

#include <cmath>
#include <limits>

#include "tstop/diffusion.hpp"
#include "tstop/expr.hpp"
#include "tstop/piecewise.hpp"
#include "tstop/threshold.hpp"

namespace fixtures {

inline constexpr double inf = std::numeric_limits<double>::infinity();

// GBM(0.5, 1) with rho = delta^2/2: psi = x^delta, g = (x-1)^3 + x^delta.
struct Cubic {
  double delta;
  tstop::DiffusionSpec d = tstop::DiffusionSpec::gbm(0.5, 1.0);
  double rho;
  tstop::PiecewiseFunction g;

  explicit Cubic(double delta_)
      : delta(delta_),
        rho(delta_ * delta_ / 2),
        g(tstop::PiecewiseFunction::single(
            tstop::parse("(x-1)^3 + x^" + std::to_string(delta_)), 0.0, inf)) {}

  double h(double p) const { return std::pow(p - 1, 3) * std::pow(p, -delta) + 1; }
};

// GBM(0.1, 1), rho = 1.2, psi = x^2, payoff C1 but not C2 at 2.
struct Quadratic {
  tstop::DiffusionSpec d = tstop::DiffusionSpec::gbm(0.1, 1.0);
  double rho = 1.2;
  tstop::PiecewiseFunction g{{{0.0, 2.0, tstop::parse("((x-1)^2+1)*x^2")},
                              {2.0, inf, tstop::parse("x - 9 + 15/4*x^2")}}};

  static double h(double p) {
    return p <= 2 ? (p - 1) * (p - 1) + 1 : 15.0 / 4 + 1 / p - 9 / (p * p);
  }
};

inline tstop::ThresholdFunction threshold_function(const tstop::DiffusionSpec& d, double rho,
                                                   const tstop::PiecewiseFunction& g,
                                                   double x_ref = 1.0,
                                                   std::size_t points = 2001) {
  const auto fp = tstop::fundamental_pair(d, rho, x_ref);
  tstop::GridPolicy policy;
  policy.points = points;
  return tstop::ThresholdFunction(fp, g, tstop::make_grid(d, fp, g, policy));
}

}  // namespace fixtures
