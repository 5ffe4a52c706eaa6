#pragma once

#include <array>
#include <functional>

namespace tstop {

using State2 = std::array<double, 2>;
using Rhs2 = std::function<State2(double x, const State2& y)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-300;
  int max_steps = 1'000'000;
};

/// Adaptive Dormand-Prince 5(4) integrator for a two-component system.
/// Works in either direction; `step_hint` carries the last accepted step
/// size between calls so consecutive segments do not restart from scratch.
class DormandPrince {
 public:
  DormandPrince(Rhs2 rhs, OdeOptions options = {});

  /// Advance y from x0 to x1. Throws NumericalError if the step size
  /// underflows, the step budget is exhausted, or the state becomes
  /// non-finite.
  State2 integrate(double x0, const State2& y0, double x1);

  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }

 private:
  Rhs2 rhs_;
  OdeOptions opt_;
  double step_hint_ = 0.0;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
};

}  // namespace tstop
