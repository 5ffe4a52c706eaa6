#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tstop/diffusion.hpp"
#include "tstop/piecewise.hpp"

namespace tstop {

struct McConfig {
  std::uint64_t n_paths = 100000;
  double dt = 1e-3;
  double t_max = 25.0;
  std::uint64_t seed = 42;
  bool antithetic = false;
  /// Worker threads; 0 picks the hardware concurrency. Results do not
  /// depend on this value.
  unsigned workers = 0;

  /// Throws ValidationError on n_paths == 0, non-positive dt or t_max,
  /// dt > t_max/100, or an odd path count with antithetic pairs.
  void validate() const;
};

/// Human-readable warnings for a valid config (e.g. truncation bias).
std::vector<std::string> mc_warnings(const McConfig& cfg, double rho);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n_stopped = 0;
  std::uint64_t n_truncated = 0;
};

/// Euler-Maruyama estimate of E[g(X_tau) exp(-rho tau)] for tau the first
/// grid time with X >= p. Paths alive at t_max contribute
/// exp(-rho t_max) max(g(X), 0).
McEstimate simulate_threshold_value(const DiffusionSpec& d, const PiecewiseFunction& g,
                                    double rho, double x0, double p, const McConfig& cfg);

/// Same estimate for every threshold in the sorted list, each path simulated
/// once (common random numbers).
std::vector<std::pair<double, McEstimate>> sweep_thresholds(const DiffusionSpec& d,
                                                            const PiecewiseFunction& g,
                                                            double rho, double x0,
                                                            std::span<const double> p_list,
                                                            const McConfig& cfg);

}  // namespace tstop
