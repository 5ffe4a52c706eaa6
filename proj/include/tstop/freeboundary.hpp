#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tstop/diffusion.hpp"
#include "tstop/threshold.hpp"

namespace tstop {

enum class SecondOrder { local_max, local_min, inconclusive };

/// Candidate solution (U, p*) of the free-boundary problem
///   LU = rho U on ]l, p*[,  U(p*-0) = g(p*),  U'(p*-0) = g'(p*),
/// with U = multiplier * psi.
struct FBSolution {
  double p_star = 0.0;
  double multiplier = 0.0;             ///< h(p*)
  double stationarity_residual = 0.0;  ///< |h'(p*)|, worst side at knots
  double stationarity_tolerance = 0.0;
  double value_matching_residual = 0.0;  ///< |U(p*-0) - g(p*)|
  double u_second = 0.0;                 ///< U''(p*-0)
  std::optional<double> g_second;        ///< g''(p*) when g is C2 there
  std::optional<double> gap;             ///< g''(p*) - U''(p*-0)
  double classification_tolerance = 0.0;
  SecondOrder second_order = SecondOrder::inconclusive;

  double U(const FundamentalPair& fp, double x) const { return multiplier * fp.psi(x).value; }
};

/// Stationary points of h on the grid: sign changes of h' (bisected) and
/// touching zeros (local minima of |h'| refined by bisection on h'' or a
/// golden-section search on |h'|). Sorted by p*.
std::vector<FBSolution> solve_fb(const ThresholdFunction& tf);

/// Compare U''(p*-0) with g''(p*). Inconclusive when g is not C2 at p* or
/// the two agree within 1e-9 (1 + max |.|).
SecondOrder classify_second_order(const FBSolution& sol, const PiecewiseFunction& g,
                                  const FundamentalPair& fp);

/// |psi(p*) h''(p*) - (g''(p*) - U''(p*-0))| from the side(s) where g'' is
/// defined; nullopt when p* is a knot with no one-sided g''.
std::optional<double> second_derivative_identity_residual(const FBSolution& sol,
                                                          const ThresholdFunction& tf);

/// max |LU - rho U| / (1 + rho |U|) at `points` points in ]l, p*[.
double fb_ode_residual(const DiffusionSpec& d, const FundamentalPair& fp, const FBSolution& sol,
                       int points = 50);

struct OptimalityCertificate {
  enum class Overall {
    optimal_all_stopping_times,
    continuation_semi_interval,
    necessary_fail,
    inconclusive
  };
  double p_star = 0.0;
  Verdict h_max_left;   ///< h(p) <= h(p*) for p < p*
  Verdict pasting_inequality;  ///< psi'(p*) g(p*) >= psi(p*) g'(p*+0)
  Verdict generator_inequality;  ///< Lg <= rho g on ]p*, r_max]
  Verdict h_strict_max_left;  ///< h(p) < h(p*) for p < p*
  Overall overall = Overall::inconclusive;
  std::optional<double> witness;  ///< first failing condition's witness
  double r_max = 0.0;             ///< right end of the checked range
  std::vector<std::string> caveats;

  /// True for both optimal_all_stopping_times and its refinement
  /// continuation_semi_interval.
  bool certifies_optimal() const {
    return overall == Overall::optimal_all_stopping_times ||
           overall == Overall::continuation_semi_interval;
  }
};

OptimalityCertificate certify_optimality(const ThresholdFunction& tf, const FundamentalPair& fp,
                                         const PiecewiseFunction& g, const DiffusionSpec& d,
                                         double rho, double p_star);

/// Certificate for g(x) = x - c using the drift directly:
///   (p - c)/psi(p) <= (p* - c)/psi(p*) for p < p*,
///   psi'(p*)(p* - c) >= psi(p*),
///   a(p) <= rho (p - c) for p > p*.
/// `grid` supplies the comparison points.
OptimalityCertificate certify_linear_payoff(const DiffusionSpec& d, const FundamentalPair& fp,
                                            double rho, double c, double p_star,
                                            const std::vector<double>& grid);

struct MonotoneTail {
  bool consistent = true;
  std::optional<double> witness;
  double tolerance = 0.0;
};

/// h must be nonincreasing on the grid right of p*.
MonotoneTail monotone_tail_check(const ThresholdFunction& tf, double p_star);

const char* to_string(SecondOrder s);
const char* to_string(OptimalityCertificate::Overall o);

}  // namespace tstop
