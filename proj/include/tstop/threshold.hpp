#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tstop/diffusion.hpp"
#include "tstop/piecewise.hpp"

namespace tstop {

/// Controls the sampling of thresholds p on ]l, r[.
struct GridPolicy {
  std::size_t points = 2001;
  /// Left truncation l + left_offset * (x_ref - l) for finite l.
  double left_offset = 1e-4;
  /// Right truncation l + right_factor * (x_ref - l) when r = inf.
  double right_factor = 1e3;
  /// Half-width in scale units around x_ref for infinite ends.
  double scale_units = 40.0;
  int max_doublings = 8;
};

/// Default point count: 2001, or THRESHOLD_STOP_GRID_POINTS when set to an
/// integer >= 11.
std::size_t default_grid_points();

struct ThresholdGrid {
  std::vector<double> p;
  bool geometric = true;
  /// True when the right end of the grid is a truncation of r = inf.
  bool right_truncated = false;
  double l = 0.0;
  double x_ref = 1.0;
  /// Ratio between consecutive (p - l) for geometric grids, step otherwise.
  double spacing = 0.0;
};

/// Sample ]l, r[ per `policy`, with payoff knots inserted exactly.
ThresholdGrid make_grid(const DiffusionSpec& d, const FundamentalPair& fp,
                        const PiecewiseFunction& g, const GridPolicy& policy = {});

/// h(p) = g(p) / psi(p) with derivatives, tabulated on a threshold grid.
class ThresholdFunction {
 public:
  ThresholdFunction(FundamentalPair fp, PiecewiseFunction g, ThresholdGrid grid);

  /// Tabulated h without an underlying pair; evaluation between grid points
  /// interpolates linearly. Used to exercise the detectors directly.
  static ThresholdFunction from_table(std::vector<double> p, std::vector<double> h);

  /// h, h', h'' at p. At payoff knots the derivatives come from `side`.
  Jet h(double p, Side side = Side::right) const;
  double value(double p) const { return h(p).value; }

  std::span<const double> grid() const { return grid_.p; }
  std::span<const double> values() const { return h_; }
  std::span<const double> first() const { return h1_; }
  std::span<const double> second() const { return h2_; }
  const ThresholdGrid& grid_info() const { return grid_; }

  bool has_pair() const { return fp_.has_value(); }
  const FundamentalPair& pair() const;
  const PiecewiseFunction& payoff() const;

  /// A copy whose grid continues to `new_right` at the same density.
  ThresholdFunction extended_to(double new_right) const;

  /// sup of h over grid points strictly greater than x (-inf if none).
  double sup_right_of(double x) const;

 private:
  ThresholdFunction() = default;
  void tabulate();

  std::optional<FundamentalPair> fp_;
  std::optional<PiecewiseFunction> g_;
  ThresholdGrid grid_;
  std::vector<double> h_, h1_, h2_;
  std::vector<double> suffix_max_;  // max of h over indices > i
};

/// g(a) u1 + g(p) u2, the discounted payoff of exiting ]a, p[. Throws
/// DomainError when the determinant is below 1e-14 in magnitude.
double two_sided_value(const FundamentalPair& fp, const PiecewiseFunction& g, double x, double a,
                       double p);

/// Threshold value V_p(x) = h(p) psi(x) for x < p, g(x) otherwise. Refuses
/// (DomainError) unless the left-end condition holds.
double value_threshold(const FundamentalPair& fp, const PiecewiseFunction& g, double x, double p,
                       LeftEndVerdict left_end);

struct MaximizeResult {
  enum class Kind { attained_interior, sup_at_boundary };
  Kind kind = Kind::sup_at_boundary;
  double p_star = 0.0;        ///< interior maximiser, or the last grid point
  double h_star = 0.0;        ///< h at p_star
  bool unbounded = false;     ///< sup at boundary growing without bound
  double limit_estimate = 0.0;
  bool at_left = false;       ///< sup approached at the left truncation
  double truncation_radius = 0.0;
  int doublings = 0;
  double tolerance = 0.0;     ///< |dp| tolerance of the refinement
  std::vector<std::string> caveats;
};

/// Locate the maximiser of h: grid argmax (ties to the smaller p), golden
/// section refinement, and right-end extension by doubling when h is still
/// increasing at the truncation.
MaximizeResult maximize_h(const ThresholdFunction& tf, const GridPolicy& policy = {});

struct Verdict {
  bool pass = true;
  std::optional<double> witness;
  double tolerance = 0.0;
};

struct ThresholdOptimality {
  Verdict weak;    ///< h(p) <= h(p*) left of p*, h nonincreasing right of p*
  Verdict strict;  ///< as `weak` with strict inequality on the left
};

/// Tolerance used for the weak and strict comparisons of h values.
double h_comparison_tolerance(double h_star);

ThresholdOptimality check_threshold_optimality(const ThresholdFunction& tf, double p_star);

/// Threshold-class value V(x) = psi(x) max(h(x), sup_{p > x} h(p)) with the
/// supremum taken over the grid plus `p_star` when given.
double threshold_value(const ThresholdFunction& tf, double x,
                       std::optional<double> p_star = std::nullopt);

struct ContinuationSet {
  bool semi_interval = false;
  std::optional<double> witness;
};

/// Compare {V > g} on the grid with ]l, p*[.
ContinuationSet continuation_set(const ThresholdFunction& tf, double p_star);

struct SmoothPasting {
  enum class Kind { smooth, one_sided_chain, fail } kind = Kind::fail;
  double value_derivative_left = 0.0;  ///< V'(p*-0) = h(p*) psi'(p*)
  double payoff_derivative_left = 0.0;
  double payoff_derivative_right = 0.0;
  double tolerance = 0.0;
};

SmoothPasting smooth_pasting_check(const FundamentalPair& fp, const PiecewiseFunction& g,
                                   double p_star);

struct ThresholdAnalysis {
  std::optional<double> p_star;
  std::vector<std::pair<double, double>> value_at;
  std::optional<ThresholdOptimality> threshold_optimality;
  std::optional<ContinuationSet> continuation;
};

ThresholdAnalysis analyze_threshold(const ThresholdFunction& tf, const MaximizeResult& m,
                                    std::span<const double> queries);

const char* to_string(MaximizeResult::Kind k);
const char* to_string(SmoothPasting::Kind k);

}  // namespace tstop
