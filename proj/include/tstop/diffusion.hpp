#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tstop/expr.hpp"
#include "tstop/interp.hpp"
#include "tstop/piecewise.hpp"

namespace tstop {

enum class BoundaryAssertion { natural, entry_not_exit };
enum class ProcessKind { gbm, abm, general };

/// One-dimensional time-homogeneous diffusion dX = a(X)dt + sigma(X)dW on
/// the open interval ]l, r[ (either end may be infinite).
struct DiffusionSpec {
  ProcessKind kind = ProcessKind::general;
  /// gbm: alpha and sigma; abm: mu and sigma. Unused for general.
  double drift_param = 0.0;
  double vol_param = 0.0;
  Expression drift;
  Expression volatility;
  double l = 0.0;
  double r = 0.0;
  BoundaryAssertion left_boundary = BoundaryAssertion::natural;

  /// dX = alpha X dt + sigma X dW on ]0, inf[.
  static DiffusionSpec gbm(double alpha, double sigma);
  /// dX = mu dt + sigma dW on ]-inf, inf[.
  static DiffusionSpec abm(double mu, double sigma);
  static DiffusionSpec general(Expression drift, Expression volatility, double l, double r,
                               BoundaryAssertion left = BoundaryAssertion::natural);

  double drift_at(double x) const { return drift(x); }
  double volatility_at(double x) const { return volatility(x); }

  bool contains(double x) const { return x > l && x < r; }

  /// Check sigma > 0 and the local integrability proxy at sampled interior
  /// points. Throws ValidationError.
  void validate() const;
};

/// `n` points strictly inside ]l, r[, spread geometrically towards infinite
/// or finite ends. `anchor` is a representative interior point.
std::vector<double> sample_interior(double l, double r, double anchor, std::size_t n);

/// a(x) f'(x) + sigma(x)^2 f''(x) / 2. Throws DomainError outside ]l, r[.
double generator_apply(const DiffusionSpec& d, const Jet& f, double x);

/// Generator applied to a payoff, using the one-sided second derivative
/// from `side` at knots.
double generator_apply(const DiffusionSpec& d, const PiecewiseFunction& g, double x,
                       Side side = Side::right);

/// Length over which the two local exponential solutions of Lu = rho u
/// separate by a factor e, from coefficients frozen at x.
double scale_unit(const DiffusionSpec& d, double rho, double x);

enum class Representation { closed_form, spline_table };

struct ShootingOptions {
  std::size_t nodes = 2001;
  double rtol = 1e-10;
  double residual_tol = 1e-6;
  /// Extra reach of the table beyond the default threshold grid so that
  /// grid extensions by doubling stay inside it.
  int right_doublings = 9;
};

/// Increasing (psi) and decreasing (phi) positive solutions of Lu = rho u,
/// normalised so that psi(x_ref) = phi(x_ref) = 1 (up to `rescaled`).
/// Immutable and cheap to copy.
class FundamentalPair {
 public:
  Jet psi(double x) const;
  Jet phi(double x) const;

  double rho() const;
  double x_ref() const;
  Representation representation() const;
  /// Closed-form exponents (beta+, beta-) for gbm or (gamma+, gamma-) for abm.
  std::optional<std::pair<double, double>> exponents() const;

  /// Interval on which psi and phi can be evaluated.
  double lower() const;
  double upper() const;
  bool contains(double x) const { return x >= lower() && x <= upper(); }

  /// The same pair with psi multiplied by `factor` > 0.
  FundamentalPair rescaled(double factor) const;

  /// Node table for spline representations (null for closed forms).
  const HermiteTable* psi_table() const;
  const HermiteTable* phi_table() const;

  std::string describe() const;

  struct Impl;

 private:
  friend FundamentalPair fundamental_pair(const DiffusionSpec&, double, double,
                                          const ShootingOptions&);
  friend FundamentalPair shoot_fundamental_pair(const DiffusionSpec&, double, double,
                                                const ShootingOptions&);
  explicit FundamentalPair(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// Closed forms for gbm/abm, shooting for general processes. Throws
/// UnsupportedError when no positive strictly decreasing solution exists
/// and NumericalError when shooting misses its residual tolerance.
FundamentalPair fundamental_pair(const DiffusionSpec& d, double rho, double x_ref,
                                 const ShootingOptions& options = {});

/// Shooting construction regardless of `d.kind`; used to cross-check the
/// closed forms.
FundamentalPair shoot_fundamental_pair(const DiffusionSpec& d, double rho, double x_ref,
                                       const ShootingOptions& options = {});

struct PairDiagnostics {
  double max_residual_psi = 0.0;  ///< max |L psi - rho psi| / (1 + |rho psi|)
  double max_residual_phi = 0.0;
  double min_wronskian = 0.0;     ///< min psi' phi - psi phi'
  bool psi_increasing_positive = true;
  bool phi_decreasing_positive = true;
  bool psi_vanishes_at_left = true;
  std::size_t points = 0;
};

/// Evaluate the pair invariants on `points` (which must lie in the pair's
/// domain and inside ]l, r[).
PairDiagnostics diagnose(const DiffusionSpec& d, const FundamentalPair& fp,
                         const std::vector<double>& points);

enum class LeftEndVerdict { holds, fails, undetermined };

/// Decide whether g(x)/phi(x) -> 0 as x approaches l along a geometric
/// sequence of 20 points.
LeftEndVerdict left_end_condition(const DiffusionSpec& d, const FundamentalPair& fp,
                                  const PiecewiseFunction& g);

const char* to_string(LeftEndVerdict v);
const char* to_string(ProcessKind k);
const char* to_string(BoundaryAssertion b);

}  // namespace tstop
