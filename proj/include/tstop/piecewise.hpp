#pragma once

#include <span>
#include <string>
#include <vector>

#include "tstop/expr.hpp"

namespace tstop {

enum class Side { left, right };

/// Value with first and second derivative at a point.
struct Jet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// A function given by formulas on consecutive open intervals. Interior
/// breakpoints ("knots") carry one-sided derivatives only.
class PiecewiseFunction {
 public:
  struct Piece {
    double lo;
    double hi;
    Expression f;
    Expression df;
    Expression d2f;
  };

  struct PieceSpec {
    double lo;
    double hi;
    Expression f;
  };

  /// Pieces must be contiguous, ordered and non-empty: piece i ends where
  /// piece i+1 starts. Throws ValidationError otherwise.
  explicit PiecewiseFunction(std::vector<PieceSpec> pieces);

  static PiecewiseFunction single(Expression f, double lo, double hi);

  /// Value at x. At a knot the right piece is used; the two one-sided
  /// limits coincide for continuous payoffs anyway.
  double operator()(double x) const { return jet(x, Side::right).value; }

  /// Derivatives from the piece on the requested side of x. Away from knots
  /// both sides agree. Throws DomainError outside [lower(), upper()].
  Jet jet(double x, Side side) const;

  /// Limit of the value (order 0) or derivative (order 1, 2) as the
  /// argument approaches x0 from `side`.
  double one_sided(double x0, Side side, int order) const;

  double lower() const noexcept { return pieces_.front().lo; }
  double upper() const noexcept { return pieces_.back().hi; }
  std::span<const double> knots() const noexcept { return knots_; }
  std::span<const Piece> pieces() const noexcept { return pieces_; }

  /// True when x is within `tol * (1 + |x|)` of an interior knot.
  bool near_knot(double x, double tol = 0.0) const;

  /// Largest jump of the order-`order` one-sided limits across any knot.
  double max_jump(int order) const;

 private:
  const Piece& piece_for(double x, Side side) const;

  std::vector<Piece> pieces_;
  std::vector<double> knots_;
};

}  // namespace tstop
