#pragma once

#include <vector>

#include "tstop/piecewise.hpp"

namespace tstop {

/// Piecewise quintic Hermite interpolant through nodal values and first
/// and second derivatives. Reproduces polynomials of degree <= 5 exactly and
/// is C2 across nodes.
class HermiteTable {
 public:
  HermiteTable() = default;
  /// `x` strictly increasing, all vectors the same length (>= 2).
  HermiteTable(std::vector<double> x, std::vector<double> y, std::vector<double> dy,
               std::vector<double> d2y);

  /// Value and derivatives at t. Throws DomainError outside [front, back].
  Jet operator()(double t) const;

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  std::size_t size() const { return x_.size(); }

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& values() const { return y_; }
  const std::vector<double>& first() const { return dy_; }
  const std::vector<double>& second() const { return d2y_; }

  /// Multiply the interpolated function by a constant.
  void scale(double factor);

 private:
  std::vector<double> x_, y_, dy_, d2y_;
};

}  // namespace tstop
