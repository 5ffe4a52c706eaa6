#include "tstop/interp.hpp"

#include <algorithm>
#include <string>

#include "tstop/errors.hpp"

namespace tstop {

HermiteTable::HermiteTable(std::vector<double> x, std::vector<double> y, std::vector<double> dy,
                           std::vector<double> d2y)
    : x_(std::move(x)), y_(std::move(y)), dy_(std::move(dy)), d2y_(std::move(d2y)) {
  if (x_.size() < 2 || y_.size() != x_.size() || dy_.size() != x_.size() ||
      d2y_.size() != x_.size())
    throw Error("HermiteTable: inconsistent table sizes");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1])) throw Error("HermiteTable: nodes must be strictly increasing");
}

Jet HermiteTable::operator()(double t) const {
  if (!(t >= x_.front() && t <= x_.back()))
    throw DomainError("table argument " + std::to_string(t) + " outside [" +
                      std::to_string(x_.front()) + ", " + std::to_string(x_.back()) + "]");
  auto it = std::upper_bound(x_.begin(), x_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - x_.begin());
  i = std::clamp<std::size_t>(i, 1, x_.size() - 1) - 1;

  const double h = x_[i + 1] - x_[i];
  const double s = (t - x_[i]) / h;
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;

  // Quintic Hermite basis on [0, 1] and its first two derivatives.
  const double h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
  const double h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
  const double h2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
  const double h3 = 0.5 * (s3 - 2 * s4 + s5);
  const double h4 = -4 * s3 + 7 * s4 - 3 * s5;
  const double h5 = 10 * s3 - 15 * s4 + 6 * s5;

  const double d0 = -30 * s2 + 60 * s3 - 30 * s4;
  const double d1 = 1 - 18 * s2 + 32 * s3 - 15 * s4;
  const double d2 = 0.5 * (2 * s - 9 * s2 + 12 * s3 - 5 * s4);
  const double d3 = 0.5 * (3 * s2 - 8 * s3 + 5 * s4);
  const double d4 = -12 * s2 + 28 * s3 - 15 * s4;
  const double d5 = 30 * s2 - 60 * s3 + 30 * s4;

  const double e0 = -60 * s + 180 * s2 - 120 * s3;
  const double e1 = -36 * s + 96 * s2 - 60 * s3;
  const double e2 = 0.5 * (2 - 18 * s + 36 * s2 - 20 * s3);
  const double e3 = 0.5 * (6 * s - 24 * s2 + 20 * s3);
  const double e4 = -24 * s + 84 * s2 - 60 * s3;
  const double e5 = 60 * s - 180 * s2 + 120 * s3;

  const double a0 = y_[i], a1 = h * dy_[i], a2 = h * h * d2y_[i];
  const double b0 = y_[i + 1], b1 = h * dy_[i + 1], b2 = h * h * d2y_[i + 1];

  Jet j;
  j.value = a0 * h0 + a1 * h1 + a2 * h2 + b2 * h3 + b1 * h4 + b0 * h5;
  j.d1 = (a0 * d0 + a1 * d1 + a2 * d2 + b2 * d3 + b1 * d4 + b0 * d5) / h;
  j.d2 = (a0 * e0 + a1 * e1 + a2 * e2 + b2 * e3 + b1 * e4 + b0 * e5) / (h * h);
  return j;
}

void HermiteTable::scale(double factor) {
  for (auto* v : {&y_, &dy_, &d2y_})
    for (double& e : *v) e *= factor;
}

}  // namespace tstop
