#include "tstop/piecewise.hpp"

#include <algorithm>
#include <cmath>

#include "tstop/errors.hpp"

namespace tstop {

PiecewiseFunction::PiecewiseFunction(std::vector<PieceSpec> pieces) {
  if (pieces.empty()) throw ValidationError("payoff needs at least one piece", "payoff");
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    const std::string field = "payoff.piece." + std::to_string(i);
    if (!(p.lo < p.hi)) throw ValidationError("empty interval (from >= to)", field);
    if (i > 0 && p.lo != pieces[i - 1].hi)
      throw ValidationError("pieces must be contiguous: from must equal the previous to",
                            field + ".from");
  }
  pieces_.reserve(pieces.size());
  for (auto& p : pieces) {
    Expression df = differentiate(p.f);
    Expression d2f = differentiate(df);
    pieces_.push_back({p.lo, p.hi, std::move(p.f), std::move(df), std::move(d2f)});
  }
  for (std::size_t i = 1; i < pieces_.size(); ++i) knots_.push_back(pieces_[i].lo);
}

PiecewiseFunction PiecewiseFunction::single(Expression f, double lo, double hi) {
  return PiecewiseFunction({{lo, hi, std::move(f)}});
}

const PiecewiseFunction::Piece& PiecewiseFunction::piece_for(double x, Side side) const {
  if (!(x >= lower() && x <= upper()) || std::isnan(x))
    throw DomainError("argument " + std::to_string(x) + " outside payoff domain [" +
                      std::to_string(lower()) + ", " + std::to_string(upper()) + "]");
  // First piece whose right end is beyond x (or reaches it, for the left side).
  auto it = std::find_if(pieces_.begin(), pieces_.end(), [&](const Piece& p) {
    return side == Side::left ? x <= p.hi : x < p.hi;
  });
  if (it == pieces_.end()) return pieces_.back();
  return *it;
}

Jet PiecewiseFunction::jet(double x, Side side) const {
  const Piece& p = piece_for(x, side);
  return {p.f(x), p.df(x), p.d2f(x)};
}

double PiecewiseFunction::one_sided(double x0, Side side, int order) const {
  if (order < 0 || order > 2) throw DomainError("derivative order must be 0, 1 or 2");
  if (side == Side::left && x0 <= lower())
    throw DomainError("no left-hand limit at the lower end of the domain");
  if (side == Side::right && x0 >= upper())
    throw DomainError("no right-hand limit at the upper end of the domain");
  const Jet j = jet(x0, side);
  return order == 0 ? j.value : order == 1 ? j.d1 : j.d2;
}

bool PiecewiseFunction::near_knot(double x, double tol) const {
  return std::any_of(knots_.begin(), knots_.end(),
                     [&](double k) { return std::fabs(x - k) <= tol * (1.0 + std::fabs(x)); });
}

double PiecewiseFunction::max_jump(int order) const {
  double worst = 0.0;
  for (double k : knots_)
    worst = std::max(worst, std::fabs(one_sided(k, Side::left, order) -
                                      one_sided(k, Side::right, order)));
  return worst;
}

}  // namespace tstop
