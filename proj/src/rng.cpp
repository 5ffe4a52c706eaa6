#include "tstop/rng.hpp"

namespace tstop {

namespace {

constexpr int kLayers = 128;
constexpr double kR = 3.442619855899;
constexpr double kV = 9.91256303526217e-3;

ZigguratTables build() {
  ZigguratTables t{};
  double f = std::exp(-0.5 * kR * kR);
  t.x[0] = kV / f;
  t.x[1] = kR;
  t.x[kLayers] = 0.0;
  for (int i = 2; i < kLayers; ++i) {
    t.x[i] = std::sqrt(-2.0 * std::log(kV / t.x[i - 1] + f));
    f = std::exp(-0.5 * t.x[i] * t.x[i]);
  }
  for (int i = 0; i < kLayers; ++i) t.ratio[i] = t.x[i + 1] / t.x[i];
  return t;
}

}  // namespace

const ZigguratTables& ziggurat_tables() {
  static const ZigguratTables t = build();
  return t;
}

// Base layer (tail beyond R) or wedge rejection.
double StreamRng::normal_slow(const ZigguratTables& t, unsigned i, double u) {
  for (;;) {
    if (i == 0) {
      double a, b;
      do {
        a = std::log(uniform()) / kR;
        b = std::log(uniform());
      } while (-2.0 * b < a * a);
      return u < 0.0 ? a - kR : kR - a;
    }
    const double x = u * t.x[i];
    const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - x * x));
    const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - x * x));
    if (f1 + uniform() * (f0 - f1) < 1.0) return x;

    const std::uint64_t bits = next();
    i = static_cast<unsigned>(bits & 0x7f);
    u = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
    if (std::fabs(u) < t.ratio[i]) return u * t.x[i];
  }
}

}  // namespace tstop
