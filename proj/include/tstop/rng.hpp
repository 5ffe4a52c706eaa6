#pragma once

#include <cmath>
#include <cstdint>

namespace tstop {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Layer tables of a 128-layer ziggurat for the standard normal.
struct ZigguratTables {
  double x[129];
  double ratio[128];
};
const ZigguratTables& ziggurat_tables();

/// Counter-based stream: the state is a pure function of (seed, stream),
/// so each path draws the same numbers under any execution order.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream)
      : state_(mix64(seed + 0x9e3779b97f4a7c15ULL) ^ mix64(stream * 0xd1342543de82ef95ULL + 1)) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform on ]0, 1].
  double uniform() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal.
  double normal() { return normal(ziggurat_tables()); }

  double normal(const ZigguratTables& t) {
    const std::uint64_t bits = next();
    const unsigned i = static_cast<unsigned>(bits & 0x7f);
    const double u = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
    if (std::fabs(u) < t.ratio[i]) return u * t.x[i];
    return normal_slow(t, i, u);
  }

 private:
  double normal_slow(const ZigguratTables& t, unsigned i, double u);

  std::uint64_t state_;
};

}  // namespace tstop
