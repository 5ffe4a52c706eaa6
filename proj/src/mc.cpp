#include "tstop/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "tstop/errors.hpp"
#include "tstop/rng.hpp"

namespace tstop {

namespace {

constexpr std::uint64_t kBlockUnits = 4096;

struct Stats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }

  void merge(const Stats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double delta = o.mean - mean;
    const double total = na + nb;
    mean += delta * nb / total;
    m2 += o.m2 + delta * delta * na * nb / total;
    n += o.n;
  }
};

struct Block {
  std::vector<Stats> stats;
  std::vector<std::uint64_t> stopped;
};

struct Context {
  const PiecewiseFunction* g;
  std::span<const double> ps;
  double x0;
  double rho;
  double dt;
  std::uint64_t steps;
  double floor;
};

struct GbmStep {
  double a, b;
  double operator()(double x, double z) const { return x * (a + b * z); }
};

struct AbmStep {
  double a, b;
  double operator()(double x, double z) const { return x + a + b * z; }
};

struct GeneralStep {
  CompiledExpression drift, vol;
  double dt, sqdt;
  double operator()(double x, double z) const { return x + drift(x) * dt + vol(x) * sqdt * z; }
};

[[noreturn]] void non_finite(std::uint64_t path, double x) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite state on Monte Carlo path " << path << " (x = " << x << ")";
  throw NumericalError(os.str());
}

// One path; writes one contribution per threshold into `vals`.
template <class Step>
void simulate_path(const Step& step, StreamRng rng, double sign, const Context& c,
                   std::uint64_t path, double* vals, std::uint64_t* stopped) {
  const std::size_t m = c.ps.size();
  const ZigguratTables& zt = ziggurat_tables();
  double x = c.x0;
  std::size_t j = 0;
  while (j < m && x >= c.ps[j]) {
    vals[j] = (*c.g)(x);
    ++stopped[j];
    ++j;
  }
  if (j < m) {
    double next_p = c.ps[j];
    for (std::uint64_t k = 1; k <= c.steps; ++k) {
      x = step(x, sign * rng.normal(zt));
      if (x < c.floor) x = c.floor;
      if (x >= next_p) {
        if (!std::isfinite(x)) non_finite(path, x);
        const double v = (*c.g)(x) * std::exp(-c.rho * static_cast<double>(k) * c.dt);
        do {
          vals[j] = v;
          ++stopped[j];
          ++j;
        } while (j < m && x >= c.ps[j]);
        if (j == m) break;
        next_p = c.ps[j];
      }
    }
    if (j < m) {
      if (!std::isfinite(x)) non_finite(path, x);
      const double tail = std::exp(-c.rho * static_cast<double>(c.steps) * c.dt) *
                          std::max((*c.g)(x), 0.0);
      for (; j < m; ++j) vals[j] = tail;
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    if (!std::isfinite(vals[i])) non_finite(path, x);
}

template <class Step>
std::vector<McEstimate> run(const Step& step, const Context& c, const McConfig& cfg) {
  const std::size_t m = c.ps.size();
  const std::uint64_t units = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
  const std::uint64_t n_blocks = (units + kBlockUnits - 1) / kBlockUnits;
  std::vector<Block> blocks(n_blocks);

  std::atomic<std::uint64_t> next{0};
  std::mutex err_mu;
  std::exception_ptr error;
  std::uint64_t error_block = n_blocks;

  auto worker = [&] {
    std::vector<double> a(m), b(m);
    for (;;) {
      const std::uint64_t blk = next.fetch_add(1);
      if (blk >= n_blocks) return;
      Block& out = blocks[blk];
      out.stats.assign(m, Stats{});
      out.stopped.assign(m, 0);
      const std::uint64_t lo = blk * kBlockUnits, hi = std::min(units, lo + kBlockUnits);
      try {
        for (std::uint64_t u = lo; u < hi; ++u) {
          const StreamRng rng(cfg.seed, u);
          if (cfg.antithetic) {
            simulate_path(step, rng, 1.0, c, 2 * u, a.data(), out.stopped.data());
            simulate_path(step, rng, -1.0, c, 2 * u + 1, b.data(), out.stopped.data());
            for (std::size_t j = 0; j < m; ++j) out.stats[j].add(0.5 * (a[j] + b[j]));
          } else {
            simulate_path(step, rng, 1.0, c, u, a.data(), out.stopped.data());
            for (std::size_t j = 0; j < m; ++j) out.stats[j].add(a[j]);
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (blk < error_block) {
          error_block = blk;
          error = std::current_exception();
        }
        return;
      }
    }
  };

  unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(n_blocks, 1)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<Stats> total(m);
  std::vector<std::uint64_t> stopped(m, 0);
  for (const Block& blk : blocks)
    for (std::size_t j = 0; j < m; ++j) {
      total[j].merge(blk.stats[j]);
      stopped[j] += blk.stopped[j];
    }
  std::vector<McEstimate> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Stats& s = total[j];
    out[j].mean = s.mean;
    out[j].std_error =
        s.n > 1 ? std::sqrt(std::max(0.0, s.m2) / static_cast<double>(s.n - 1) / static_cast<double>(s.n))
                : 0.0;
    out[j].n_stopped = stopped[j];
    out[j].n_truncated = cfg.n_paths - stopped[j];
  }
  return out;
}

}  // namespace

void McConfig::validate() const {
  if (n_paths == 0) throw ValidationError("must be positive", "mc.n_paths");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("must be positive", "mc.dt");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ValidationError("must be positive", "mc.t_max");
  if (dt > t_max / 100.0) throw ValidationError("must not exceed t_max/100", "mc.dt");
  if (antithetic && n_paths % 2 != 0)
    throw ValidationError("must be even when antithetic pairs are used", "mc.n_paths");
}

std::vector<std::string> mc_warnings(const McConfig& cfg, double rho) {
  std::vector<std::string> out;
  const double bias = std::exp(-rho * cfg.t_max);
  if (bias > 1e-4) {
    std::ostringstream os;
    os.precision(17);
    os << "exp(-rho t_max) = " << bias << " exceeds 1e-4; truncation bias may be visible";
    out.push_back(os.str());
  }
  return out;
}

McEstimate simulate_threshold_value(const DiffusionSpec& d, const PiecewiseFunction& g,
                                    double rho, double x0, double p, const McConfig& cfg) {
  const double ps[1] = {p};
  return sweep_thresholds(d, g, rho, x0, ps, cfg).front().second;
}

std::vector<std::pair<double, McEstimate>> sweep_thresholds(const DiffusionSpec& d,
                                                            const PiecewiseFunction& g,
                                                            double rho, double x0,
                                                            std::span<const double> p_list,
                                                            const McConfig& cfg) {
  cfg.validate();
  if (!(rho >= 0.0)) throw ValidationError("must be non-negative", "discount.rho");
  if (!d.contains(x0)) throw DomainError("starting point outside the state interval");
  if (p_list.empty()) throw ValidationError("threshold list is empty", "mc.p");
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    if (!d.contains(p_list[i])) throw DomainError("threshold outside the state interval");
    if (i > 0 && p_list[i] < p_list[i - 1]) throw ValidationError("thresholds must be sorted", "mc.p");
  }

  Context c;
  c.g = &g;
  c.ps = p_list;
  c.x0 = x0;
  c.rho = rho;
  c.dt = cfg.dt;
  c.steps = static_cast<std::uint64_t>(std::llround(cfg.t_max / cfg.dt));
  c.floor = std::isfinite(d.l) ? d.l + 1e-12 * std::max(1.0, std::fabs(x0 - d.l))
                               : -std::numeric_limits<double>::infinity();

  const double sqdt = std::sqrt(cfg.dt);
  std::vector<McEstimate> est;
  switch (d.kind) {
    case ProcessKind::gbm:
      est = run(GbmStep{1.0 + d.drift_param * cfg.dt, d.vol_param * sqdt}, c, cfg);
      break;
    case ProcessKind::abm:
      est = run(AbmStep{d.drift_param * cfg.dt, d.vol_param * sqdt}, c, cfg);
      break;
    case ProcessKind::general:
      est = run(GeneralStep{CompiledExpression(d.drift), CompiledExpression(d.volatility), cfg.dt, sqdt},
                c, cfg);
      break;
  }
  std::vector<std::pair<double, McEstimate>> out;
  for (std::size_t i = 0; i < p_list.size(); ++i) out.emplace_back(p_list[i], est[i]);
  return out;
}

}  // namespace tstop
