#pragma once

#include <optional>
#include <string>

#include "tstop/json_writer.hpp"
#include "tstop/problem.hpp"

namespace tstop {

enum ExitCode { exit_ok = 0, exit_usage = 1, exit_validation = 2, exit_numerical = 3 };

struct Report {
  Json json;
  int exit_code = exit_ok;
};

/// Full pipeline: fundamental pair, h, maximisation, threshold optimality checks,
/// free-boundary solutions, certificates and optional Monte Carlo
/// cross-checks. Numerical failures yield a partial report and exit code 3.
Report run_analyze(const ProblemSpec& spec);

/// One Monte Carlo estimate at (x0, p) with the analytic value next to it.
/// Defaults come from the spec's mc block (first x0; p* when p is unset).
Report run_mc(const ProblemSpec& spec, std::optional<double> x0, std::optional<double> p);

/// CSV text for `what` in {h, value, psi, mc_sweep}. Throws ValidationError
/// for an unknown `what` or a missing mc block.
std::string plot_data_csv(const ProblemSpec& spec, const std::string& what);

}  // namespace tstop
