#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tstop/diffusion.hpp"
#include "tstop/mc.hpp"
#include "tstop/piecewise.hpp"

namespace tstop {

using KeyTable = std::map<std::string, std::string>;

struct SweepSpec {
  double from = 0.0;
  double to = 0.0;
  std::size_t count = 21;
  bool log_spaced = false;

  std::vector<double> points() const;
};

struct McSpec {
  McConfig config;
  std::vector<double> x0;
  /// Thresholds to check; empty means "the optimal threshold when found".
  std::vector<double> p;
  std::optional<SweepSpec> sweep;
};

struct AnalysisSpec {
  double x_ref = 1.0;
  std::vector<double> x_query;
  std::size_t grid_points = 2001;
  std::optional<double> linear_payoff_c;
};

/// A validated problem: process, payoff, discount and run options.
struct ProblemSpec {
  DiffusionSpec process;
  std::optional<PiecewiseFunction> payoff;
  double rho = 0.0;
  AnalysisSpec analysis;
  std::optional<McSpec> mc;
  /// The dotted keys the problem was built from (input echo).
  KeyTable keys;

  const PiecewiseFunction& g() const { return *payoff; }
};

/// `key = value` lines; '#' starts a comment. Duplicate keys are an error.
KeyTable parse_key_table(std::string_view text);

/// Nested JSON objects flattened to dotted keys. Arrays of scalars become
/// comma-separated lists; arrays of objects are numbered from 1.
KeyTable flatten_json(std::string_view text);

/// Build and validate. Throws ValidationError (with the key path) or
/// ParseError from formulas.
ProblemSpec problem_from_keys(const KeyTable& keys);

/// Key table or JSON (detected by a leading '{').
ProblemSpec parse_problem(std::string_view text);

/// Read a file; throws ValidationError when it cannot be opened.
ProblemSpec load_problem(const std::string& path);

/// Text form of the keys, loadable by parse_problem.
std::string to_key_table(const KeyTable& keys);

/// Shortest round-trip text for a double, "inf"/"-inf" for infinities.
std::string format_number(double v);

}  // namespace tstop
