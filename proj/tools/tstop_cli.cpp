#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "threshold_stop.h"

namespace {

struct Common {
  std::string spec;
  std::string report;
  std::optional<std::uint64_t> seed;
};

int exit_code(tstop_status s) {
  switch (s) {
    case TSTOP_OK: return 0;
    case TSTOP_ERR_VALIDATION: return 2;
    case TSTOP_ERR_NUMERICAL: return 3;
    default: return 1;
  }
}

int report_error(tstop_status s) {
  std::cerr << "tstop: " << tstop_last_error() << "\n";
  return exit_code(s);
}

// Loads the problem and applies overrides; returns an exit code on failure.
std::optional<int> load(const Common& c, tstop_problem** p) {
  tstop_status s = tstop_problem_load(c.spec.c_str(), p);
  if (s != TSTOP_OK) return report_error(s);
  if (c.seed) {
    s = tstop_problem_set_seed(*p, *c.seed);
    if (s == TSTOP_ERR_ARGUMENT) {
      std::cerr << "tstop: --seed ignored: " << tstop_last_error() << "\n";
    } else if (s != TSTOP_OK) {
      tstop_problem_free(*p);
      return report_error(s);
    }
  }
  return std::nullopt;
}

// Writes to --report when given, stdout otherwise. Returns false on I/O error.
bool emit(const Common& c, const std::string& text) {
  if (c.report.empty()) {
    std::cout << text;
    return true;
  }
  std::ofstream out(c.report, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "tstop: cannot write report '" << c.report << "'\n";
    return false;
  }
  return true;
}

int finish_json(const Common& c, tstop_status s, char* json) {
  if (json) {
    const bool ok = emit(c, json);
    tstop_string_free(json);
    if (!ok) return 1;
  }
  if (s != TSTOP_OK) return report_error(s);
  return 0;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("spec", c.spec, "Problem spec (key table or JSON)")->required();
  cmd->add_option("--report", c.report, "Write the JSON report to this path");
  cmd->add_option("--seed", c.seed, "Override mc.seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold rules for optimal stopping of one-dimensional diffusions"};
  app.set_version_flag("--version", std::string(tstop_version()));
  app.require_subcommand(1);

  Common an_opts, pd_opts, mc_opts;
  auto* analyze = app.add_subcommand("analyze", "Run the full analysis and print a JSON report");
  add_common(analyze, an_opts);

  std::string what, out_path;
  auto* plot = app.add_subcommand("plot-data", "Export CSV data for plotting");
  add_common(plot, pd_opts);
  plot->add_option("--what", what, "h, value, psi or mc_sweep")
      ->required()
      ->check(CLI::IsMember({"h", "value", "psi", "mc_sweep"}));
  plot->add_option("--out", out_path, "CSV output path")->required();

  std::optional<double> x0, p;
  auto* mc = app.add_subcommand("mc", "Monte Carlo estimate of a threshold value");
  add_common(mc, mc_opts);
  mc->add_option("--x", x0, "Starting point (default: first mc.x0)");
  mc->add_option("--p", p, "Threshold (default: first mc.p, else the optimal threshold)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  tstop_problem* problem = nullptr;
  if (*analyze) {
    if (auto rc = load(an_opts, &problem)) return *rc;
    char* json = nullptr;
    const tstop_status s = tstop_analyze(problem, &json);
    tstop_problem_free(problem);
    return finish_json(an_opts, s, json);
  }
  if (*plot) {
    if (auto rc = load(pd_opts, &problem)) return *rc;
    const tstop_status s = tstop_plot_data(problem, what.c_str(), out_path.c_str());
    tstop_problem_free(problem);
    if (!pd_opts.report.empty()) {
      nlohmann::ordered_json j{{"schema_version", 1},
                               {"tool_version", tstop_version()},
                               {"status", s == TSTOP_OK ? "ok" : "error"},
                               {"what", what},
                               {"out", out_path}};
      if (s != TSTOP_OK) j["error"] = tstop_last_error();
      const std::string text = j.dump(2) + "\n";
      if (!emit(pd_opts, text)) return 1;
    }
    if (s != TSTOP_OK) return report_error(s);
    return 0;
  }
  if (auto rc = load(mc_opts, &problem)) return *rc;
  char* json = nullptr;
  const double* px = x0 ? &*x0 : nullptr;
  const double* pp = p ? &*p : nullptr;
  const tstop_status s = tstop_mc(problem, px, pp, &json);
  tstop_problem_free(problem);
  return finish_json(mc_opts, s, json);
}
