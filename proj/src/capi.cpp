#include "threshold_stop.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include "tstop/errors.hpp"
#include "tstop/report.hpp"

struct tstop_problem {
  tstop::ProblemSpec spec;
};

namespace {

thread_local std::string g_last_error;

tstop_status fail(tstop_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class F>
tstop_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const tstop::NumericalError& e) {
    return fail(TSTOP_ERR_NUMERICAL, e.what());
  } catch (const tstop::Error& e) {
    return fail(TSTOP_ERR_VALIDATION, e.what());
  } catch (const std::exception& e) {
    return fail(TSTOP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TSTOP_ERR_INTERNAL, "unknown error");
  }
}

tstop_status from_exit(int code) {
  switch (code) {
    case tstop::exit_ok: return TSTOP_OK;
    case tstop::exit_numerical: return TSTOP_ERR_NUMERICAL;
    default: return TSTOP_ERR_VALIDATION;
  }
}

std::string first_caveat(const tstop::Json& j) {
  const auto& c = j["caveats"];
  return c.empty() ? std::string("failed") : c.back().get<std::string>();
}

// Rebuild after an override so the echo and the parsed fields agree.
tstop_status rebuild(tstop_problem* problem, const std::string& key, const std::string& value) {
  tstop::KeyTable keys = problem->spec.keys;
  keys[key] = value;
  problem->spec = tstop::problem_from_keys(keys);
  return TSTOP_OK;
}

}  // namespace

extern "C" {

const char* tstop_version(void) { return TSTOP_VERSION; }

const char* tstop_last_error(void) { return g_last_error.c_str(); }

tstop_status tstop_problem_load(const char* path, tstop_problem** out) {
  if (!path || !out) return fail(TSTOP_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new tstop_problem{tstop::load_problem(path)};
    return TSTOP_OK;
  });
}

tstop_status tstop_problem_parse(const char* text, tstop_problem** out) {
  if (!text || !out) return fail(TSTOP_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new tstop_problem{tstop::parse_problem(text)};
    return TSTOP_OK;
  });
}

void tstop_problem_free(tstop_problem* problem) { delete problem; }

tstop_status tstop_problem_echo(const tstop_problem* problem, char** text) {
  if (!problem || !text) return fail(TSTOP_ERR_ARGUMENT, "null argument");
  *text = dup(tstop::to_key_table(problem->spec.keys));
  return TSTOP_OK;
}

tstop_status tstop_problem_set_seed(tstop_problem* problem, uint64_t seed) {
  if (!problem) return fail(TSTOP_ERR_ARGUMENT, "null argument");
  if (!problem->spec.mc) return fail(TSTOP_ERR_ARGUMENT, "problem has no mc block");
  return guarded([&] { return rebuild(problem, "mc.seed", std::to_string(seed)); });
}

tstop_status tstop_problem_set_grid_points(tstop_problem* problem, uint64_t points) {
  if (!problem) return fail(TSTOP_ERR_ARGUMENT, "null argument");
  return guarded([&] { return rebuild(problem, "analysis.grid_points", std::to_string(points)); });
}

tstop_status tstop_analyze(const tstop_problem* problem, char** json) {
  if (!problem || !json) return fail(TSTOP_ERR_ARGUMENT, "null argument");
  *json = nullptr;
  return guarded([&] {
    const tstop::Report rep = tstop::run_analyze(problem->spec);
    *json = dup(tstop::write_json(rep.json) + "\n");
    if (rep.exit_code != tstop::exit_ok) g_last_error = first_caveat(rep.json);
    return from_exit(rep.exit_code);
  });
}

tstop_status tstop_plot_data(const tstop_problem* problem, const char* what, const char* out_path) {
  if (!problem || !what || !out_path) return fail(TSTOP_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const std::string csv = tstop::plot_data_csv(problem->spec, what);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) return fail(TSTOP_ERR_IO, std::string("cannot write '") + out_path + "'");
    out << csv;
    if (!out) return fail(TSTOP_ERR_IO, std::string("cannot write '") + out_path + "'");
    return TSTOP_OK;
  });
}

tstop_status tstop_mc(const tstop_problem* problem, const double* x0, const double* p,
                      char** json) {
  if (!problem || !json) return fail(TSTOP_ERR_ARGUMENT, "null argument");
  *json = nullptr;
  return guarded([&] {
    std::optional<double> ox, op;
    if (x0) ox = *x0;
    if (p) op = *p;
    const tstop::Report rep = tstop::run_mc(problem->spec, ox, op);
    *json = dup(tstop::write_json(rep.json) + "\n");
    if (rep.exit_code != tstop::exit_ok) g_last_error = first_caveat(rep.json);
    return from_exit(rep.exit_code);
  });
}

void tstop_string_free(char* s) { std::free(s); }

}  // extern "C"
