#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "threshold_stop.h"
#include <json.hpp>

namespace {

std::string spec_path(const char* name) { return std::string(TSTOP_SPEC_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(TSTOP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string tmp(const char* name) { return std::string("/tmp/tstop_test_") + name; }

}  // namespace

TEST_CASE("C API: load, analyze, free") {
  tstop_problem* p = nullptr;
  REQUIRE(tstop_problem_load(spec_path("example2.spec").c_str(), &p) == TSTOP_OK);
  char* json = nullptr;
  REQUIRE(tstop_analyze(p, &json) == TSTOP_OK);
  const auto j = nlohmann::json::parse(json);
  CHECK(j.at("status") == "ok");
  CHECK(j.at("schema_version") == 1);
  const auto& fb = j.at("fb_solutions");
  REQUIRE(fb.size() == 2);
  CHECK(fb[0].at("second_order") == "local_min");
  CHECK(fb[1].at("second_order") == "local_max");
  CHECK(fb[1].at("certificate").at("overall") == "continuation_semi_interval");
  tstop_string_free(json);

  char* echo = nullptr;
  REQUIRE(tstop_problem_echo(p, &echo) == TSTOP_OK);
  tstop_problem* q = nullptr;
  CHECK(tstop_problem_parse(echo, &q) == TSTOP_OK);
  tstop_string_free(echo);
  tstop_problem_free(q);
  tstop_problem_free(p);
}

TEST_CASE("C API: error codes") {
  tstop_problem* p = nullptr;
  CHECK(tstop_problem_load("/nonexistent.spec", &p) == TSTOP_ERR_VALIDATION);
  CHECK(std::string(tstop_last_error()).find("nonexistent") != std::string::npos);
  CHECK(tstop_problem_parse(nullptr, &p) == TSTOP_ERR_ARGUMENT);
  CHECK(tstop_problem_parse("process.kind = bogus\n", &p) == TSTOP_ERR_VALIDATION);
  CHECK(p == nullptr);

  REQUIRE(tstop_problem_load(spec_path("example1_delta3.spec").c_str(), &p) == TSTOP_OK);
  CHECK(tstop_problem_set_seed(p, 7) == TSTOP_ERR_ARGUMENT);
  CHECK(tstop_problem_set_grid_points(p, 5) == TSTOP_ERR_VALIDATION);
  CHECK(tstop_problem_set_grid_points(p, 501) == TSTOP_OK);
  CHECK(tstop_plot_data(p, "bogus", tmp("x.csv").c_str()) == TSTOP_ERR_VALIDATION);
  CHECK(tstop_plot_data(p, "h", "/nonexistent/dir/x.csv") == TSTOP_ERR_IO);
  char* json = nullptr;
  CHECK(tstop_mc(p, nullptr, nullptr, &json) == TSTOP_ERR_VALIDATION);
  tstop_problem_free(p);
}

TEST_CASE("C API: Monte Carlo with explicit point") {
  tstop_problem* p = nullptr;
  REQUIRE(tstop_problem_load(spec_path("example2.spec").c_str(), &p) == TSTOP_OK);
  const double x0 = 20, thr = 18;
  char* json = nullptr;
  REQUIRE(tstop_mc(p, &x0, &thr, &json) == TSTOP_OK);
  const auto j = nlohmann::json::parse(json);
  CHECK(j.at("crosscheck").at("estimate").at("std_error") == 0.0);
  CHECK(j.at("crosscheck").at("analytic").get<double>() == doctest::Approx(20 - 9 + 15.0 / 4 * 400));
  tstop_string_free(json);
  tstop_problem_free(p);
}

TEST_CASE("CLI exit codes and outputs") {
  CHECK(cli("") == 1);
  CHECK(cli("analyze") == 1);
  CHECK(cli("analyze /nonexistent.spec") == 2);
  CHECK(cli("plot-data " + spec_path("example2.spec") + " --what bogus --out " + tmp("a.csv")) != 0);

  const std::string r1 = tmp("r1.json"), r2 = tmp("r2.json");
  REQUIRE(cli("analyze " + spec_path("example1_delta4.spec") + " --report " + r1) == 0);
  REQUIRE(cli("analyze " + spec_path("example1_delta4.spec") + " --report " + r2) == 0);
  CHECK(slurp(r1) == slurp(r2));
  const auto j = nlohmann::json::parse(slurp(r1));
  CHECK(j.at("conclusion").at("kind") == "optimal_threshold");

  const std::string h = tmp("h.csv");
  REQUIRE(cli("plot-data " + spec_path("example2.spec") + " --what h --out " + h) == 0);
  std::ifstream in(h);
  std::string line;
  std::getline(in, line);
  CHECK(line == "p,h,h1,h2");
  double best_p = 0, best_h = -1e300;
  while (std::getline(in, line)) {
    double p, hv;
    if (std::sscanf(line.c_str(), "%lf,%lf", &p, &hv) == 2 && hv > best_h) {
      best_h = hv;
      best_p = p;
    }
  }
  CHECK(best_h == doctest::Approx(34.0 / 9).epsilon(1e-6));
  CHECK(best_p == doctest::Approx(18.0).epsilon(0.02));

  const std::string psi = tmp("psi.csv");
  REQUIRE(cli("plot-data " + spec_path("example2.spec") + " --what psi --out " + psi) == 0);
  std::ifstream pin(psi);
  std::getline(pin, line);
  CHECK(line == "x,psi,psi1,psi2,phi,phi1,phi2");
  double prev = -1;
  bool increasing = true;
  while (std::getline(pin, line)) {
    double x, v;
    std::sscanf(line.c_str(), "%lf,%lf", &x, &v);
    increasing = increasing && v > prev;
    prev = v;
  }
  CHECK(increasing);

  CHECK(cli("mc " + spec_path("example2.spec") + " --x 9 --p -1") == 2);
}
