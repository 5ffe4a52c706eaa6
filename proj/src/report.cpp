#include "tstop/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "tstop/errors.hpp"
#include "tstop/freeboundary.hpp"
#include "tstop/mc.hpp"
#include "tstop/threshold.hpp"

namespace tstop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json opt_number(const std::optional<double>& v) { return v ? json_number(*v) : Json(nullptr); }

Json verdict_json(const Verdict& v) {
  return Json{{"pass", v.pass}, {"witness", opt_number(v.witness)}, {"tolerance", v.tolerance}};
}

Json certificate_json(const OptimalityCertificate& c) {
  Json j;
  j["p_star"] = c.p_star;
  j["overall"] = to_string(c.overall);
  j["certifies_optimal"] = c.certifies_optimal();
  j["witness"] = opt_number(c.witness);
  j["h_max_left"] = verdict_json(c.h_max_left);
  j["pasting_inequality"] = verdict_json(c.pasting_inequality);
  j["generator_inequality"] = verdict_json(c.generator_inequality);
  j["generator_inequality"]["tolerance_kind"] = "relative to 1 + max(|Lg|, |rho g|)";
  j["h_strict_max_left"] = verdict_json(c.h_strict_max_left);
  j["checked_up_to"] = json_number(c.r_max);
  j["caveats"] = c.caveats;
  return j;
}

Json estimate_json(const McEstimate& e) {
  return Json{{"mean", e.mean},
              {"std_error", e.std_error},
              {"n_stopped", e.n_stopped},
              {"n_truncated", e.n_truncated}};
}

Json config_json(const McConfig& c) {
  return Json{{"n_paths", c.n_paths}, {"dt", c.dt},           {"t_max", c.t_max},
              {"seed", c.seed},       {"antithetic", c.antithetic}};
}

// Pieces shared by analyze, mc and plot-data.
struct Core {
  const ProblemSpec& spec;
  FundamentalPair fp;
  GridPolicy policy;
  ThresholdFunction tf;
  LeftEndVerdict left_end;

  explicit Core(const ProblemSpec& s)
      : spec(s),
        fp(fundamental_pair(s.process, s.rho, s.analysis.x_ref)),
        policy(make_policy(s)),
        tf(fp, s.g(), make_grid(s.process, fp, s.g(), policy)),
        left_end(left_end_condition(s.process, fp, s.g())) {}

  static GridPolicy make_policy(const ProblemSpec& s) {
    GridPolicy p;
    p.points = s.analysis.grid_points;
    return p;
  }

  // V(x) including the limit of h when the sup sits at the right end.
  double value(double x, const MaximizeResult& m) const {
    if (m.kind == MaximizeResult::Kind::attained_interior) return threshold_value(tf, x, m.p_star);
    if (!m.at_left && m.unbounded) return kInf;
    double v = threshold_value(tf, x);
    if (!m.at_left) v = std::max(v, fp.psi(x).value * m.limit_estimate);
    return v;
  }
};

Json pair_json(const Core& core) {
  const FundamentalPair& fp = core.fp;
  Json j;
  j["representation"] =
      fp.representation() == Representation::closed_form ? "closed_form" : "spline_table";
  j["description"] = fp.describe();
  j["x_ref"] = fp.x_ref();
  if (auto e = fp.exponents()) j["exponents"] = Json::array({e->first, e->second});
  j["domain"] = Json::array({json_number(fp.lower()), json_number(fp.upper())});

  const auto grid = core.tf.grid();
  std::vector<double> pts;
  const std::size_t stride = std::max<std::size_t>(1, grid.size() / 100);
  for (std::size_t i = 0; i < grid.size(); i += stride)
    if (core.spec.process.contains(grid[i]) && fp.contains(grid[i])) pts.push_back(grid[i]);
  const PairDiagnostics dg = diagnose(core.spec.process, fp, pts);
  j["diagnostics"] = Json{{"points", dg.points},
                          {"max_residual_psi", dg.max_residual_psi},
                          {"max_residual_phi", dg.max_residual_phi},
                          {"residual_tolerance", 1e-6},
                          {"residuals_pass", dg.max_residual_psi <= 1e-6 && dg.max_residual_phi <= 1e-6},
                          {"min_wronskian", dg.min_wronskian},
                          {"wronskian_positive", dg.min_wronskian > 0.0},
                          {"psi_increasing_positive", dg.psi_increasing_positive},
                          {"phi_decreasing_positive", dg.phi_decreasing_positive},
                          {"psi_vanishes_at_left", dg.psi_vanishes_at_left}};
  return j;
}

Json h_table_json(const Core& core) {
  const auto ps = core.tf.grid();
  const auto hv = core.tf.values();
  double worst = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double g = core.spec.g()(ps[i]);
    const double prod = hv[i] * core.fp.psi(ps[i]).value;
    worst = std::max(worst, std::fabs(prod - g) / (1.0 + std::fabs(g)));
  }
  const auto mm = std::minmax_element(hv.begin(), hv.end());
  const ThresholdGrid& info = core.tf.grid_info();
  return Json{{"points", ps.size()},
              {"p_min", ps.front()},
              {"p_max", ps.back()},
              {"geometric", info.geometric},
              {"right_truncated", info.right_truncated},
              {"h_min", *mm.first},
              {"h_max", *mm.second},
              {"argmax_p", ps[static_cast<std::size_t>(mm.second - hv.begin())]},
              {"h_psi_equals_g_residual", worst},
              {"h_psi_equals_g_tolerance", 1e-10}};
}

Json maximize_json(const MaximizeResult& m) {
  return Json{{"kind", to_string(m.kind)},
              {"p_star", m.p_star},
              {"h_star", m.h_star},
              {"unbounded", m.unbounded},
              {"limit_estimate", json_number(m.limit_estimate)},
              {"at_left", m.at_left},
              {"truncation_radius", m.truncation_radius},
              {"doublings", m.doublings},
              {"p_tolerance", m.tolerance},
              {"caveats", m.caveats}};
}

Json conclusion_json(const MaximizeResult& m, const std::optional<OptimalityCertificate>& cert,
                     const std::optional<ThresholdOptimality>& t1, double l) {
  Json j;
  j["optimal_threshold"] = nullptr;
  if (m.kind == MaximizeResult::Kind::attained_interior) {
    const std::string p = fmt(m.p_star);
    if (cert && cert->certifies_optimal()) {
      j["optimal_threshold"] = m.p_star;
      j["kind"] = "optimal_threshold";
      std::string text = "stopping at the first time X >= " + p +
                         " is optimal over all stopping times";
      if (cert->overall == OptimalityCertificate::Overall::continuation_semi_interval)
        text += "; the continuation set is ]" + format_number(l) + ", " + p + "[";
      j["text"] = text;
    } else if (t1 && t1->weak.pass) {
      j["optimal_threshold"] = m.p_star;
      j["kind"] = "optimal_among_thresholds";
      j["text"] = "p* = " + p +
                  " is optimal among threshold rules; optimality over all stopping times "
                  "is not certified";
    } else {
      j["kind"] = "no_certified_threshold";
      j["text"] = "h attains its grid maximum at " + p +
                  " but the threshold optimality conditions fail";
    }
  } else if (m.at_left) {
    j["kind"] = "sup_at_left_end";
    j["text"] = "sup of h is approached at the left end of the grid; no interior threshold";
  } else if (m.unbounded) {
    j["kind"] = "no_solution";
    j["text"] = "no optimal stopping time exists: h(p) grows without bound as p increases, "
                "so the value is infinite";
  } else {
    j["kind"] = "no_optimal_threshold";
    j["text"] = "no finite threshold is optimal: h(p) increases towards the limit " +
                fmt(m.limit_estimate) + " as p increases";
  }
  return j;
}

// Grid spacing around the point nearest to p in `ps`.
double local_spacing(const std::vector<double>& ps, double p) {
  if (ps.size() < 2) return kInf;
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < ps.size(); ++i)
    if (ps[i] <= p && p <= ps[i + 1]) s = std::max(s, ps[i + 1] - ps[i]);
  if (s == 0.0) s = std::max(ps[1] - ps[0], ps.back() - ps[ps.size() - 2]);
  return s;
}

Json sweep_json(const Core& core, const McSpec& mc, const std::optional<double>& p_star,
                std::vector<std::pair<double, McEstimate>>* out_rows = nullptr) {
  const std::vector<double> ps = mc.sweep->points();
  const double x0 = mc.x0.front();
  auto rows = sweep_thresholds(core.spec.process, core.spec.g(), core.spec.rho, x0, ps, mc.config);
  Json j;
  j["x0"] = x0;
  j["config"] = config_json(mc.config);
  Json list = Json::array();
  std::size_t best = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Json r = estimate_json(rows[i].second);
    r["p"] = rows[i].first;
    list.push_back(r);
    if (rows[i].second.mean > rows[best].second.mean) best = i;
  }
  j["estimates"] = list;
  j["empirical_argmax"] = rows[best].first;
  if (p_star) {
    j["analytic_p_star"] = *p_star;
    const double spacing = local_spacing(ps, *p_star);
    j["within_one_spacing"] = std::fabs(rows[best].first - *p_star) <= spacing;
    j["spacing"] = spacing;
  }
  if (out_rows) *out_rows = std::move(rows);
  return j;
}

Json crosscheck_json(const Core& core, const McConfig& cfg, double x0, double p) {
  const McEstimate e =
      simulate_threshold_value(core.spec.process, core.spec.g(), core.spec.rho, x0, p, cfg);
  Json j = estimate_json(e);
  j = Json{{"x0", x0}, {"p", p}, {"estimate", j}};
  if (core.left_end == LeftEndVerdict::holds) {
    const double v = value_threshold(core.fp, core.spec.g(), x0, p, core.left_end);
    j["analytic"] = v;
    const double diff = std::fabs(e.mean - v);
    j["abs_difference"] = diff;
    j["tolerance"] = 3.0 * e.std_error;
    j["tolerance_kind"] = "3 standard errors";
    j["pass"] = diff <= 3.0 * e.std_error;
  } else {
    j["analytic"] = nullptr;
    j["pass"] = nullptr;
  }
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------

Report run_analyze(const ProblemSpec& spec) {
  Report rep;
  Json& j = rep.json;
  j["schema_version"] = 1;
  j["tool_version"] = TSTOP_VERSION;
  j["status"] = "ok";
  Json input = Json::object();
  for (const auto& [k, v] : spec.keys) input[k] = v;
  j["input"] = input;
  j["problem"] = Json{{"process", to_string(spec.process.kind)},
                      {"l", json_number(spec.process.l)},
                      {"r", json_number(spec.process.r)},
                      {"left_boundary", to_string(spec.process.left_boundary)},
                      {"rho", spec.rho},
                      {"x_ref", spec.analysis.x_ref},
                      {"grid_points", spec.analysis.grid_points}};
  Json caveats = Json::array();

  try {
    const Core core(spec);
    j["fundamental_pair"] = pair_json(core);
    j["left_end"] = Json{{"verdict", to_string(core.left_end)},
                         {"tolerance", "1e-8 (1 + |g(x_ref)/phi(x_ref)|)"}};
    if (core.left_end != LeftEndVerdict::holds)
      caveats.push_back(std::string("left-end condition ") + to_string(core.left_end) +
                        ": threshold values below p are not certified");
    j["h_table"] = h_table_json(core);

    const MaximizeResult m = maximize_h(core.tf, core.policy);
    j["maximize_h"] = maximize_json(m);
    for (const auto& c : m.caveats) caveats.push_back(c);
    if (core.tf.grid_info().right_truncated)
      caveats.push_back("sup of h to the right is taken over the grid up to " +
                        fmt(core.tf.grid().back()));

    std::optional<double> p_star;
    if (m.kind == MaximizeResult::Kind::attained_interior) p_star = m.p_star;

    std::optional<ThresholdOptimality> t1;
    std::optional<OptimalityCertificate> cert;
    if (p_star) {
      t1 = check_threshold_optimality(core.tf, *p_star);
      j["threshold_optimality"] = Json{{"weak", verdict_json(t1->weak)}, {"strict", verdict_json(t1->strict)}};
      const ContinuationSet cs = continuation_set(core.tf, *p_star);
      j["continuation_set"] = Json{{"semi_interval", cs.semi_interval},
                                   {"interval", Json::array({json_number(spec.process.l), *p_star})},
                                   {"witness", opt_number(cs.witness)},
                                   {"tolerance", "1e-12 (1 + |h(x)|)"}};
      const SmoothPasting sp = smooth_pasting_check(core.fp, spec.g(), *p_star);
      j["smooth_pasting"] = Json{{"kind", to_string(sp.kind)},
                                 {"value_derivative_left", sp.value_derivative_left},
                                 {"payoff_derivative_left", sp.payoff_derivative_left},
                                 {"payoff_derivative_right", sp.payoff_derivative_right},
                                 {"tolerance", sp.tolerance}};
      cert = certify_optimality(core.tf, core.fp, spec.g(), spec.process, spec.rho, *p_star);
      j["certificate"] = certificate_json(*cert);
      if (cert->h_max_left.pass && cert->generator_inequality.pass) {
        const MonotoneTail mt = monotone_tail_check(core.tf, *p_star);
        j["monotone_tail"] = Json{{"consistent", mt.consistent},
                                  {"witness", opt_number(mt.witness)},
                                  {"tolerance", mt.tolerance}};
        if (!mt.consistent)
          caveats.push_back("h increases right of p* although the left-maximum and generator checks pass: numerical "
                            "inconsistency near " + fmt(*mt.witness));
      }
    }
    if (spec.analysis.linear_payoff_c) {
      if (p_star) {
        const auto g = core.tf.grid();
        const OptimalityCertificate lc = certify_linear_payoff(
            spec.process, core.fp, spec.rho, *spec.analysis.linear_payoff_c, *p_star,
            std::vector<double>(g.begin(), g.end()));
        j["linear_payoff_certificate"] = certificate_json(lc);
      } else {
        caveats.push_back("linear payoff certificate skipped: no interior maximiser of h");
      }
    }

    Json values = Json::array();
    for (double x : spec.analysis.x_query) {
      values.push_back(Json{{"x", x}, {"V", json_number(core.value(x, m))}, {"g", spec.g()(x)}});
    }
    j["values"] = values;

    Json fbs = Json::array();
    for (const FBSolution& s : solve_fb(core.tf)) {
      Json f;
      f["p_star"] = s.p_star;
      f["multiplier"] = s.multiplier;
      f["stationarity_residual"] = s.stationarity_residual;
      f["stationarity_tolerance"] = s.stationarity_tolerance;
      f["value_matching_residual"] = s.value_matching_residual;
      f["value_matching_tolerance"] = 1e-9 * (1.0 + std::fabs(spec.g()(s.p_star)));
      f["U_second_left"] = s.u_second;
      f["g_second"] = opt_number(s.g_second);
      f["gap"] = opt_number(s.gap);
      f["second_order"] = to_string(s.second_order);
      f["classification_tolerance"] = s.classification_tolerance;
      const auto id = second_derivative_identity_residual(s, core.tf);
      f["second_derivative_identity_residual"] = opt_number(id);
      f["second_derivative_identity_tolerance"] =
          1e-6 * (1.0 + std::fabs(s.g_second.value_or(0.0)));
      f["ode_residual"] = fb_ode_residual(spec.process, core.fp, s);
      f["ode_tolerance"] = 1e-6;
      f["certificate"] = certificate_json(
          certify_optimality(core.tf, core.fp, spec.g(), spec.process, spec.rho, s.p_star));
      fbs.push_back(f);
    }
    j["fb_solutions"] = fbs;

    if (spec.mc) {
      for (const auto& w : mc_warnings(spec.mc->config, spec.rho)) caveats.push_back(w);
      std::vector<double> ps = spec.mc->p;
      if (ps.empty() && p_star) ps.push_back(*p_star);
      if (ps.empty())
        caveats.push_back("Monte Carlo cross-check skipped: no threshold given and no interior "
                          "maximiser of h");
      Json checks = Json::array();
      for (double x0 : spec.mc->x0)
        for (double p : ps) checks.push_back(crosscheck_json(core, spec.mc->config, x0, p));
      j["mc_crosschecks"] = Json{{"config", config_json(spec.mc->config)}, {"checks", checks}};
      if (spec.mc->sweep) j["mc_sweep"] = sweep_json(core, *spec.mc, p_star);
    }

    j["conclusion"] = conclusion_json(m, cert, t1, spec.process.l);
  } catch (const NumericalError& e) {
    j["status"] = "numerical_failure";
    caveats.push_back(std::string("numerical failure: ") + e.what());
    rep.exit_code = exit_numerical;
  } catch (const UnsupportedError& e) {
    j["status"] = "unsupported";
    caveats.push_back(std::string("unsupported configuration: ") + e.what());
    rep.exit_code = exit_validation;
  } catch (const ValidationError& e) {
    j["status"] = "validation_error";
    caveats.push_back(std::string("validation error: ") + e.what());
    rep.exit_code = exit_validation;
  } catch (const Error& e) {
    j["status"] = "numerical_failure";
    caveats.push_back(std::string("evaluation failed: ") + e.what());
    rep.exit_code = exit_numerical;
  }
  j["caveats"] = caveats;
  return rep;
}

Report run_mc(const ProblemSpec& spec, std::optional<double> x0, std::optional<double> p) {
  Report rep;
  Json& j = rep.json;
  j["schema_version"] = 1;
  j["tool_version"] = TSTOP_VERSION;
  j["status"] = "ok";
  Json input = Json::object();
  for (const auto& [k, v] : spec.keys) input[k] = v;
  j["input"] = input;
  Json caveats = Json::array();
  const McConfig cfg = spec.mc ? spec.mc->config : McConfig{};
  try {
    if (!x0) {
      if (!spec.mc) throw ValidationError("give --x or an mc.x0 entry", "mc.x0");
      x0 = spec.mc->x0.front();
    }
    if (!spec.process.contains(*x0)) throw ValidationError("outside the state interval", "x");
    const Core core(spec);
    if (!p) {
      if (spec.mc && !spec.mc->p.empty()) {
        p = spec.mc->p.front();
      } else {
        const MaximizeResult m = maximize_h(core.tf, core.policy);
        if (m.kind != MaximizeResult::Kind::attained_interior)
          throw ValidationError("no interior maximiser of h; give --p", "p");
        p = m.p_star;
      }
    }
    if (!spec.process.contains(*p)) throw ValidationError("outside the state interval", "p");
    for (const auto& w : mc_warnings(cfg, spec.rho)) caveats.push_back(w);
    j["config"] = config_json(cfg);
    j["crosscheck"] = crosscheck_json(core, cfg, *x0, *p);
  } catch (const NumericalError& e) {
    j["status"] = "numerical_failure";
    caveats.push_back(std::string("numerical failure: ") + e.what());
    rep.exit_code = exit_numerical;
  } catch (const ValidationError& e) {
    j["status"] = "validation_error";
    caveats.push_back(std::string("validation error: ") + e.what());
    rep.exit_code = exit_validation;
  } catch (const UnsupportedError& e) {
    j["status"] = "unsupported";
    caveats.push_back(std::string("unsupported configuration: ") + e.what());
    rep.exit_code = exit_validation;
  } catch (const Error& e) {
    j["status"] = "numerical_failure";
    caveats.push_back(std::string("evaluation failed: ") + e.what());
    rep.exit_code = exit_numerical;
  }
  j["caveats"] = caveats;
  return rep;
}

std::string plot_data_csv(const ProblemSpec& spec, const std::string& what) {
  if (what != "h" && what != "value" && what != "psi" && what != "mc_sweep")
    throw ValidationError("expected h, value, psi or mc_sweep", "what");
  if (what == "mc_sweep" && !(spec.mc && (spec.mc->sweep || !spec.mc->p.empty())))
    throw ValidationError("mc_sweep needs an mc block with mc.sweep.* or mc.p", "mc");

  std::ostringstream os;
  auto row = [&](std::initializer_list<double> vals) {
    bool first = true;
    for (double v : vals) {
      if (!first) os << ',';
      first = false;
      os << fmt(v);
    }
    os << '\n';
  };
  const Core core(spec);
  const auto ps = core.tf.grid();
  if (what == "h") {
    os << "p,h,h1,h2\n";
    const auto h = core.tf.values(), h1 = core.tf.first(), h2 = core.tf.second();
    for (std::size_t i = 0; i < ps.size(); ++i) row({ps[i], h[i], h1[i], h2[i]});
  } else if (what == "psi") {
    os << "x,psi,psi1,psi2,phi,phi1,phi2\n";
    for (double x : ps) {
      const Jet a = core.fp.psi(x), b = core.fp.phi(x);
      row({x, a.value, a.d1, a.d2, b.value, b.d1, b.d2});
    }
  } else if (what == "value") {
    const MaximizeResult m = maximize_h(core.tf, core.policy);
    os << "x,V,g\n";
    for (double x : ps) row({x, core.value(x, m), spec.g()(x)});
  } else {
    std::vector<double> list;
    if (spec.mc->sweep) list = spec.mc->sweep->points();
    else list = spec.mc->p;
    std::sort(list.begin(), list.end());
    const auto rows = sweep_thresholds(spec.process, spec.g(), spec.rho, spec.mc->x0.front(), list,
                                       spec.mc->config);
    os << "p,mean,std_error,n_stopped,n_truncated\n";
    for (const auto& [p, e] : rows)
      os << fmt(p) << ',' << fmt(e.mean) << ',' << fmt(e.std_error) << ',' << e.n_stopped << ','
         << e.n_truncated << '\n';
  }
  return os.str();
}

}  // namespace tstop
