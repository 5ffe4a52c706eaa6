#include "tstop/problem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tstop/errors.hpp"
#include "tstop/threshold.hpp"

namespace tstop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return kInf;
  if (t == "-inf") return -kInf;
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || std::isnan(v))
    throw ValidationError("expected a number, got '" + t + "'", key);
  return v;
}

std::uint64_t to_unsigned(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ValidationError("expected a non-negative integer, got '" + t + "'", key);
  return v;
}

bool to_bool(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ValidationError("expected true or false, got '" + t + "'", key);
}

std::vector<double> to_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) {
    if (trim(item).empty()) throw ValidationError("empty list element", key);
    out.push_back(to_double(item, key));
  }
  if (out.empty()) throw ValidationError("expected a comma-separated list of numbers", key);
  return out;
}

Expression to_formula(const std::string& text, const std::string& key) {
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw ValidationError(e.what(), key);
  }
}

class Reader {
 public:
  explicit Reader(const KeyTable& keys) : keys_(keys) {}

  const std::string* find(const std::string& key) {
    auto it = keys_.find(key);
    if (it == keys_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }
  const std::string& need(const std::string& key) {
    const std::string* v = find(key);
    if (!v) throw ValidationError("required key is missing", key);
    return *v;
  }
  bool has(const std::string& key) const { return keys_.count(key) > 0; }
  bool has_prefix(const std::string& prefix) const {
    auto it = keys_.lower_bound(prefix);
    return it != keys_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
  }

  void reject_unknown() const {
    for (const auto& [k, v] : keys_)
      if (!used_.count(k)) throw ValidationError("unknown key", k);
  }

 private:
  const KeyTable& keys_;
  std::set<std::string> used_;
};

void flatten(const nlohmann::json& j, const std::string& prefix, KeyTable& out) {
  auto put = [&](const std::string& key, std::string value) {
    if (key.empty()) throw ValidationError("top-level JSON value must be an object");
    if (!out.emplace(key, std::move(value)).second) throw ValidationError("duplicate key", key);
  };
  auto scalar = [&](const nlohmann::json& v, const std::string& key) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
    if (v.is_number_float()) return format_number(v.get<double>());
    throw ValidationError("unsupported JSON value", key);
  };
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    if (!j.empty() && j.front().is_object()) {
      for (std::size_t i = 0; i < j.size(); ++i)
        flatten(j[i], prefix + "." + std::to_string(i + 1), out);
    } else {
      std::string joined;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) joined += ",";
        joined += scalar(j[i], prefix);
      }
      put(prefix, joined);
    }
  } else {
    put(prefix, scalar(j, prefix));
  }
}

DiffusionSpec read_process(Reader& rd) {
  const std::string kind = trim(rd.need("process.kind"));
  DiffusionSpec d;
  if (kind == "gbm" || kind == "abm") {
    const bool gbm = kind == "gbm";
    const std::string drift_key = gbm ? "process.alpha" : "process.mu";
    const double a = to_double(rd.need(drift_key), drift_key);
    const double s = to_double(rd.need("process.sigma"), "process.sigma");
    d = gbm ? DiffusionSpec::gbm(a, s) : DiffusionSpec::abm(a, s);
    for (const char* k : {"process.drift", "process.volatility"})
      if (rd.has(k)) throw ValidationError("not allowed for kind " + kind, k);
    if (const std::string* v = rd.find("process.l"))
      if (to_double(*v, "process.l") != d.l)
        throw ValidationError("fixed by the process kind", "process.l");
    if (const std::string* v = rd.find("process.r"))
      if (to_double(*v, "process.r") != d.r)
        throw ValidationError("fixed by the process kind", "process.r");
  } else if (kind == "general") {
    for (const char* k : {"process.alpha", "process.mu", "process.sigma"})
      if (rd.has(k)) throw ValidationError("not allowed for kind general", k);
    d = DiffusionSpec::general(to_formula(rd.need("process.drift"), "process.drift"),
                               to_formula(rd.need("process.volatility"), "process.volatility"),
                               to_double(rd.need("process.l"), "process.l"),
                               to_double(rd.need("process.r"), "process.r"));
  } else {
    throw ValidationError("expected gbm, abm or general, got '" + kind + "'", "process.kind");
  }
  if (const std::string* v = rd.find("process.left_boundary")) {
    const std::string b = trim(*v);
    if (b == "natural")
      d.left_boundary = BoundaryAssertion::natural;
    else if (b == "entry-not-exit" || b == "entry_not_exit")
      d.left_boundary = BoundaryAssertion::entry_not_exit;
    else
      throw ValidationError("expected natural or entry-not-exit", "process.left_boundary");
  }
  d.validate();
  return d;
}

PiecewiseFunction read_payoff(Reader& rd, const DiffusionSpec& d) {
  const bool single = rd.has("payoff.formula");
  const bool pieces = rd.has_prefix("payoff.piece.");
  if (single && pieces)
    throw ValidationError("give either payoff.formula or payoff.piece.N.*, not both", "payoff");
  if (single) {
    return PiecewiseFunction::single(to_formula(rd.need("payoff.formula"), "payoff.formula"), d.l,
                                     d.r);
  }
  if (!pieces) throw ValidationError("required key is missing", "payoff.formula");
  std::vector<PiecewiseFunction::PieceSpec> specs;
  for (int i = 1;; ++i) {
    const std::string base = "payoff.piece." + std::to_string(i);
    if (!rd.has_prefix(base + ".")) break;
    PiecewiseFunction::PieceSpec s{to_double(rd.need(base + ".from"), base + ".from"),
                                   to_double(rd.need(base + ".to"), base + ".to"),
                                   to_formula(rd.need(base + ".formula"), base + ".formula")};
    specs.push_back(std::move(s));
  }
  if (specs.empty()) throw ValidationError("pieces must be numbered from 1", "payoff.piece");
  if (specs.front().lo != d.l)
    throw ValidationError("first piece must start at the left end of the state interval",
                          "payoff.piece.1.from");
  if (specs.back().hi != d.r)
    throw ValidationError("last piece must end at the right end of the state interval",
                          "payoff.piece." + std::to_string(specs.size()) + ".to");
  return PiecewiseFunction(std::move(specs));
}

}  // namespace

std::string format_number(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<double> SweepSpec::points() const {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out[i] = log_spaced ? from * std::pow(to / from, t) : from + t * (to - from);
  }
  if (count > 1) out.back() = to;
  return out;
}

KeyTable parse_key_table(std::string_view text) {
  KeyTable out;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ValidationError("line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) throw ValidationError("duplicate key", key);
  }
  return out;
}

KeyTable flatten_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("top-level JSON value must be an object");
  KeyTable out;
  flatten(j, "", out);
  return out;
}

ProblemSpec problem_from_keys(const KeyTable& keys) {
  Reader rd(keys);
  ProblemSpec spec;
  spec.keys = keys;
  spec.process = read_process(rd);
  spec.payoff = read_payoff(rd, spec.process);

  spec.rho = to_double(rd.need("discount.rho"), "discount.rho");
  if (!(spec.rho >= 0.0) || !std::isfinite(spec.rho))
    throw ValidationError("must be finite and non-negative", "discount.rho");

  AnalysisSpec& an = spec.analysis;
  an.x_ref = spec.process.kind == ProcessKind::abm ? 0.0 : 1.0;
  if (const std::string* v = rd.find("analysis.x_ref")) an.x_ref = to_double(*v, "analysis.x_ref");
  else if (spec.process.kind == ProcessKind::general && !spec.process.contains(an.x_ref))
    throw ValidationError("required when 1 is outside the state interval", "analysis.x_ref");
  if (!spec.process.contains(an.x_ref))
    throw ValidationError("must lie inside the state interval", "analysis.x_ref");
  if (const std::string* v = rd.find("analysis.x_query")) {
    an.x_query = to_list(*v, "analysis.x_query");
    for (double x : an.x_query)
      if (!spec.process.contains(x))
        throw ValidationError("query point outside the state interval", "analysis.x_query");
  }
  an.grid_points = default_grid_points();
  if (const std::string* v = rd.find("analysis.grid_points")) {
    an.grid_points = to_unsigned(*v, "analysis.grid_points");
    if (an.grid_points < 11) throw ValidationError("must be at least 11", "analysis.grid_points");
  }
  if (const std::string* v = rd.find("analysis.linear_payoff_c"))
    an.linear_payoff_c = to_double(*v, "analysis.linear_payoff_c");

  if (rd.has_prefix("mc.")) {
    McSpec mc;
    McConfig& c = mc.config;
    if (const std::string* v = rd.find("mc.n_paths")) c.n_paths = to_unsigned(*v, "mc.n_paths");
    if (const std::string* v = rd.find("mc.dt")) c.dt = to_double(*v, "mc.dt");
    if (const std::string* v = rd.find("mc.t_max")) c.t_max = to_double(*v, "mc.t_max");
    if (const std::string* v = rd.find("mc.seed")) c.seed = to_unsigned(*v, "mc.seed");
    if (const std::string* v = rd.find("mc.antithetic")) c.antithetic = to_bool(*v, "mc.antithetic");
    if (const std::string* v = rd.find("mc.workers"))
      c.workers = static_cast<unsigned>(to_unsigned(*v, "mc.workers"));
    c.validate();
    mc.x0 = to_list(rd.need("mc.x0"), "mc.x0");
    for (double x : mc.x0)
      if (!spec.process.contains(x))
        throw ValidationError("starting point outside the state interval", "mc.x0");
    if (const std::string* v = rd.find("mc.p")) {
      mc.p = to_list(*v, "mc.p");
      for (double p : mc.p)
        if (!spec.process.contains(p))
          throw ValidationError("threshold outside the state interval", "mc.p");
    }
    if (rd.has_prefix("mc.sweep.")) {
      SweepSpec s;
      s.from = to_double(rd.need("mc.sweep.from"), "mc.sweep.from");
      s.to = to_double(rd.need("mc.sweep.to"), "mc.sweep.to");
      if (const std::string* v = rd.find("mc.sweep.count"))
        s.count = to_unsigned(*v, "mc.sweep.count");
      if (const std::string* v = rd.find("mc.sweep.spacing")) {
        const std::string sp = trim(*v);
        if (sp == "log") s.log_spaced = true;
        else if (sp != "linear") throw ValidationError("expected linear or log", "mc.sweep.spacing");
      }
      if (s.count < 1) throw ValidationError("must be positive", "mc.sweep.count");
      if (!(s.from < s.to) || !spec.process.contains(s.from) || !spec.process.contains(s.to))
        throw ValidationError("need from < to inside the state interval", "mc.sweep");
      if (s.log_spaced && !(s.from > 0.0))
        throw ValidationError("log spacing needs a positive range", "mc.sweep.from");
      mc.sweep = s;
    }
    spec.mc = std::move(mc);
  }
  rd.reject_unknown();
  return spec;
}

ProblemSpec parse_problem(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{')
    return problem_from_keys(flatten_json(text));
  return problem_from_keys(parse_key_table(text));
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open problem file '" + path + "'", "spec");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

std::string to_key_table(const KeyTable& keys) {
  std::string out;
  for (const auto& [k, v] : keys) out += k + " = " + v + "\n";
  return out;
}

}  // namespace tstop
