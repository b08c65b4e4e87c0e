#pragma once

#include "igac/scenarios.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace igac {

using json = nlohmann::json;

struct ConfigIssue {
  std::string path;
  std::string message;
};

struct ConfigError : Error {
  explicit ConfigError(std::vector<ConfigIssue> list) : Error(summarize(list)), issues(std::move(list)) {}
  ConfigError(const std::string& path, const std::string& message) : ConfigError(std::vector<ConfigIssue>{{path, message}}) {}
  std::vector<ConfigIssue> issues;

  static std::string summarize(const std::vector<ConfigIssue>& list) {
    std::string s = "invalid configuration:";
    for (const auto& i : list) s += "\n  " + i.path + ": " + i.message;
    return s;
  }
};

struct OutputSpec {
  std::string directory = "out";
  bool csv = true;
  bool json = true;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"uncorrelated_gaussian", "macro_correlated", "iho",        "spin_chain",
                                                 "wavepacket",            "custom_manifold",  "mre_update"};
  return names;
}

struct ScenarioConfig {
  std::string scenario;
  json parameters = json::object();
  Numerics numerics;
  OutputSpec output;
  std::optional<CustomConfig> custom;  // set for custom_manifold
  std::optional<MrEProblem> mre;       // set for mre_update
  std::function<ScenarioReport(const Numerics&)> job;

  ScenarioReport run() const { return job(numerics); }
};

namespace detail {

// typed field access that records every problem instead of stopping at the first
class Fields {
 public:
  Fields(const json& obj, std::string path, std::vector<ConfigIssue>& issues)
      : obj_(obj), path_(std::move(path)), issues_(issues) {}

  std::string at(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  void fail(const std::string& k, const std::string& msg) { issues_.push_back({at(k), msg}); }
  bool has(const std::string& k) {
    seen_.insert(k);
    return obj_.contains(k);
  }
  const json& raw(const std::string& k) const { return obj_.at(k); }

  double num(const std::string& k, double def, const std::function<bool(double)>& ok, const std::string& range,
             bool required = false) {
    if (!has(k)) {
      if (required) fail(k, "missing required key");
      return def;
    }
    const json& v = obj_.at(k);
    if (!v.is_number()) {
      fail(k, "expected a number");
      return def;
    }
    double x = v.get<double>();
    if (!std::isfinite(x) || (ok && !ok(x))) {
      fail(k, "out of range: expected " + range);
      return def;
    }
    return x;
  }

  int integer(const std::string& k, int def, int lo, int hi, bool required = false) {
    if (!has(k)) {
      if (required) fail(k, "missing required key");
      return def;
    }
    const json& v = obj_.at(k);
    if (!v.is_number_integer()) {
      fail(k, "expected an integer");
      return def;
    }
    long long x = v.get<long long>();
    if (x < lo || x > hi) {
      fail(k, "out of range: expected " + std::to_string(lo) + " <= value <= " + std::to_string(hi));
      return def;
    }
    return static_cast<int>(x);
  }

  std::vector<double> nums(const std::string& k, std::vector<double> def, const std::function<bool(double)>& ok,
                           const std::string& range, bool required = false, bool allow_scalar = false) {
    if (!has(k)) {
      if (required) fail(k, "missing required key");
      return def;
    }
    const json& v = obj_.at(k);
    std::vector<double> out;
    if (allow_scalar && v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_array() && !v.empty()) {
      for (size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
          issues_.push_back({at(k) + "[" + std::to_string(i) + "]", "expected a number"});
          return def;
        }
        out.push_back(v[i].get<double>());
      }
    } else {
      fail(k, allow_scalar ? "expected a number or a non-empty array of numbers" : "expected a non-empty array of numbers");
      return def;
    }
    for (size_t i = 0; i < out.size(); ++i)
      if (!std::isfinite(out[i]) || (ok && !ok(out[i]))) {
        issues_.push_back({at(k) + (v.is_array() ? "[" + std::to_string(i) + "]" : ""), "out of range: expected " + range});
        return def;
      }
    return out;
  }

  std::string str(const std::string& k, std::string def, const std::vector<std::string>& allowed, bool required = false) {
    if (!has(k)) {
      if (required) fail(k, "missing required key");
      return def;
    }
    const json& v = obj_.at(k);
    if (!v.is_string()) {
      fail(k, "expected a string");
      return def;
    }
    std::string s = v.get<std::string>();
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(k, "unknown value '" + s + "'; expected one of: " + list);
      return def;
    }
    return s;
  }

  void reject_unknown() {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown key");
  }

 private:
  const json& obj_;
  std::string path_;
  std::vector<ConfigIssue>& issues_;
  std::set<std::string> seen_;
};

inline const auto kPositive = [](double x) { return x > 0; };
inline const auto kAny = [](double) { return true; };

// (mu, sigma) pairs: every second entry is a positive scale
inline void check_pairs(Fields& f, const std::string& k, const std::vector<double>& v) {
  if (v.size() % 2 != 0) {
    f.fail(k, "expected (mu, sigma) pairs");
    return;
  }
  for (size_t i = 1; i < v.size(); i += 2)
    if (!(v[i] > 0)) {
      f.fail(k, "sigma entries must be positive");
      return;
    }
}

inline Numerics parse_numerics(const json& j, std::vector<ConfigIssue>& issues) {
  Numerics nm;
  if (!j.is_object()) {
    issues.push_back({"numerics", "expected an object"});
    return nm;
  }
  Fields f(j, "numerics", issues);
  nm.ode_tol = f.num("ode_tol", nm.ode_tol, kPositive, "a positive tolerance");
  nm.quad_tol = f.num("quad_tol", nm.quad_tol, kPositive, "a positive tolerance");
  nm.fit_window_fraction =
      f.num("fit_window_fraction", nm.fit_window_fraction, [](double x) { return x >= 0 && x < 1; }, "[0, 1)");
  nm.samples = f.integer("samples", nm.samples, 32, 100000);
  if (f.has("seed")) {
    const json& s = f.raw("seed");
    if (s.is_number_unsigned())
      nm.seed = s.get<std::uint64_t>();
    else
      f.fail("seed", "expected a 64-bit unsigned integer");
  }
  f.reject_unknown();
  return nm;
}

inline OutputSpec parse_output(const json& j, std::vector<ConfigIssue>& issues) {
  OutputSpec out;
  if (!j.is_object()) {
    issues.push_back({"output", "expected an object"});
    return out;
  }
  Fields f(j, "output", issues);
  out.directory = f.str("directory", out.directory, {});
  if (f.has("formats")) {
    const json& v = f.raw("formats");
    if (!v.is_array() || v.empty()) {
      f.fail("formats", "expected a non-empty array drawn from csv, json");
    } else {
      out.csv = out.json = false;
      for (size_t i = 0; i < v.size(); ++i) {
        std::string s = v[i].is_string() ? v[i].get<std::string>() : "";
        if (s == "csv")
          out.csv = true;
        else if (s == "json")
          out.json = true;
        else
          issues.push_back({"output.formats[" + std::to_string(i) + "]", "expected csv or json"});
      }
    }
  }
  f.reject_unknown();
  return out;
}

inline std::optional<StatModel> parse_family(const json& j, const std::string& path, std::vector<ConfigIssue>& issues) {
  if (!j.is_object()) {
    issues.push_back({path, "expected an object"});
    return std::nullopt;
  }
  Fields f(j, path, issues);
  size_t before = issues.size();
  std::string fam = f.str("family", "", {"gaussian", "bivariate_correlated", "exponential", "wigner_dyson"}, true);
  std::vector<double> th = f.nums("theta", {}, kAny, "finite values", true);
  double r = 0;
  if (fam == "bivariate_correlated") r = f.num("r", 0, [](double x) { return x > -1 && x < 1; }, "(-1, 1)", true);
  f.reject_unknown();
  if (issues.size() != before) return std::nullopt;
  auto count = [&](size_t n) {
    if (th.size() != n) {
      f.fail("theta", "expected " + std::to_string(n) + " entries for " + fam);
      return false;
    }
    return true;
  };
  if (fam == "gaussian") {
    check_pairs(f, "theta", th);
    if (issues.size() != before) return std::nullopt;
    return StatModel::gaussian_diag(th);
  }
  if (fam == "bivariate_correlated") {
    if (!count(3)) return std::nullopt;
    if (!(th[2] > 0)) {
      f.fail("theta", "sigma must be positive");
      return std::nullopt;
    }
    return StatModel::gaussian_bivariate_corr(th[0], th[1], th[2], r);
  }
  if (!count(1)) return std::nullopt;
  if (!(th[0] > 0)) {
    f.fail("theta", "mean must be positive");
    return std::nullopt;
  }
  return fam == "exponential" ? StatModel::exponential(th[0]) : StatModel::wigner_dyson(th[0]);
}

inline std::optional<Prior> parse_prior(const json& j, const std::string& path, std::vector<ConfigIssue>& issues) {
  if (!j.is_object()) {
    issues.push_back({path, "expected an object"});
    return std::nullopt;
  }
  Fields f(j, path, issues);
  size_t before = issues.size();
  std::string kind = f.str("kind", "", {"uniform", "exponential", "normal", "cauchy"}, true);
  std::optional<Prior> out;
  if (kind == "uniform") {
    double a = f.num("a", 0, kAny, "a finite value", true), b = f.num("b", 1, kAny, "a finite value", true);
    if (issues.size() == before && !(b > a)) f.fail("b", "out of range: expected b > a");
    if (issues.size() == before) out = Prior::uniform(a, b);
  } else if (kind == "exponential") {
    double m = f.num("mean", 1, kPositive, "a positive mean", true);
    if (issues.size() == before) out = Prior::exponential(m);
  } else if (kind == "normal") {
    double m = f.num("mu", 0, kAny, "a finite value", true), s = f.num("sigma", 1, kPositive, "a positive scale", true);
    if (issues.size() == before) out = Prior::normal(m, s);
  } else if (kind == "cauchy") {
    double m = f.num("x0", 0, kAny, "a finite value", true), s = f.num("gamma", 1, kPositive, "a positive scale", true);
    if (issues.size() == before) out = Prior::cauchy(m, s);
  }
  f.reject_unknown();
  return issues.size() == before ? out : std::nullopt;
}

inline std::optional<Constraint> parse_constraint(const json& j, const std::string& path,
                                                  std::vector<ConfigIssue>& issues) {
  if (!j.is_object()) {
    issues.push_back({path, "expected an object"});
    return std::nullopt;
  }
  Fields f(j, path, issues);
  size_t before = issues.size();
  std::string kind = f.str("kind", "", {"identity", "square", "absolute", "polynomial"}, true);
  double target = f.num("target", 0, kAny, "a finite value", true);
  std::vector<double> coeffs;
  if (kind == "polynomial") coeffs = f.nums("coeffs", {}, kAny, "finite values", true);
  f.reject_unknown();
  if (issues.size() != before) return std::nullopt;
  if (kind == "identity") return Constraint::identity(target);
  if (kind == "square") return Constraint::square(target);
  if (kind == "absolute") return Constraint::absolute(target);
  return Constraint::polynomial(coeffs, target);
}

inline void parse_parameters(ScenarioConfig& cfg, std::vector<ConfigIssue>& issues) {
  const json& p = cfg.parameters;
  if (!p.is_object()) {
    issues.push_back({"parameters", "expected an object"});
    return;
  }
  Fields f(p, "parameters", issues);
  size_t before = issues.size();
  auto open_unit = [](double x) { return x > 0 && x < 1; };
  const std::string& s = cfg.scenario;

  if (s == "uncorrelated_gaussian") {
    UncorrelatedConfig c;
    c.l = f.integer("l", 1, 1, 16, true);
    c.theta0 = f.nums("theta0", {}, kAny, "finite values");
    c.v0 = f.nums("v0", {}, kAny, "finite values");
    c.tau_end = f.num("tau_end", c.tau_end, kPositive, "a positive value");
    if (!c.theta0.empty()) check_pairs(f, "theta0", c.theta0);
    if (!c.theta0.empty() && !c.v0.empty() && c.theta0.size() != c.v0.size()) f.fail("v0", "size must match theta0");
    cfg.job = [c](const Numerics& nm) { return run_uncorrelated_gaussian(c, nm); };
  } else if (s == "macro_correlated") {
    MacroConfig c;
    c.r = f.nums("r", {}, open_unit, "(0, 1)", true, true);
    c.theta0 = f.nums("theta0", {}, kAny, "finite values");
    c.v0 = f.nums("v0", {}, kAny, "finite values");
    c.tau_end = f.num("tau_end", c.tau_end, kPositive, "a positive value");
    if (!c.theta0.empty()) check_pairs(f, "theta0", c.theta0);
    cfg.job = [c](const Numerics& nm) { return run_macro_correlated(c, nm); };
  } else if (s == "iho") {
    IHOConfig c;
    c.omega = f.nums("omega", {}, kPositive, "positive frequencies");
    c.l = f.integer("l", c.omega.empty() ? 2 : static_cast<int>(c.omega.size()), 1, 3, c.omega.empty());
    if (!c.omega.empty() && p.contains("l") && static_cast<size_t>(c.l) != c.omega.size())
      f.fail("l", "must equal the number of frequencies");
    c.Omega = f.num("Omega", c.Omega, kPositive, "a positive value");
    c.xi = f.num("xi", c.xi, kPositive, "a positive value");
    c.Xi = f.num("Xi", c.Xi, kPositive, "a positive value");
    c.tau_end = f.num("tau_end", c.tau_end, kPositive, "a positive value");
    c.samples = f.integer("samples", c.samples, 32, 100000);
    cfg.job = [c](const Numerics& nm) { return run_iho(c, nm); };
  } else if (s == "spin_chain") {
    SpinConfig c;
    std::string reg = f.str("regime", "regular", {"regular", "chaotic"}, true);
    c.regime = reg == "chaotic" ? SpinRegime::chaotic : SpinRegime::regular;
    size_t dim = c.regime == SpinRegime::regular ? 2 : 3;
    c.theta0 = f.nums("theta0", {}, kAny, "finite values");
    c.v0 = f.nums("v0", {}, kAny, "finite values");
    if (!c.theta0.empty()) {
      bool ok = c.theta0.size() == dim && c.theta0[0] > 0 && c.theta0[dim - 1] > 0;
      if (!ok) f.fail("theta0", "expected " + std::to_string(dim) + " entries with positive scale parameters");
    }
    if (!c.v0.empty() && c.v0.size() != dim) f.fail("v0", "expected " + std::to_string(dim) + " entries");
    c.tau_end = f.num("tau_end", 0, kPositive, "a positive value");
    c.window_fraction = f.num("window_fraction", c.window_fraction, [](double x) { return x >= 0 && x < 1; }, "[0, 1)");
    cfg.job = [c](const Numerics& nm) { return run_spin_chain(c, nm); };
  } else if (s == "wavepacket") {
    WavePacketConfig c;
    c.packet.r = f.num("r", 0, [](double x) { return x >= 0 && x < 1; }, "[0, 1)", true);
    c.packet.p0 = f.num("p0", c.packet.p0, kPositive, "a positive value");
    c.packet.sigma0 = f.num("sigma0", c.packet.sigma0, kPositive, "a positive value");
    c.packet.tau0 = f.num("tau0", c.packet.tau0, kPositive, "a positive value");
    c.R0 = f.num("R0", c.R0, kPositive, "a positive value");
    c.L = f.num("L", c.L, kPositive, "a positive value");
    c.mu_mass = f.num("mu_mass", c.mu_mass, kPositive, "a positive value");
    c.horizon = f.num("horizon", c.horizon, [](double x) { return x >= 10; }, "at least 10");
    cfg.job = [c](const Numerics& nm) { return run_wavepacket(c, nm); };
  } else if (s == "custom_manifold") {
    std::vector<StatModel> parts;
    if (!f.has("families")) {
      f.fail("families", "missing required key");
    } else if (!f.raw("families").is_array() || f.raw("families").empty()) {
      f.fail("families", "expected a non-empty array");
    } else {
      const json& fams = f.raw("families");
      for (size_t i = 0; i < fams.size(); ++i)
        if (auto m = parse_family(fams[i], f.at("families") + "[" + std::to_string(i) + "]", issues))
          parts.push_back(*m);
    }
    std::string src = f.str("metric_source", "analytic", {"analytic", "quadrature"});
    std::vector<double> v0 = f.nums("v0", {}, kAny, "finite values");
    double tau_end = f.num("tau_end", 1, kPositive, "a positive value");
    if (issues.size() == before) {
      CustomConfig c{parts.size() == 1 ? parts[0] : StatModel::product(parts), src == "quadrature", v0, tau_end};
      if (!v0.empty() && static_cast<int>(v0.size()) != c.model.param_dim())
        f.fail("v0", "expected " + std::to_string(c.model.param_dim()) + " entries");
      cfg.custom = c;
      cfg.job = [c](const Numerics& nm) { return run_custom_manifold(c, nm); };
    }
  } else if (s == "mre_update") {
    std::optional<Prior> prior;
    std::vector<Constraint> cons;
    if (!f.has("prior"))
      f.fail("prior", "missing required key");
    else
      prior = parse_prior(f.raw("prior"), f.at("prior"), issues);
    if (!f.has("constraints")) {
      f.fail("constraints", "missing required key");
    } else if (!f.raw("constraints").is_array() || f.raw("constraints").empty()) {
      f.fail("constraints", "expected a non-empty array");
    } else {
      const json& cs = f.raw("constraints");
      for (size_t i = 0; i < cs.size(); ++i)
        if (auto c = parse_constraint(cs[i], f.at("constraints") + "[" + std::to_string(i) + "]", issues))
          cons.push_back(*c);
    }
    if (issues.size() == before && prior) {
      MrEProblem pb{*prior, cons};
      cfg.mre = pb;
      cfg.job = [pb](const Numerics& nm) { return run_mre_update(pb, nm); };
    }
  }
  f.reject_unknown();
}

}  // namespace detail

inline ScenarioConfig validate_config(const json& doc) {
  std::vector<ConfigIssue> issues;
  ScenarioConfig cfg;
  if (!doc.is_object()) throw ConfigError("", "configuration must be an object");
  detail::Fields top(doc, "", issues);
  cfg.scenario = top.str("scenario", "", scenario_names(), true);
  if (top.has("parameters")) cfg.parameters = doc.at("parameters");
  if (top.has("numerics")) cfg.numerics = detail::parse_numerics(doc.at("numerics"), issues);
  if (top.has("output")) cfg.output = detail::parse_output(doc.at("output"), issues);
  top.reject_unknown();
  if (!cfg.scenario.empty()) detail::parse_parameters(cfg, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

inline ScenarioConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed document: ") + e.what());
  }
  return validate_config(doc);
}

inline ScenarioConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---- emission ----

// 17 significant digits, locale independent
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string trace_csv(const NamedTrace& t) {
  const GeodesicPath& p = t.path;
  int n = p.dim();
  std::string out = "tau";
  for (int a = 0; a < n; ++a) out += ",theta_" + std::to_string(a + 1);
  out += ",speed";
  if (t.complexity) out += ",delta_v,igc,ige";
  if (t.jacobi) out += ",jacobi_intensity";
  out += '\n';
  for (size_t i = 0; i < p.size(); ++i) {
    out += format_number(p.tau[i]);
    for (int a = 0; a < n; ++a) out += "," + format_number(p.theta[i](a));
    out += "," + format_number(p.speed[i]);
    if (t.complexity) {
      out += "," + format_number(t.complexity->delta_v[i]);
      out += "," + format_number(t.complexity->igc[i]);
      out += "," + format_number(t.complexity->ige[i]);
    }
    if (t.jacobi) out += "," + format_number(t.jacobi->intensity[i]);
    out += '\n';
  }
  return out;
}

inline json number_json(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

inline json fit_json(const AsymptoticFit& f) {
  json j;
  j["form"] = form_name(f.form);
  j["params"] = json::array();
  for (double p : f.params) j["params"].push_back(number_json(p));
  j["r2"] = number_json(f.r2);
  j["tau_lo"] = f.tau_lo;
  j["tau_hi"] = f.tau_hi;
  return j;
}

inline json report_json(const ScenarioReport& rep, const std::vector<std::string>& files = {}) {
  json j;
  j["scenario"] = rep.id;
  j["pass"] = rep.passed();
  j["failures"] = rep.failures();
  j["inputs"] = json::object();
  for (const auto& [k, v] : rep.inputs) {
    if (v.size() == 1) {
      j["inputs"][k] = number_json(v[0]);
    } else {
      json a = json::array();
      for (double x : v) a.push_back(number_json(x));
      j["inputs"][k] = a;
    }
  }
  j["labels"] = json::object();
  for (const auto& [k, v] : rep.labels) j["labels"][k] = v;
  j["observables"] = json::array();
  for (const auto& o : rep.observables)
    j["observables"].push_back({{"name", o.name}, {"value", number_json(o.value)}, {"tol", o.tol}, {"oracle", o.tag}});
  j["checks"] = json::array();
  for (const auto& c : rep.checks) {
    json cj = {{"name", c.name},       {"value", number_json(c.value)}, {"oracle_value", number_json(c.oracle)},
               {"tol", c.tol},         {"oracle", c.tag},               {"gating", c.gating},
               {"pass", c.pass}};
    if (!c.note.empty()) cj["note"] = c.note;
    j["checks"].push_back(cj);
  }
  j["traces"] = json::array();
  for (const auto& t : rep.traces) {
    json tj = {{"name", t.name}, {"points", t.path.size()}};
    if (t.complexity) {
      tj["region"] = t.complexity->region;
      if (t.complexity->fit) tj["fit"] = fit_json(*t.complexity->fit);
    }
    j["traces"].push_back(tj);
  }
  j["files"] = files;
  j["notes"] = rep.notes;
  return j;
}

inline void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
  if (!out) throw Error("write failed for " + file.string());
}

// files written, relative to the output directory
inline std::vector<std::string> emit(const ScenarioReport& rep, const OutputSpec& out) {
  namespace fs = std::filesystem;
  fs::path dir(out.directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::string> files;
  if (out.csv)
    for (const auto& t : rep.traces) {
      std::string name = rep.id + "_" + t.name + ".csv";
      write_text(dir / name, trace_csv(t));
      files.push_back(name);
    }
  if (out.json) {
    std::string name = rep.id + ".json";
    files.push_back(name);
    write_text(dir / name, report_json(rep, files).dump(2) + "\n");
  }
  return files;
}

// 0 all gating checks pass, 2 a numeric check failed
inline int exit_status(const ScenarioReport& rep) { return rep.passed() ? 0 : 2; }

}  // namespace igac
