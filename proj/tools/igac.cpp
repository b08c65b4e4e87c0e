#include "igac/cli_io.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace igac;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
};

ScenarioConfig load(const Overrides& o, const std::string& want) {
  ScenarioConfig cfg = load_config(o.config);
  if (!want.empty() && cfg.scenario != want)
    throw ConfigError("scenario", "this subcommand needs a " + want + " configuration");
  if (!o.out.empty()) cfg.output.directory = o.out;
  if (!o.format.empty()) {
    cfg.output.csv = o.format == "csv";
    cfg.output.json = o.format == "json";
  }
  if (o.seed) cfg.numerics.seed = *o.seed;
  if (o.tol) cfg.numerics.ode_tol = *o.tol;
  return cfg;
}

MetricField custom_metric(const ScenarioConfig& cfg) {
  const CustomConfig& c = *cfg.custom;
  return c.quadrature ? fisher_quadrature(c.model, {64, 512, cfg.numerics.quad_tol}) : analytic_fisher(c.model);
}

Vector custom_velocity(const ScenarioConfig& cfg) {
  const CustomConfig& c = *cfg.custom;
  if (c.v0.empty()) throw ConfigError("parameters.v0", "missing required key");
  return Eigen::Map<const Vector>(c.v0.data(), c.v0.size());
}

ScenarioReport curvature_cmd(const ScenarioConfig& cfg) {
  MetricField m = custom_metric(cfg);
  CurvatureReport cr = curvature_report(m, cfg.custom->model.theta());
  ScenarioReport rep;
  rep.id = "curvature";
  rep.input("theta", std::vector<double>(cr.theta.data(), cr.theta.data() + cr.theta.size()));
  rep.observe("ricci_scalar", cr.scalar, 1e-9);
  for (const auto& s : cr.sectional)
    rep.observe("sectional_" + std::to_string(s.i + 1) + "_" + std::to_string(s.j + 1), s.k, 1e-9);
  rep.observe("weyl_max_abs", cr.weyl_max_abs, 1e-9);
  double tol = cfg.custom->quadrature ? 1e-4 : 1e-6;
  rep.expect("scalar_equals_sectional_sum", cr.scalar, cr.sectional_sum, tol, kDerived);
  rep.expect_below("riemann_antisymmetry", cr.antisymmetry_residual, tol, kDerived);
  rep.expect_below("first_bianchi", cr.bianchi_residual, tol, kDerived);
  rep.expect_below("metric_compatibility", cr.metric_compat_residual, tol, kDerived);
  return rep;
}

ScenarioReport path_cmd(const ScenarioConfig& cfg, const std::string& what) {
  MetricField m = custom_metric(cfg);
  Vector th0 = cfg.custom->model.theta(), v0 = custom_velocity(cfg);
  const Numerics& nm = cfg.numerics;
  ScenarioReport rep;
  rep.id = what;
  rep.input("theta0", std::vector<double>(th0.data(), th0.data() + th0.size()));
  rep.input("v0", cfg.custom->v0);
  rep.input("tau_end", cfg.custom->tau_end);
  GeodesicPath path = integrate_geodesic(m, th0, v0, cfg.custom->tau_end, nm.ode_tol, nm.samples);
  rep.expect_below("speed_drift", path.max_speed_drift(), cfg.custom->quadrature ? 1e-5 : 10 * nm.ode_tol, kDerived);
  NamedTrace t{"path", path, std::nullopt, std::nullopt};
  if (what == "jacobi") {
    if (m.dim() < 2) throw DomainError("a Jacobi field needs at least two dimensions");
    Eigen::Index k;
    v0.cwiseAbs().minCoeff(&k);
    Vector seed = Vector::Zero(m.dim());
    seed(k) = 1;
    Vector dj = detail::unit_orthogonal(m.eval(th0), v0, seed);
    t.jacobi = integrate_jacobi(m, path, Vector::Zero(m.dim()), dj, nm.ode_tol);
    rep.input("dj0", std::vector<double>(dj.data(), dj.data() + dj.size()));
    rep.observe("intensity_final", t.jacobi->intensity.back(), 10 * nm.ode_tol);
    try {
      rep.observe("lyapunov_estimate", lyapunov_estimate(*t.jacobi).value, 0, kNumericFit);
    } catch (const UndefinedRateError& e) {
      rep.notes.push_back(e.what());
    }
  } else if (what == "ige") {
    t.complexity = complexity_trace(m, path);
    FitOptions fo;
    fo.window_fraction = nm.fit_window_fraction;
    for (FitForm f : {FitForm::linear, FitForm::logarithmic}) {
      try {
        AsymptoticFit fit = fit_asymptotics(*t.complexity, f, fo);
        std::string n = form_name(f);
        rep.observe(n + "_slope", fit.params[0], 0, kNumericFit);
        rep.observe(n + "_r2", fit.r2, 0, kNumericFit);
        if (f == FitForm::linear) t.complexity->fit = fit;
      } catch (const FitError& e) {
        rep.notes.push_back(e.what());
      }
    }
    rep.observe("igc_final", t.complexity->igc.back(), 1e-6);
  }
  rep.traces.push_back(std::move(t));
  return rep;
}

int finish(const ScenarioReport& rep, const OutputSpec& out) {
  std::vector<std::string> files = emit(rep, out);
  std::cout << rep.id << ": " << (rep.passed() ? "pass" : "FAIL") << "\n";
  for (const auto& c : rep.checks)
    std::cout << "  " << (c.pass ? "pass " : (c.gating ? "FAIL " : "info ")) << c.name << " = " << format_number(c.value)
              << " (oracle " << format_number(c.oracle) << ", tol " << format_number(c.tol) << ", " << c.tag << ")\n";
  for (const auto& f : files) std::cout << "  wrote " << (std::filesystem::path(out.directory) / f).string() << "\n";
  if (!rep.passed()) std::cerr << json{{"failures", rep.failures()}}.dump() << "\n";
  return exit_status(rep);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher-Rao geometry, geodesic chaos and complexity engine"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config, "configuration document (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "output directory");
  app.add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", o.seed, "seed for randomized checks");
  app.add_option("--tol", o.tol, "ODE tolerance")->check(CLI::PositiveNumber);
  struct Cmd {
    const char* name;
    const char* help;
    const char* scenario;
  };
  const Cmd cmds[] = {{"curvature", "curvature report of a custom manifold", "custom_manifold"},
                      {"geodesic", "geodesic trace of a custom manifold", "custom_manifold"},
                      {"jacobi", "Jacobi field along a custom-manifold geodesic", "custom_manifold"},
                      {"ige", "complexity and entropy trace of a custom manifold", "custom_manifold"},
                      {"mre", "maximum relative entropy update", "mre_update"},
                      {"scenario", "run any configured scenario", ""}};
  for (const auto& c : cmds) app.add_subcommand(c.name, c.help)->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  std::string sub = app.get_subcommands().front()->get_name();
  if (o.config.empty()) {
    std::cerr << "error: --config is required\n";
    return 1;
  }
  try {
    std::string want;
    for (const auto& c : cmds)
      if (sub == c.name) want = c.scenario;
    ScenarioConfig cfg = load(o, want);
    ScenarioReport rep;
    if (sub == "curvature")
      rep = curvature_cmd(cfg);
    else if (sub == "geodesic" || sub == "jacobi" || sub == "ige")
      rep = path_cmd(cfg, sub);
    else
      rep = cfg.run();
    return finish(rep, cfg.output);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    json list = json::array();
    for (const auto& i : e.issues) list.push_back({{"path", i.path}, {"message", i.message}});
    std::cerr << json{{"config_errors", list}}.dump() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    std::cerr << json{{"failures", {e.what()}}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
