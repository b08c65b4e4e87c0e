#include "test_support.hpp"

using namespace igac;

namespace {

bool has_issue(const ConfigError& e, const std::string& path) {
  for (const auto& i : e.issues)
    if (i.path == path) return true;
  return false;
}

std::vector<ConfigIssue> issues_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.issues;
  }
  return {};
}

}  // namespace

TEST(Config, MinimalWithDefaults) {
  ScenarioConfig c = parse_config(R"({"scenario": "uncorrelated_gaussian", "parameters": {"l": 1}})");
  EXPECT_EQ(c.scenario, "uncorrelated_gaussian");
  EXPECT_EQ(c.numerics.ode_tol, 1e-10);
  EXPECT_EQ(c.numerics.quad_tol, 1e-9);
  EXPECT_EQ(c.numerics.fit_window_fraction, 0.25);
  EXPECT_TRUE(c.output.csv);
  EXPECT_TRUE(c.output.json);
  EXPECT_TRUE(static_cast<bool>(c.job));
}

TEST(Config, RangeErrorCarriesPath) {
  try {
    parse_config(R"({"scenario": "wavepacket", "parameters": {"r": 1.2}})");
    FAIL() << "expected a configuration error";
  } catch (const ConfigError& e) {
    EXPECT_TRUE(has_issue(e, "parameters.r"));
  }
}

TEST(Config, MissingRegime) {
  auto is = issues_of(R"({"scenario": "spin_chain", "parameters": {}})");
  ASSERT_EQ(is.size(), 1u);
  EXPECT_EQ(is[0].path, "parameters.regime");
  EXPECT_NE(is[0].message.find("missing"), std::string::npos);
}

TEST(Config, ReportsAllProblems) {
  auto is = issues_of(
      R"({"scenario": "macro_correlated", "parameters": {"r": [0.5, 1.5]},
          "numerics": {"ode_tol": 0, "seed": -1}, "output": {"formats": ["xml"]}, "extra": 1})");
  std::set<std::string> paths;
  for (const auto& i : is) paths.insert(i.path);
  EXPECT_TRUE(paths.count("parameters.r[1]"));
  EXPECT_TRUE(paths.count("numerics.ode_tol"));
  EXPECT_TRUE(paths.count("numerics.seed"));
  EXPECT_TRUE(paths.count("output.formats[0]"));
  EXPECT_TRUE(paths.count("extra"));
}

TEST(Config, UnknownScenarioAndMalformed) {
  auto a = issues_of(R"({"scenario": "pendulum"})");
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a[0].path, "scenario");
  EXPECT_FALSE(issues_of("{not json").empty());
  EXPECT_FALSE(issues_of(R"({"parameters": {}})").empty());
}

TEST(Config, SeedIsUnsigned64) {
  ScenarioConfig c = parse_config(
      R"({"scenario": "mre_update", "numerics": {"seed": 18446744073709551615},
          "parameters": {"prior": {"kind": "normal", "mu": 0, "sigma": 1},
                         "constraints": [{"kind": "identity", "target": 0.5}]}})");
  EXPECT_EQ(c.numerics.seed, 18446744073709551615ULL);
  ASSERT_TRUE(c.mre.has_value());
}

TEST(Config, CustomManifoldFamilies) {
  ScenarioConfig c = parse_config(R"({"scenario": "custom_manifold", "parameters": {"families": [
      {"family": "gaussian", "theta": [0, 1]}, {"family": "bivariate_correlated", "theta": [0, 0, 2], "r": 0.3}]}})");
  ASSERT_TRUE(c.custom.has_value());
  EXPECT_EQ(c.custom->model.param_dim(), 5);
  auto bad = issues_of(R"({"scenario": "custom_manifold", "parameters": {"families": [
      {"family": "gaussian", "theta": [0, -1]}, {"family": "exponential", "theta": [1, 2]}]}})");
  EXPECT_EQ(bad.size(), 2u);
}

TEST(Emit, NumberFormat) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(-2.5e-300), "-2.5e-300");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Emit, CsvHeaderAndDeterminism) {
  ScenarioConfig c = parse_config(R"({"scenario": "spin_chain", "parameters": {"regime": "regular"}})");
  ScenarioReport a = c.run(), b = c.run();
  ASSERT_FALSE(a.traces.empty());
  std::string ca = trace_csv(a.traces[0]);
  EXPECT_EQ(ca.substr(0, ca.find('\n')), "tau,theta_1,theta_2,speed,delta_v,igc,ige");
  EXPECT_EQ(ca, trace_csv(b.traces[0]));
  EXPECT_EQ(ca.find('\r'), std::string::npos);
  EXPECT_EQ(report_json(a).dump(), report_json(b).dump());
}

TEST(Emit, JsonReportIsSelfDescribing) {
  ScenarioReport rep = run_mre_update({Prior::normal(0, 1), {Constraint::identity(1)}});
  json j = report_json(rep);
  EXPECT_EQ(j["scenario"], "mre_update");
  EXPECT_TRUE(j["pass"].get<bool>());
  for (const auto& o : j["observables"]) {
    EXPECT_TRUE(o.contains("tol"));
    EXPECT_TRUE(o.contains("oracle"));
  }
  for (const auto& c : j["checks"]) EXPECT_TRUE(c.contains("oracle_value"));
}

TEST(Emit, WritesFilesAndExitStatus) {
  ScenarioConfig c = parse_config(R"({"scenario": "iho", "parameters": {"l": 2}})");
  ScenarioReport rep = c.run();
  OutputSpec out;
  out.directory = (std::filesystem::temp_directory_path() / "igac_emit_test").string();
  std::vector<std::string> files = emit(rep, out);
  ASSERT_EQ(files.size(), 2u);
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out.directory) / f));
  EXPECT_EQ(exit_status(rep), 0);
  rep.checks.push_back({"forced", 1, 0, 0, kClosedForm, true, false, ""});
  EXPECT_EQ(exit_status(rep), 2);
  std::filesystem::remove_all(out.directory);
}
