#include "test_support.hpp"

using namespace igac;
using igac::test::vec;

namespace {

ComplexityTrace synthetic(const std::function<double(double)>& s, double t1, int n) {
  ComplexityTrace tr;
  tr.tau = uniform_grid(0, t1, n);
  for (double t : tr.tau) {
    double v = t > 0 ? s(t) : -std::numeric_limits<double>::infinity();
    tr.ige.push_back(v);
    tr.igc.push_back(std::exp(v));
    tr.delta_v.push_back(0);
  }
  return tr;
}

}  // namespace

TEST(Complexity, BoxVolumeFrozen) {
  // mpmath: int sqrt(2)/sigma^2 / mu over [0,1] x [1,2] x [1,3]
  StatModel m = StatModel::product({StatModel::gaussian_diag(0, 1), StatModel::exponential(1)});
  double v = box_volume(analytic_fisher(m), vec({0, 1, 1}), vec({1, 2, 3}));
  EXPECT_NEAR(v / 0.776836199212093224 - 1, 0.0, 1e-6);
}

TEST(Complexity, BoxVolumeQuadratureMetricAgrees) {
  StatModel m = StatModel::gaussian_diag(0, 1);
  double a = box_volume(analytic_fisher(m), vec({0, 1}), vec({1, 2}));
  double q = box_volume(fisher_quadrature(m), vec({0, 1}), vec({1, 2}));
  EXPECT_NEAR(q / a, 1.0, 1e-6);
  EXPECT_NEAR(a, std::sqrt(2.0) * 0.5, 1e-9);
}

TEST(Complexity, ZeroExtentHasZeroVolume) {
  MetricField m = analytic_fisher(StatModel::gaussian_diag(0, 1));
  EXPECT_EQ(box_volume(m, vec({0, 1}), vec({0, 2})), 0.0);
}

TEST(Complexity, FlatStraightLine) {
  // constant metric, straight line from the origin: Delta V = sqrt(det g) |v1 v2| tau^2, C = Delta V / 3
  Matrix g(2, 2);
  g << 2, 0, 0, 0.5;
  MetricField m = constant_metric(g);
  GeodesicPath p = integrate_geodesic(m, vec({0, 0}), vec({1, 2}), 3, 1e-10, 61);
  ComplexityTrace tr = complexity_trace(m, p);
  for (size_t i = 10; i < tr.size(); i += 10) {
    double t = tr.tau[i];
    EXPECT_NEAR(tr.delta_v[i], 2 * t * t, 1e-8 * (1 + t * t));
    EXPECT_NEAR(tr.igc[i], 2 * t * t / 3, 1e-6 * (1 + t * t));
  }
  EXPECT_THROW(ige(m, p, 0.0), DomainError);
  GeodesicPath flat = integrate_geodesic(m, vec({0, 0}), vec({1, 0}), 3, 1e-10, 61);
  EXPECT_THROW(ige(m, flat, 2.0), UndefinedEntropyError);
}

TEST(Complexity, RunningAverageOfPolynomial) {
  std::vector<double> x = uniform_grid(0, 2, 41), y;
  for (double t : x) y.push_back(t * t * t);
  std::vector<double> avg = running_average(x, y);
  EXPECT_NEAR(avg.back(), 16.0 / 4.0 / 2.0, 1e-12);
}

TEST(Complexity, FitFormsRecoverParameters) {
  FitOptions fo;
  ComplexityTrace lin = synthetic([](double t) { return 1.7 * t - 0.4; }, 10, 200);
  AsymptoticFit a = fit_asymptotics(lin, FitForm::linear, fo);
  EXPECT_NEAR(a.params[0], 1.7, 1e-12);
  EXPECT_NEAR(a.params[1], -0.4, 1e-12);
  EXPECT_NEAR(a.r2, 1.0, 1e-12);
  ComplexityTrace lg = synthetic([](double t) { return 2 * std::log(t) + 0.3; }, 10, 200);
  AsymptoticFit b = fit_asymptotics(lg, FitForm::logarithmic, fo);
  EXPECT_NEAR(b.params[0], 2.0, 1e-12);
  AsymptoticFit c = fit_asymptotics(lg, FitForm::power, fo);
  EXPECT_NEAR(c.params[1], 2.0, 1e-12);
  EXPECT_NEAR(c.params[0], std::exp(0.3), 1e-12);
  EXPECT_GT(b.r2, fit_asymptotics(lg, FitForm::linear, fo).r2);
  ComplexityTrace sat = synthetic([](double t) { return 2 * std::log(0.6 + 1.5 / t); }, 40, 400);
  fo.l = 2;
  AsymptoticFit d = fit_asymptotics(sat, FitForm::ige_saturating, fo);
  EXPECT_NEAR(d.params[0], 0.6, 1e-8);
  EXPECT_NEAR(d.params[1], 1.5, 1e-6);
}

TEST(Complexity, FitRejectsShortWindows) {
  ComplexityTrace tr = synthetic([](double t) { return t; }, 1, 10);
  EXPECT_THROW(fit_asymptotics(tr, FitForm::linear), FitError);
  EXPECT_THROW(fit_line({1, 1, 1}, {1, 2, 3}), FitError);
}

TEST(Complexity, WavePacketClosedForm) {
  // box reading equals half of the closed form; ratios and gaps are unaffected
  WavePacketParams p{20, 2, 1, 0.3};
  double lam = 2 * p.A0();
  Numerics nm;
  nm.samples = 101;
  WavePacketRun corr = wavepacket_run(p, 10, nm);
  WavePacketParams p0 = p;
  p0.r = 0;
  WavePacketRun unc = wavepacket_run(p0, 10, nm);
  double q = std::sqrt(0.7 / 1.3);
  for (size_t i = 0; i < corr.complexity.size(); ++i) {
    double t = corr.complexity.tau[i];
    if (t < 2 / lam) continue;
    EXPECT_NEAR(corr.complexity.igc[i] / unc.complexity.igc[i], q, 0.02 * q);
    EXPECT_NEAR(corr.complexity.ige[i] - unc.complexity.ige[i], std::log(q), 0.02);
    EXPECT_NEAR(corr.complexity.igc[i] / (0.5 * wavepacket_igc_closed(lam, t, p.r)), 1.0, 1e-3);
  }
}

TEST(Complexity, ClosedFormRatioExact) {
  double lam = 5.3;
  for (double r : {0.1, 0.3, 0.5})
    for (double t : {0.5, 2.0, 3.7}) {
      double cu = wavepacket_igc_closed(lam, t, 0), cc = wavepacket_igc_closed(lam, t, r);
      EXPECT_NEAR(cc / cu, std::sqrt((1 - r) / (1 + r)), 1e-14);
      EXPECT_NEAR(r_from_igc(cu, cc), r, 1e-12);
    }
}
