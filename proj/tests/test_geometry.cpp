#include "test_support.hpp"

using namespace igac;
using igac::test::vec;

TEST(Geometry, GaussianChristoffelFrozen) {
  // sympy: G^mu_{mu sigma} = -1/sigma, G^sigma_{mu mu} = 1/(2 sigma), G^sigma_{sigma sigma} = -1/sigma
  Tensor3 g = christoffel(analytic_fisher(StatModel::gaussian_diag(0, 2)), vec({0.7, 2.0}));
  EXPECT_NEAR(g(0, 0, 1), -0.5, 1e-9);
  EXPECT_NEAR(g(0, 1, 0), -0.5, 1e-9);
  EXPECT_NEAR(g(1, 0, 0), 0.25, 1e-9);
  EXPECT_NEAR(g(1, 1, 1), -0.5, 1e-9);
  EXPECT_NEAR(g(0, 0, 0), 0.0, 1e-9);
}

TEST(Geometry, UncorrelatedGaussianScalar) {
  for (int l = 1; l <= 3; ++l) {
    std::vector<double> th;
    for (int k = 0; k < l; ++k) {
      th.push_back(0.3 * k);
      th.push_back(1.0 + k);
    }
    StatModel m = StatModel::gaussian_diag(th);
    EXPECT_NEAR(ricci_scalar(analytic_fisher(m), m.theta()), -l, 1e-6);
    EXPECT_NEAR(ricci_scalar(fisher_quadrature(m), m.theta()), -l, 1e-4);
  }
}

TEST(Geometry, WavePacketManifoldConstantCurvature) {
  for (double r : {0.1, 0.5, 0.9}) {
    MetricField m = analytic_fisher(StatModel::gaussian_bivariate_corr(0, 0, 1, r));
    CurvatureReport cr = curvature_report(m, vec({0.4, -0.4, 1.3}));
    EXPECT_NEAR(cr.scalar, -1.5, 1e-6);
    ASSERT_EQ(cr.sectional.size(), 3u);
    for (const auto& s : cr.sectional) EXPECT_NEAR(s.k, -0.25, 1e-6);
    EXPECT_LT(cr.weyl_max_abs, 1e-8);
  }
}

TEST(Geometry, MacroCorrelatedScalarPerPair) {
  // sympy: R = 2 / (r^2 - 2) for the pair metric (1/sigma^2)[[1, r], [r, 2]]
  for (double r : {0.2, 0.6}) {
    MetricField m = macro_correlated_metric({r, r});
    EXPECT_NEAR(ricci_scalar(m, vec({0, 1.5, 1, 0.7})), 2 * 2 / (r * r - 2), 1e-6);
  }
}

TEST(Geometry, SpinChainManifolds) {
  StatModel reg = StatModel::product({StatModel::exponential(1.3), StatModel::exponential(0.7)});
  EXPECT_NEAR(ricci_scalar(analytic_fisher(reg), reg.theta()), 0.0, 1e-8);
  StatModel ch = StatModel::product({StatModel::wigner_dyson(1.3), StatModel::gaussian_diag(0.2, 0.9)});
  EXPECT_NEAR(ricci_scalar(analytic_fisher(ch), ch.theta()), -1.0, 1e-6);
}

TEST(Geometry, SphereSignConvention) {
  // round sphere in (theta, phi): positive curvature, R = 2
  MetricField s(2, [](const Vector& th) {
    Matrix g = Matrix::Zero(2, 2);
    g(0, 0) = 1;
    g(1, 1) = std::pow(std::sin(th(0)), 2);
    return g;
  }, MetricSource::analytic);
  EXPECT_NEAR(ricci_scalar(s, vec({1.1, 0.3})), 2.0, 1e-5);
  EXPECT_NEAR(sectional(s, vec({1.1, 0.3}), vec({1, 0}), vec({0, 1})), 1.0, 1e-5);
}

TEST(Geometry, MeanTranslationIsKilling) {
  MetricField m = analytic_fisher(StatModel::gaussian_diag(0, 1));
  std::vector<Vector> grid = {vec({0, 1}), vec({1, 0.5}), vec({-2, 3})};
  EXPECT_LT(killing_residual(m, [](const Vector&) { return vec({1, 0}); }, grid), 1e-8);
  EXPECT_GT(killing_residual(m, [](const Vector&) { return vec({0, 1}); }, grid), 1e-2);
}

TEST(Geometry, DegeneratePlaneRejected) {
  MetricField m = analytic_fisher(StatModel::gaussian_diag(0, 1));
  EXPECT_THROW(sectional(m, vec({0, 1}), vec({1, 0}), vec({2, 0})), DegeneratePlaneError);
}

TEST(Geometry, ConstantMetricIsFlat) {
  Matrix g(2, 2);
  g << 2, 0.5, 0.5, 1;
  CurvatureReport cr = curvature_report(constant_metric(g), vec({0.3, 0.1}));
  EXPECT_NEAR(cr.scalar, 0.0, 1e-12);
  EXPECT_NEAR(cr.sectional_sum, 0.0, 1e-12);
}

TEST(Geometry, IdentityResidualsSmall) {
  StatModel m = StatModel::product({StatModel::gaussian_diag(0.1, 1.2), StatModel::wigner_dyson(0.8)});
  CurvatureReport cr = curvature_report(analytic_fisher(m), m.theta());
  EXPECT_LT(cr.metric_compat_residual, 1e-8);
  EXPECT_LT(cr.antisymmetry_residual, 1e-8);
  EXPECT_LT(cr.bianchi_residual, 1e-8);
  EXPECT_NEAR(cr.scalar, cr.sectional_sum, 1e-8);
}
