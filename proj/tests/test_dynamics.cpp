#include "test_support.hpp"

using namespace igac;
using igac::test::vec;

namespace {

const WavePacketParams kPacket{20, 2, 1, 0.5};

MetricField packet_metric(double r) { return analytic_fisher(StatModel::gaussian_bivariate_corr(0, 0, 1, r)); }

GeodesicPath packet_path(const WavePacketParams& p, double horizon, int n) {
  return integrate_geodesic(packet_metric(p.r), wavepacket_geodesics(p, 0, Branch::after).vec(),
                            wavepacket_velocity(p, 0, Branch::after).vec(), horizon / p.A0(), 1e-10, n);
}

}  // namespace

TEST(Dynamics, PacketConstants) {
  // A0 = (1/tau0) asinh(p0 / (sqrt(2) sigma0))
  EXPECT_NEAR(kPacket.A0(), std::asinh(20 / (std::sqrt(2.0) * 2)), 1e-14);
  EXPECT_NEAR(kPacket.A0(), 2.654121595, 1e-9);
}

TEST(Dynamics, GeodesicMatchesClosedForm) {
  for (double r : {0.1, 0.5}) {
    WavePacketParams p = kPacket;
    p.r = r;
    GeodesicPath path = packet_path(p, 5, 101);
    double worst = 0;
    for (size_t i = 0; i < path.size(); ++i)
      worst = std::max(worst, (path.theta[i] - wavepacket_geodesics(p, path.tau[i], Branch::after).vec()).cwiseAbs().maxCoeff());
    EXPECT_LT(worst, 1e-6);
    EXPECT_LT(path.max_speed_drift(), 1e-9);
  }
}

TEST(Dynamics, DenseOutputAgreesWithGrid) {
  GeodesicPath path = packet_path(kPacket, 5, 51);
  for (size_t i = 0; i < path.size(); i += 10)
    EXPECT_LT((path.at(path.tau[i]).first - path.theta[i]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dynamics, ScaleGeodesicsAreExponential) {
  // sigma' / sigma constant along a pure-scale geodesic of the Gaussian plane
  MetricField g = analytic_fisher(StatModel::gaussian_diag(0, 2));
  GeodesicPath p = integrate_geodesic(g, vec({0, 2}), vec({0, 0.6}), 10, 1e-10, 11);
  EXPECT_NEAR(p.theta.back()(1), 2 * std::exp(0.3 * 10), 1e-8 * 2 * std::exp(3.0));
  MetricField e = analytic_fisher(StatModel::exponential(1.5));
  GeodesicPath q = integrate_geodesic(e, vec({1.5}), vec({0.75}), 4, 1e-10, 5);
  EXPECT_NEAR(q.theta.back()(0), 1.5 * std::exp(0.5 * 4), 1e-8 * 1.5 * std::exp(2.0));
}

TEST(Dynamics, JacobiIntensityMatchesSinh) {
  GeodesicPath path = packet_path(kPacket, 10, 101);
  MetricField m = packet_metric(kPacket.r);
  Vector dj = detail::unit_orthogonal(m.eval(path.theta[0]), path.theta_dot[0], vec({1, 1, 0}));
  JacobiTrace jt = integrate_jacobi(m, path, Vector::Zero(3), dj);
  double worst = 0;
  for (size_t i = 1; i < jt.size(); ++i)
    worst = std::max(worst, std::abs(jt.intensity[i] / wavepacket_jacobi_intensity(kPacket, 1.0, jt.tau[i]) - 1));
  EXPECT_LT(worst, 1e-4);
}

TEST(Dynamics, LyapunovNearTwiceA0) {
  for (double r : {0.0, 0.2, 0.5}) {
    WavePacketParams p = kPacket;
    p.r = r;
    GeodesicPath path = packet_path(p, 20, 201);
    MetricField m = packet_metric(r);
    Vector dj = detail::unit_orthogonal(m.eval(path.theta[0]), path.theta_dot[0], vec({1, 1, 0}));
    LyapunovEstimate le = lyapunov_estimate(integrate_jacobi(m, path, Vector::Zero(3), dj));
    EXPECT_NEAR(le.value / (2 * p.A0()), 1.0, 0.05) << "r=" << r;
  }
}

TEST(Dynamics, LyapunovNeedsEnoughPoints) {
  GeodesicPath path = packet_path(kPacket, 2, 8);
  MetricField m = packet_metric(kPacket.r);
  Vector dj = detail::unit_orthogonal(m.eval(path.theta[0]), path.theta_dot[0], vec({1, 1, 0}));
  EXPECT_THROW(lyapunov_estimate(integrate_jacobi(m, path, Vector::Zero(3), dj)), DomainError);
  JacobiTrace zero;
  zero.tau = uniform_grid(0, 1, 20);
  zero.intensity.assign(20, 0.0);
  zero.intensity_dot.assign(20, 0.0);
  EXPECT_THROW(lyapunov_estimate(zero), UndefinedRateError);
}

TEST(Dynamics, BoundaryValueRecoversKnownGeodesic) {
  MetricField m = packet_metric(kPacket.r);
  double t1 = 3 / kPacket.A0();
  Vector a = wavepacket_geodesics(kPacket, 0, Branch::after).vec();
  Vector b = wavepacket_geodesics(kPacket, t1, Branch::after).vec();
  GeodesicPath p = solve_geodesic_bvp(m, a, b, t1, 1e-8, 31);
  Vector mid = wavepacket_geodesics(kPacket, p.tau[15], Branch::after).vec();
  EXPECT_LT((p.theta[15] - mid).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((p.theta.back() - b).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Dynamics, BoundaryValueRejectsOffChartEndpoint) {
  MetricField m = analytic_fisher(StatModel::gaussian_diag(0, 1));
  EXPECT_THROW(solve_geodesic_bvp(m, vec({0, 1}), vec({1, -1}), 1.0), ChartBoundaryError);
}

TEST(Dynamics, RejectsBadArguments) {
  MetricField m = analytic_fisher(StatModel::gaussian_diag(0, 1));
  EXPECT_THROW(integrate_geodesic(m, vec({0, 1}), vec({1, 0}), 1.0, -1.0), DomainError);
  EXPECT_ANY_THROW(integrate_geodesic(m, vec({0, -1}), vec({1, 0}), 1.0));
  WavePacketParams bad{20, 2, 1, 1.0};
  EXPECT_THROW(bad.validate(), DomainError);
}
