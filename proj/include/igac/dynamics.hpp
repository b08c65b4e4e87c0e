#pragma once

#include "igac/geometry.hpp"

#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace igac {

// ---- Dormand-Prince 5(4) ----

struct OdeStep {
  double t;
  Vector y;
  Vector f;  // y' at (t, y), used by the cubic Hermite dense output
};

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  long max_steps = 2000000;
};

namespace detail {

struct OdeChartExit {
  double t;
  Vector y;
};

template <class Rhs>
std::vector<OdeStep> dopri45(Rhs&& rhs, double t0, const Vector& y0, double t1, const OdeOptions& opt) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  std::vector<OdeStep> out;
  Vector y = y0;
  Vector k1 = rhs(t0, y);
  out.push_back({t0, y, k1});
  double span = t1 - t0;
  if (span <= 0) return out;

  auto norm = [&](const Vector& e, const Vector& ya, const Vector& yb) {
    double s = 0;
    for (int i = 0; i < e.size(); ++i) {
      double sc = opt.atol + opt.rtol * std::max(std::abs(ya(i)), std::abs(yb(i)));
      s += (e(i) / sc) * (e(i) / sc);
    }
    return std::sqrt(s / e.size());
  };

  // starting step (Hairer-Wanner heuristic, first stage only)
  double d0 = norm(y, y, y), d1 = norm(k1, y, y);
  double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h = std::min(h, span);

  double t = t0;
  bool last_fail_chart = false;
  long steps = 0;
  while (t < t1) {
    if (++steps > opt.max_steps) throw StiffnessError("step budget exhausted");
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      if (last_fail_chart) throw OdeChartExit{t, y};
      throw StiffnessError("step size underflow");
    }
    bool final_step = false;
    if (t + h >= t1 || t + 1.01 * h >= t1) {
      h = t1 - t;
      final_step = true;
    }
    Vector y7, k2, k3, k4, k5, k6, k7;
    try {
      k2 = rhs(t + c2 * h, Vector(y + h * a21 * k1));
      k3 = rhs(t + c3 * h, Vector(y + h * (a31 * k1 + a32 * k2)));
      k4 = rhs(t + c4 * h, Vector(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
      k5 = rhs(t + c5 * h, Vector(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
      k6 = rhs(t + h, Vector(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
      y7 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = rhs(t + h, y7);
    } catch (const DomainError&) {
      last_fail_chart = true;
      h *= 0.25;
      continue;
    }
    Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = norm(err, y, y7);
    if (!std::isfinite(en)) {
      last_fail_chart = false;
      h *= 0.25;
      continue;
    }
    if (en <= 1.0) {
      t = final_step ? t1 : t + h;
      y = y7;
      k1 = k7;
      out.push_back({t, y, k1});
      last_fail_chart = false;
      double fac = en == 0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2)));
      h *= fac;
    } else {
      last_fail_chart = false;
      h *= std::max(0.1, 0.9 * std::pow(en, -0.2));
    }
  }
  return out;
}

// cubic Hermite on [a, b]; returns value and derivative
inline std::pair<Vector, Vector> hermite(const OdeStep& a, const OdeStep& b, double t) {
  double h = b.t - a.t;
  if (h <= 0) return {a.y, a.f};
  double s = (t - a.t) / h;
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  Vector y = h00 * a.y + h10 * h * a.f + h01 * b.y + h11 * h * b.f;
  double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1, d01 = -d00, d11 = 3 * s * s - 2 * s;
  Vector dy = (d00 * a.y + d01 * b.y) / h + d10 * a.f + d11 * b.f;
  return {y, dy};
}

inline std::pair<Vector, Vector> dense_eval(const std::vector<OdeStep>& steps, double t) {
  if (steps.size() == 1) return {steps[0].y, steps[0].f};
  auto it = std::upper_bound(steps.begin(), steps.end(), t, [](double v, const OdeStep& s) { return v < s.t; });
  size_t i = it == steps.begin() ? 0 : static_cast<size_t>(it - steps.begin()) - 1;
  if (i + 1 >= steps.size()) i = steps.size() - 2;
  return hermite(steps[i], steps[i + 1], t);
}

}  // namespace detail

// ---- chart with scale coordinates replaced by their logarithms ----
// Integration runs here so relative accuracy in sigma holds near the chart floor.

class LogScaleChart {
 public:
  explicit LogScaleChart(std::vector<bool> scale) : scale_(std::move(scale)) {}
  Vector to_log(const Vector& th) const {
    Vector u = th;
    for (int a = 0; a < u.size(); ++a)
      if (scale_[a]) u(a) = std::log(th(a));
    return u;
  }
  Vector from_log(const Vector& u) const {
    Vector th = u;
    for (int a = 0; a < u.size(); ++a)
      if (scale_[a]) th(a) = std::exp(u(a));
    return th;
  }
  // d theta^a / d u^a at theta
  Vector jac(const Vector& th) const {
    Vector s = Vector::Ones(th.size());
    for (int a = 0; a < th.size(); ++a)
      if (scale_[a]) s(a) = th(a);
    return s;
  }
  const std::vector<bool>& scale() const { return scale_; }

 private:
  std::vector<bool> scale_;
};

inline MetricField pull_back_log(const MetricField& m) {
  LogScaleChart chart(m.scale_mask());
  int n = m.dim();
  auto eval = [m, chart](const Vector& u) {
    Vector th = chart.from_log(u);
    Vector s = chart.jac(th);
    return Matrix(s.asDiagonal() * m.eval(th) * s.asDiagonal());
  };
  MetricField out(n, eval, m.source());
  if (m.has_analytic_jet()) {
    auto jet = [m, chart, n](const Vector& u) {
      Vector th = chart.from_log(u);
      Vector s = chart.jac(th);
      MetricJet j = m.jet(th);
      MetricJet r;
      r.g = s.asDiagonal() * j.g * s.asDiagonal();
      r.dg.assign(n, Matrix::Zero(n, n));
      for (int c = 0; c < n; ++c) {
        r.dg[c] = s(c) * (s.asDiagonal() * j.dg[c] * s.asDiagonal());
        if (chart.scale()[c]) {
          r.dg[c].row(c) += r.g.row(c);
          r.dg[c].col(c) += r.g.col(c);
        }
      }
      return r;
    };
    out.with_jet(jet);
  }
  out.with_volume([m, chart](const Vector& u) {
    Vector th = chart.from_log(u);
    return m.sqrt_det(th) * chart.jac(th).prod();
  });
  out.with_blocks(m.blocks());
  return out;
}

// ---- geodesics ----

struct DenseGeodesic {
  LogScaleChart chart{{}};
  MetricField log_metric;
  std::vector<OdeStep> steps;  // state (u, u') in the log chart
};

struct GeodesicPath {
  std::vector<double> tau;
  std::vector<Vector> theta;
  std::vector<Vector> theta_dot;
  std::vector<double> speed;  // g_ab theta'^a theta'^b
  std::string label;          // family parameter, carried opaquely
  std::shared_ptr<const DenseGeodesic> dense;

  size_t size() const { return tau.size(); }
  int dim() const { return theta.empty() ? 0 : static_cast<int>(theta[0].size()); }

  // (theta, theta') at tau in the original chart
  std::pair<Vector, Vector> at(double t) const {
    if (!dense) throw DomainError("path has no dense output");
    auto [y, dy] = detail::dense_eval(dense->steps, t);
    int n = static_cast<int>(y.size() / 2);
    Vector th = dense->chart.from_log(y.head(n));
    Vector v = dense->chart.jac(th).cwiseProduct(y.tail(n));
    return {th, v};
  }

  double max_speed_drift() const {
    double worst = 0;
    for (double s : speed) worst = std::max(worst, std::abs(s - speed[0]) / std::max(speed[0], 1e-300));
    return worst;
  }
};

namespace detail {

inline Vector geodesic_rhs(const MetricField& gm, const Vector& y) {
  int n = static_cast<int>(y.size() / 2);
  Vector u = y.head(n), w = y.tail(n);
  Tensor3 G = christoffel(gm, u);
  Vector out(2 * n);
  out.head(n) = w;
  for (int a = 0; a < n; ++a) {
    double s = 0;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) s += G(a, b, c) * w(b) * w(c);
    out(n + a) = -s;
  }
  return out;
}

inline GeodesicPath path_on_grid(const MetricField& metric, std::shared_ptr<const DenseGeodesic> dense,
                                 const std::vector<double>& grid) {
  GeodesicPath p;
  p.dense = std::move(dense);
  for (double t : grid) {
    auto [th, v] = p.at(t);
    p.tau.push_back(t);
    p.theta.push_back(th);
    p.theta_dot.push_back(v);
    p.speed.push_back(v.dot(metric.eval(th) * v));
  }
  return p;
}

}  // namespace detail

inline std::vector<double> uniform_grid(double t0, double t1, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = (i == n - 1) ? t1 : t0 + (t1 - t0) * i / (n - 1.0);
  return g;
}

// Solves theta'' + Gamma theta' theta' = 0. With n_out > 1 the path is sampled on a
// uniform grid; otherwise the accepted integrator steps are returned.
inline GeodesicPath integrate_geodesic(const MetricField& metric, const Vector& theta0, const Vector& v0,
                                       double tau_end, double tol = 1e-10, int n_out = 0) {
  if (!(tol > 0)) throw DomainError("tolerance must be positive");
  if (!(tau_end > 0)) throw DomainError("tau_end must be positive");
  metric.check_chart(theta0);
  int n = metric.dim();
  auto dense = std::make_shared<DenseGeodesic>();
  dense->chart = LogScaleChart(metric.scale_mask());
  dense->log_metric = pull_back_log(metric);
  Vector y0(2 * n);
  y0.head(n) = dense->chart.to_log(theta0);
  y0.tail(n) = v0.cwiseQuotient(dense->chart.jac(theta0));
  const MetricField& gm = dense->log_metric;
  // local control well below the requested global accuracy; drift accumulates over many steps
  OdeOptions opt;
  opt.rtol = std::max(tol * 1e-3, 1e-14);
  opt.atol = opt.rtol;
  try {
    dense->steps = detail::dopri45([&](double, const Vector& y) { return detail::geodesic_rhs(gm, y); }, 0.0, y0,
                                   tau_end, opt);
  } catch (const detail::OdeChartExit& e) {
    Vector th = dense->chart.from_log(e.y.head(n));
    throw ChartBoundaryError("geodesic left the chart", e.t, th, dense->chart.jac(th).cwiseProduct(e.y.tail(n)));
  }
  std::vector<double> grid;
  if (n_out > 1)
    grid = uniform_grid(0, tau_end, n_out);
  else
    for (const auto& s : dense->steps) grid.push_back(s.t);
  return detail::path_on_grid(metric, dense, grid);
}

inline GeodesicPath resample(const MetricField& metric, const GeodesicPath& path, const std::vector<double>& grid) {
  return detail::path_on_grid(metric, path.dense, grid);
}

// Damped-Newton shooting on the initial velocity.
inline GeodesicPath solve_geodesic_bvp(const MetricField& metric, const Vector& theta_init, const Vector& theta_final,
                                       double tau_span, double tol = 1e-8, int n_out = 0) {
  if (!(tau_span > 0)) throw DomainError("tau_span must be positive");
  for (const Vector* end : {&theta_init, &theta_final}) {
    try {
      metric.check_chart(*end);
    } catch (const DomainError& e) {
      throw ChartBoundaryError(std::string("endpoint outside the chart: ") + e.what(), 0, *end,
                               Vector::Zero(metric.dim()));
    }
  }
  LogScaleChart chart(metric.scale_mask());
  int n = metric.dim();
  double ode_tol = std::min(1e-10, 1e-2 * tol);
  Vector u0 = chart.to_log(theta_init), uf = chart.to_log(theta_final);
  Vector s0 = chart.jac(theta_init);
  auto velocity = [&](const Vector& w) { return Vector(s0.cwiseProduct(w)); };
  auto residual = [&](const Vector& w) -> std::optional<Vector> {
    try {
      GeodesicPath p = integrate_geodesic(metric, theta_init, velocity(w), tau_span, ode_tol);
      return Vector(p.theta.back() - theta_final);
    } catch (const ChartBoundaryError&) {
      return std::nullopt;
    } catch (const StiffnessError&) {
      return std::nullopt;
    }
  };
  Vector w = (uf - u0) / tau_span;
  auto r = residual(w);
  if (!r) throw BvpError("initial shot left the chart", INFINITY);
  double rn = r->norm();
  double best = rn;
  for (int it = 0; it < 50 && rn >= tol; ++it) {
    Matrix J(n, n);
    for (int j = 0; j < n; ++j) {
      double d = 1e-7 * std::max(1.0, std::abs(w(j)));
      Vector wp = w;
      wp(j) += d;
      auto rp = residual(wp);
      if (!rp) throw BvpError("Jacobian probe left the chart", best);
      J.col(j) = (*rp - *r) / d;
    }
    Vector step = J.colPivHouseholderQr().solve(-*r);
    double alpha = 1;
    bool moved = false;
    for (int k = 0; k < 40; ++k, alpha *= 0.5) {
      auto rt = residual(w + alpha * step);
      if (rt && rt->norm() < rn) {
        w += alpha * step;
        r = rt;
        rn = rt->norm();
        moved = true;
        break;
      }
    }
    best = std::min(best, rn);
    if (!moved) break;
  }
  if (rn >= tol) throw BvpError("shooting did not converge", best);
  return integrate_geodesic(metric, theta_init, velocity(w), tau_span, ode_tol, n_out);
}

// ---- wave-packet closed forms ----

struct WavePacketParams {
  double p0 = 1;
  double sigma0 = 1;
  double tau0 = 1;
  double r = 0;

  void validate() const {
    if (!(p0 > 0)) throw DomainError("p0 must be positive");
    if (!(sigma0 > 0)) throw DomainError("sigma0 must be positive");
    if (!(tau0 > 0)) throw DomainError("tau0 must be positive");
    if (!(r >= 0 && r < 1)) throw DomainError("r must lie in [0, 1)");
  }
  double A0() const { return std::asinh(p0 / (std::sqrt(2.0) * sigma0)) / tau0; }
  double amplitude() const { return std::sqrt(p0 * p0 + 2 * sigma0 * sigma0); }
  double sigma_max() const { return std::sqrt(p0 * p0 / 2 + sigma0 * sigma0); }
};

enum class Branch { before, after };

struct WavePacketState {
  double mu1, mu2, sigma;
  Vector vec() const {
    Vector v(3);
    v << mu1, mu2, sigma;
    return v;
  }
};

inline WavePacketState wavepacket_geodesics(const WavePacketParams& p, double tau, Branch branch) {
  p.validate();
  double a = p.A0();
  double c = branch == Branch::after ? std::sqrt(1 - p.r) : 1.0;
  double mu1 = -c * p.amplitude() * std::tanh(a * tau);
  return {mu1, -mu1, p.sigma_max() / std::cosh(a * tau)};
}

inline WavePacketState wavepacket_velocity(const WavePacketParams& p, double tau, Branch branch) {
  p.validate();
  double a = p.A0();
  double c = branch == Branch::after ? std::sqrt(1 - p.r) : 1.0;
  double sech = 1 / std::cosh(a * tau);
  double d1 = -c * p.amplitude() * a * sech * sech;
  return {d1, -d1, -p.sigma_max() * a * sech * std::tanh(a * tau)};
}

inline double wavepacket_jacobi_intensity(const WavePacketParams& p, double omega0, double tau) {
  double a = p.A0();
  return omega0 / a * std::sinh(a * tau);
}

// ---- Jacobi fields ----

struct JacobiTrace {
  std::vector<double> tau;
  std::vector<Vector> J;
  std::vector<Vector> DJ;  // covariant derivative along the path
  std::vector<double> intensity;
  std::vector<double> intensity_dot;
  size_t size() const { return tau.size(); }
};

// D^2 J/dtau^2 + R^a_bcd theta'^b J^c theta'^d = 0 in the expanded covariant form,
// integrated in the log chart with path states interpolated from the geodesic's dense output.
inline JacobiTrace integrate_jacobi(const MetricField& metric, const GeodesicPath& path, const Vector& J0,
                                    const Vector& DJ0, double tol = 1e-10) {
  if (!path.dense) throw DomainError("path has no dense output");
  if (!J0.allFinite() || !DJ0.allFinite()) throw DomainError("initial Jacobi data must be finite");
  int n = metric.dim();
  const DenseGeodesic& dg = *path.dense;
  const MetricField& gm = dg.log_metric;
  double t0 = path.tau.front(), t1 = path.tau.back();

  auto state = [&](double t) {
    auto [y, dy] = detail::dense_eval(dg.steps, t);
    return std::make_pair(Vector(y.head(n)), Vector(y.tail(n)));
  };

  auto rhs = [&](double t, const Vector& z) {
    auto [u, w] = state(t);
    Connection c = connection(gm, u);
    Tensor4 R = riemann_from(c);
    const Tensor3& G = c.gamma;
    Vector acc(n);  // theta'' = -G w w
    for (int a = 0; a < n; ++a) {
      double s = 0;
      for (int b = 0; b < n; ++b)
        for (int e = 0; e < n; ++e) s += G(a, b, e) * w(b) * w(e);
      acc(a) = -s;
    }
    Vector J = z.head(n), Jd = z.tail(n);
    Vector out(2 * n);
    out.head(n) = Jd;
    for (int a = 0; a < n; ++a) {
      double s = 0;
      for (int b = 0; b < n; ++b)
        for (int cc = 0; cc < n; ++cc) {
          double gabc = G(a, b, cc);
          s += 2 * gabc * Jd(b) * w(cc) + gabc * J(b) * acc(cc);
          double dG = 0;
          for (int d = 0; d < n; ++d) dG += c.dgamma[d](a, b, cc) * w(d);
          s += dG * w(cc) * J(b);
          double gg = 0;
          for (int d = 0; d < n; ++d)
            for (int f = 0; f < n; ++f) gg += G(b, d, f) * w(f) * J(d);
          s += gabc * gg * w(cc);
        }
      double curv = 0;
      for (int b = 0; b < n; ++b)
        for (int cc = 0; cc < n; ++cc)
          for (int d = 0; d < n; ++d) curv += R(a, b, cc, d) * w(b) * J(cc) * w(d);
      out(n + a) = -s - curv;
    }
    return out;
  };

  auto [u0, w0] = state(t0);
  Vector th0 = dg.chart.from_log(u0);
  Vector s0 = dg.chart.jac(th0);
  Vector Ju = J0.cwiseQuotient(s0), DJu = DJ0.cwiseQuotient(s0);
  Tensor3 G0 = christoffel(gm, u0);
  Vector Jdot0 = DJu;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int cc = 0; cc < n; ++cc) Jdot0(a) -= G0(a, b, cc) * Ju(b) * w0(cc);
  Vector z0(2 * n);
  z0 << Ju, Jdot0;

  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  std::vector<OdeStep> steps;
  try {
    steps = detail::dopri45(rhs, t0, z0, t1, opt);
  } catch (const detail::OdeChartExit& e) {
    throw ChartBoundaryError("Jacobi integration left the chart", e.t, path.theta.back(), path.theta_dot.back());
  }

  JacobiTrace tr;
  for (double t : path.tau) {
    auto [z, dz] = detail::dense_eval(steps, t);
    auto [u, w] = state(t);
    Vector th = dg.chart.from_log(u);
    Vector s = dg.chart.jac(th);
    Vector J = z.head(n), Jd = z.tail(n);
    Tensor3 G = christoffel(gm, u);
    Vector DJ = Jd;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int cc = 0; cc < n; ++cc) DJ(a) += G(a, b, cc) * J(b) * w(cc);
    Matrix g = gm.eval(u);
    double I2 = std::max(0.0, J.dot(g * J));
    double I = std::sqrt(I2);
    double Idot = I > 1e-300 ? J.dot(g * DJ) / I : std::sqrt(std::max(0.0, DJ.dot(g * DJ)));
    tr.tau.push_back(t);
    tr.J.push_back(s.cwiseProduct(J));
    tr.DJ.push_back(s.cwiseProduct(DJ));
    tr.intensity.push_back(I);
    tr.intensity_dot.push_back(Idot);
  }
  return tr;
}

struct LyapunovEstimate {
  double value = 0;
  std::vector<double> tau;
  std::vector<double> sequence;
};

// (1/tau) ln[(|J|^2 + |J|'^2) / (|J(0)|^2 + |J|'(0)^2)] at every grid point after the first
inline LyapunovEstimate lyapunov_estimate(const JacobiTrace& tr) {
  if (tr.size() < 16) throw DomainError("Lyapunov estimate needs at least 16 trace points");
  double base = tr.intensity[0] * tr.intensity[0] + tr.intensity_dot[0] * tr.intensity_dot[0];
  if (!(base > 0)) throw UndefinedRateError("initial Jacobi intensity and rate both vanish");
  bool any = false;
  for (double v : tr.intensity) any = any || v > 0;
  if (!any) throw UndefinedRateError("Jacobi trace is identically zero");
  LyapunovEstimate e;
  for (size_t i = 1; i < tr.size(); ++i) {
    double t = tr.tau[i] - tr.tau[0];
    if (t <= 0) continue;
    double v = tr.intensity[i] * tr.intensity[i] + tr.intensity_dot[i] * tr.intensity_dot[i];
    e.tau.push_back(tr.tau[i]);
    e.sequence.push_back(std::log(v / base) / t);
  }
  e.value = e.sequence.back();
  return e;
}

}  // namespace igac
