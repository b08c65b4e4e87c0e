#pragma once

#include "igac/models.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace igac {

struct Connection {
  Matrix g;
  Matrix ginv;
  Tensor3 gamma;                // gamma(a, b, c) = Gamma^a_bc
  std::vector<Tensor3> dgamma;  // dgamma[d](a, b, c) = d_d Gamma^a_bc (filled on demand)
};

namespace detail {

inline Matrix checked_inverse(const Matrix& g) {
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw DegenerateMetricError("metric is singular or indefinite");
  return llt.solve(Matrix::Identity(g.rows(), g.cols()));
}

inline Tensor3 christoffel_from_jet(const MetricJet& j, const Matrix& ginv) {
  int n = static_cast<int>(j.g.rows());
  Tensor3 G(n);
  // lowered: L(d, b, c) = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
  Tensor3 L(n);
  for (int d = 0; d < n; ++d)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) L(d, b, c) = 0.5 * (j.dg[b](d, c) + j.dg[c](d, b) - j.dg[d](b, c));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        double s = 0;
        for (int d = 0; d < n; ++d) s += ginv(a, d) * L(d, b, c);
        G(a, b, c) = s;
        G(a, c, b) = s;
      }
  return G;
}

}  // namespace detail

inline Tensor3 christoffel(const MetricField& metric, const Vector& th) {
  MetricJet j = metric.jet(th);
  return detail::christoffel_from_jet(j, detail::checked_inverse(j.g));
}

// Gamma and its first derivatives; the derivative step follows the metric's jet quality.
inline Connection connection(const MetricField& metric, const Vector& th, bool with_derivatives = true) {
  Connection c;
  MetricJet j = metric.jet(th);
  c.g = j.g;
  c.ginv = detail::checked_inverse(j.g);
  c.gamma = detail::christoffel_from_jet(j, c.ginv);
  if (!with_derivatives) return c;
  int n = metric.dim();
  double base = metric.has_analytic_jet() ? 1e-4 : 1e-3;
  c.dgamma.assign(n, Tensor3(n));
  for (int d = 0; d < n; ++d) {
    double h = metric.fd_step(d, th, base);
    auto central = [&](double step) {
      Vector p = th, m = th;
      p(d) += step;
      m(d) -= step;
      Tensor3 gp = christoffel(metric, p), gm = christoffel(metric, m);
      std::vector<double> out(gp.data().size());
      for (size_t i = 0; i < out.size(); ++i) out[i] = (gp.data()[i] - gm.data()[i]) / (2 * step);
      return out;
    };
    auto d1 = central(h), d2 = central(h / 2);
    for (size_t i = 0; i < d1.size(); ++i) c.dgamma[d].data()[i] = (4 * d2[i] - d1[i]) / 3;
  }
  return c;
}

// R^a_bcd = d_c G^a_bd - d_d G^a_bc + G^a_fc G^f_bd - G^a_fd G^f_bc
inline Tensor4 riemann_from(const Connection& c) {
  int n = static_cast<int>(c.g.rows());
  Tensor4 R(n);
  const Tensor3& G = c.gamma;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int cc = 0; cc < n; ++cc)
        for (int d = 0; d < n; ++d) {
          if (cc == d) continue;
          double s = c.dgamma[cc](a, b, d) - c.dgamma[d](a, b, cc);
          for (int f = 0; f < n; ++f) s += G(a, f, cc) * G(f, b, d) - G(a, f, d) * G(f, b, cc);
          R(a, b, cc, d) = s;
        }
  return R;
}

inline Tensor4 lower_first(const Tensor4& R, const Matrix& g) {
  int n = R.dim();
  Tensor4 L(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = 0;
          for (int e = 0; e < n; ++e) s += g(a, e) * R(e, b, c, d);
          L(a, b, c, d) = s;
        }
  return L;
}

inline Tensor4 riemann(const MetricField& metric, const Vector& th) { return riemann_from(connection(metric, th)); }

// R_bd = R^a_bad
inline Matrix ricci_from(const Tensor4& R) {
  int n = R.dim();
  Matrix ric = Matrix::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d)
      for (int a = 0; a < n; ++a) ric(b, d) += R(a, b, a, d);
  return 0.5 * (ric + ric.transpose());
}

inline Matrix ricci_tensor(const MetricField& metric, const Vector& th) { return ricci_from(riemann(metric, th)); }

inline double ricci_scalar(const MetricField& metric, const Vector& th) {
  Connection c = connection(metric, th);
  return (c.ginv.cwiseProduct(ricci_from(riemann_from(c)))).sum();
}

// Sectional curvature with R_abcd = g_ae R^e_bcd; the plane normalization is
// (g_ac g_bd - g_ad g_bc) u^a v^b u^c v^d so hyperbolic planes come out negative.
inline double sectional_from(const Tensor4& Rlow, const Matrix& g, const Vector& u, const Vector& v) {
  int n = Rlow.dim();
  double num = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) num += Rlow(a, b, c, d) * u(a) * v(b) * u(c) * v(d);
  double uu = u.dot(g * u), vv = v.dot(g * v), uv = u.dot(g * v);
  double den = uu * vv - uv * uv;
  if (std::abs(den) < 1e-14) throw DegeneratePlaneError("plane basis is degenerate");
  return num / den;
}

inline double sectional(const MetricField& metric, const Vector& th, const Vector& u, const Vector& v) {
  Connection c = connection(metric, th);
  return sectional_from(lower_first(riemann_from(c), c.g), c.g, u, v);
}

// Gram-Schmidt on the coordinate basis in coordinate order; columns are g-orthonormal
inline Matrix orthonormal_frame(const Matrix& g) {
  int n = static_cast<int>(g.rows());
  Matrix e = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    Vector v = e.col(i);
    for (int k = 0; k < i; ++k) v -= e.col(k).dot(g * v) * e.col(k);
    double nrm = std::sqrt(v.dot(g * v));
    if (!(nrm > 0)) throw DegenerateMetricError("frame construction failed");
    e.col(i) = v / nrm;
  }
  return e;
}

// sum of K(e_i, e_j) over ordered pairs i != j of the orthonormal frame
inline double sectional_sum_from(const Tensor4& Rlow, const Matrix& g) {
  Matrix e = orthonormal_frame(g);
  int n = static_cast<int>(g.rows());
  double s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) s += sectional_from(Rlow, g, e.col(i), e.col(j));
  return s;
}

inline Tensor4 weyl_from(const Tensor4& Rlow, const Matrix& g, double scalar) {
  int n = Rlow.dim();
  Tensor4 W(n);
  if (n < 2) return W;
  double k = scalar / (n * (n - 1.0));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          W(a, b, c, d) = Rlow(a, b, c, d) - k * (g(b, d) * g(a, c) - g(b, c) * g(a, d));
  return W;
}

struct WeylResult {
  Tensor4 w;
  double max_abs = 0;
};

inline WeylResult weyl_projective(const MetricField& metric, const Vector& th) {
  if (metric.dim() < 2) throw DomainError("Weyl tensor needs dimension >= 2");
  Connection c = connection(metric, th);
  Tensor4 R = riemann_from(c);
  double scalar = (c.ginv.cwiseProduct(ricci_from(R))).sum();
  WeylResult out;
  out.w = weyl_from(lower_first(R, c.g), c.g, scalar);
  out.max_abs = out.w.max_abs();
  return out;
}

// sup over grid of max |D_a K_b + D_b K_a|, D_a K_b = d_a K_b - Gamma^c_ba K_c
inline double killing_residual(const MetricField& metric, const std::function<Vector(const Vector&)>& k_field,
                               const std::vector<Vector>& grid) {
  int n = metric.dim();
  double worst = 0;
  auto lowered = [&](const Vector& th) { return Vector(metric.eval(th) * k_field(th)); };
  for (const auto& th : grid) {
    Connection c = connection(metric, th, false);
    Vector kl = c.g * k_field(th);
    Matrix dk(n, n);  // dk(a, b) = d_a K_b
    for (int a = 0; a < n; ++a) {
      double h = metric.fd_step(a, th, 1e-5);
      auto central = [&](double step) {
        Vector p = th, m = th;
        p(a) += step;
        m(a) -= step;
        return Vector((lowered(p) - lowered(m)) / (2 * step));
      };
      dk.row(a) = ((4 * central(h / 2) - central(h)) / 3).transpose();
    }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double dab = dk(a, b), dba = dk(b, a);
        for (int cc = 0; cc < n; ++cc) {
          dab -= c.gamma(cc, b, a) * kl(cc);
          dba -= c.gamma(cc, a, b) * kl(cc);
        }
        worst = std::max(worst, std::abs(dab + dba));
      }
  }
  return worst;
}

// ---- identity residuals ----

// max |d_c g_ab - G^d_ca g_db - G^d_cb g_ad|
inline double metric_compat_residual(const MetricField& metric, const Vector& th) {
  MetricJet j = metric.jet(th);
  Tensor3 G = detail::christoffel_from_jet(j, detail::checked_inverse(j.g));
  int n = metric.dim();
  double worst = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double s = j.dg[c](a, b);
        for (int d = 0; d < n; ++d) s -= G(d, c, a) * j.g(d, b) + G(d, c, b) * j.g(a, d);
        worst = std::max(worst, std::abs(s));
      }
  return worst;
}

// max of |R_abcd + R_bacd| and |R_abcd + R_abdc|
inline double antisymmetry_residual(const Tensor4& L) {
  int n = L.dim();
  double worst = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          worst = std::max({worst, std::abs(L(a, b, c, d) + L(b, a, c, d)), std::abs(L(a, b, c, d) + L(a, b, d, c))});
  return worst;
}

// max |R_abcd + R_acdb + R_adbc|
inline double bianchi_residual(const Tensor4& L) {
  int n = L.dim();
  double worst = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          worst = std::max(worst, std::abs(L(a, b, c, d) + L(a, c, d, b) + L(a, d, b, c)));
  return worst;
}

struct SectionalEntry {
  int i, j;  // coordinate plane
  double k;
};

struct CurvatureReport {
  Vector theta;
  Tensor3 christoffel;
  Tensor4 riemann;  // mixed R^a_bcd
  Matrix ricci;
  double scalar = 0;
  double scalar_mixed = 0;  // R^{ab}_{ab} through the lowered tensor
  std::vector<SectionalEntry> sectional;
  double sectional_sum = 0;
  double weyl_max_abs = 0;
  double metric_compat_residual = 0;
  double antisymmetry_residual = 0;
  double bianchi_residual = 0;
};

inline CurvatureReport curvature_report(const MetricField& metric, const Vector& th) {
  CurvatureReport r;
  r.theta = th;
  Connection c = connection(metric, th);
  r.christoffel = c.gamma;
  r.riemann = riemann_from(c);
  r.ricci = ricci_from(r.riemann);
  r.scalar = (c.ginv.cwiseProduct(r.ricci)).sum();
  Tensor4 L = lower_first(r.riemann, c.g);
  int n = metric.dim();
  double mixed = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int cc = 0; cc < n; ++cc)
        for (int d = 0; d < n; ++d) mixed += L(a, b, cc, d) * c.ginv(a, cc) * c.ginv(b, d);
  r.scalar_mixed = mixed;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      r.sectional.push_back({i, j, sectional_from(L, c.g, Vector::Unit(n, i), Vector::Unit(n, j))});
  r.sectional_sum = n >= 2 ? sectional_sum_from(L, c.g) : 0.0;
  r.weyl_max_abs = n >= 2 ? weyl_from(L, c.g, r.scalar).max_abs() : 0.0;
  r.metric_compat_residual = metric_compat_residual(metric, th);
  r.antisymmetry_residual = antisymmetry_residual(L);
  r.bianchi_residual = bianchi_residual(L);
  return r;
}

}  // namespace igac
