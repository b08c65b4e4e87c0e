#pragma once

#include "igac/core.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace igac {

enum class Family { gaussian_diag, gaussian_bivariate_corr, exponential, wigner_dyson, product };
enum class MetricSource { analytic, quadrature, finite_difference };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::gaussian_diag: return "gaussian_diag";
    case Family::gaussian_bivariate_corr: return "gaussian_bivariate_corr";
    case Family::exponential: return "exponential";
    case Family::wigner_dyson: return "wigner_dyson";
    case Family::product: return "product";
  }
  return "?";
}

inline const char* source_name(MetricSource s) {
  switch (s) {
    case MetricSource::analytic: return "analytic";
    case MetricSource::quadrature: return "quadrature";
    case MetricSource::finite_difference: return "finite_difference";
  }
  return "?";
}

// g and its first derivatives; dg[c] = d g / d theta^c
struct MetricJet {
  Matrix g;
  std::vector<Matrix> dg;
};

class MetricField {
 public:
  using EvalFn = std::function<Matrix(const Vector&)>;
  using JetFn = std::function<MetricJet(const Vector&)>;
  using VolumeFn = std::function<double(const Vector&)>;

  MetricField() = default;
  MetricField(int dim, EvalFn eval, MetricSource source, std::vector<bool> scale = {})
      : dim_(dim), eval_(std::move(eval)), source_(source), scale_(std::move(scale)) {
    if (scale_.empty()) scale_.assign(dim_, false);
    blocks_ = {std::vector<int>(dim_)};
    for (int i = 0; i < dim_; ++i) blocks_[0][i] = i;
  }

  MetricField& with_jet(JetFn j) {
    jet_ = std::move(j);
    return *this;
  }
  MetricField& with_volume(VolumeFn v) {
    vol_ = std::move(v);
    return *this;
  }
  // coordinate groups whose metric block depends only on the group's own coordinates
  MetricField& with_blocks(std::vector<std::vector<int>> b) {
    blocks_ = std::move(b);
    return *this;
  }

  int dim() const { return dim_; }
  MetricSource source() const { return source_; }
  bool has_analytic_jet() const { return static_cast<bool>(jet_); }
  bool is_scale(int a) const { return scale_[a]; }
  const std::vector<bool>& scale_mask() const { return scale_; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }

  void check_chart(const Vector& th) const {
    if (th.size() != dim_) throw DomainError("parameter vector has wrong dimension");
    for (int a = 0; a < dim_; ++a) {
      if (!std::isfinite(th(a))) throw DomainError("non-finite coordinate " + std::to_string(a));
      if (scale_[a] && th(a) < kChartFloor)
        throw DomainError("scale coordinate " + std::to_string(a) + " below chart floor");
    }
  }

  Matrix eval(const Vector& th) const {
    check_chart(th);
    Matrix g = eval_(th);
    double asym = (g - g.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff()))
      throw DegenerateMetricError("metric is not symmetric");
    return 0.5 * (g + g.transpose());
  }

  // step used by finite differences in coordinate a; scale coordinates below 1 use a relative step
  double fd_step(int a, const Vector& th, double base) const {
    double s = std::abs(th(a));
    return base * ((scale_[a] && s < 1.0) ? s : std::max(1.0, s));
  }

  MetricJet jet(const Vector& th) const {
    if (jet_) {
      check_chart(th);
      return jet_(th);
    }
    MetricJet j;
    j.g = eval(th);
    j.dg.resize(dim_);
    for (int c = 0; c < dim_; ++c) {
      double h = fd_step(c, th, 1e-5);
      auto central = [&](double step) {
        Vector p = th, m = th;
        p(c) += step;
        m(c) -= step;
        return Matrix((eval(p) - eval(m)) / (2 * step));
      };
      Matrix d1 = central(h), d2 = central(h / 2);
      j.dg[c] = (4 * d2 - d1) / 3;
    }
    return j;
  }

  double sqrt_det(const Vector& th) const {
    if (vol_) {
      check_chart(th);
      return vol_(th);
    }
    return det_from_eval(th);
  }

  // caller guarantees th is in the chart (e.g. inside a checked box)
  double sqrt_det_unchecked(const Vector& th) const { return vol_ ? vol_(th) : det_from_eval(th); }

 private:
  double det_from_eval(const Vector& th) const {
    Eigen::LLT<Matrix> llt(eval(th));
    if (llt.info() != Eigen::Success) throw DegenerateMetricError("metric not positive definite");
    double v = 1;
    for (int i = 0; i < dim_; ++i) v *= llt.matrixL()(i, i);
    return v;
  }

  int dim_ = 0;
  EvalFn eval_;
  MetricSource source_ = MetricSource::finite_difference;
  std::vector<bool> scale_;
  JetFn jet_;
  VolumeFn vol_;
  std::vector<std::vector<int>> blocks_;
};

// one independent factor of a (possibly composite) density
struct Factor {
  enum class Kind { gauss, bivariate, exponential, wigner_dyson };
  Kind kind;
  int param_offset = 0;
  int micro_offset = 0;
  double r = 0;  // model constant of the bivariate factor

  int n_params() const {
    switch (kind) {
      case Kind::gauss: return 2;
      case Kind::bivariate: return 3;
      default: return 1;
    }
  }
  int n_micro() const { return kind == Kind::bivariate ? 2 : 1; }
  bool half_line() const { return kind == Kind::exponential || kind == Kind::wigner_dyson; }
};

class StatModel {
 public:
  // theta interleaved per pair: (mu_1, sigma_1, mu_2, sigma_2, ...)
  static StatModel gaussian_diag(const std::vector<double>& pairs) {
    if (pairs.empty() || pairs.size() % 2 != 0) throw DomainError("gaussian_diag needs (mu, sigma) pairs");
    StatModel m;
    m.family_ = Family::gaussian_diag;
    for (size_t k = 0; k < pairs.size() / 2; ++k) m.push(Factor{Factor::Kind::gauss});
    m.set_theta(Eigen::Map<const Vector>(pairs.data(), pairs.size()));
    return m;
  }
  static StatModel gaussian_diag(double mu, double sigma) { return gaussian_diag(std::vector<double>{mu, sigma}); }

  // chart (mu_x, mu_y, sigma) with correlation r held fixed
  static StatModel gaussian_bivariate_corr(double mu_x, double mu_y, double sigma, double r) {
    if (!(r > -1 && r < 1)) throw DomainError("correlation must lie in (-1, 1)");
    StatModel m;
    m.family_ = Family::gaussian_bivariate_corr;
    Factor f{Factor::Kind::bivariate};
    f.r = r;
    m.push(f);
    Vector th(3);
    th << mu_x, mu_y, sigma;
    m.set_theta(th);
    return m;
  }

  static StatModel exponential(double mu) {
    StatModel m;
    m.family_ = Family::exponential;
    m.push(Factor{Factor::Kind::exponential});
    m.set_theta(Vector::Constant(1, mu));
    return m;
  }

  // chart is the mean spacing itself
  static StatModel wigner_dyson(double mu) {
    StatModel m;
    m.family_ = Family::wigner_dyson;
    m.push(Factor{Factor::Kind::wigner_dyson});
    m.set_theta(Vector::Constant(1, mu));
    return m;
  }

  static StatModel product(const std::vector<StatModel>& parts) {
    if (parts.empty()) throw DomainError("empty product");
    StatModel m;
    m.family_ = Family::product;
    std::vector<double> th;
    for (const auto& p : parts) {
      for (const auto& f : p.factors_) m.push(f);
      th.insert(th.end(), p.theta_.data(), p.theta_.data() + p.theta_.size());
    }
    m.set_theta(Eigen::Map<const Vector>(th.data(), th.size()));
    return m;
  }

  Family family() const { return family_; }
  const Vector& theta() const { return theta_; }
  int micro_dim() const { return micro_dim_; }
  int param_dim() const { return static_cast<int>(theta_.size()); }
  const std::vector<Factor>& factors() const { return factors_; }

  StatModel with_theta(const Vector& th) const {
    StatModel m = *this;
    m.set_theta(th);
    return m;
  }

  std::vector<bool> scale_mask() const {
    std::vector<bool> s(param_dim(), false);
    for (const auto& f : factors_) {
      switch (f.kind) {
        case Factor::Kind::gauss: s[f.param_offset + 1] = true; break;
        case Factor::Kind::bivariate: s[f.param_offset + 2] = true; break;
        default: s[f.param_offset] = true; break;
      }
    }
    return s;
  }

  std::vector<std::vector<int>> factor_blocks() const {
    std::vector<std::vector<int>> b;
    for (const auto& f : factors_) {
      std::vector<int> idx(f.n_params());
      for (int i = 0; i < f.n_params(); ++i) idx[i] = f.param_offset + i;
      b.push_back(idx);
    }
    return b;
  }

 private:
  void push(Factor f) {
    f.param_offset = param_count_;
    f.micro_offset = micro_dim_;
    param_count_ += f.n_params();
    micro_dim_ += f.n_micro();
    factors_.push_back(f);
  }

  void set_theta(const Vector& th) {
    if (th.size() != param_count_) throw DomainError("parameter vector has wrong dimension");
    theta_ = th;
    auto mask = scale_mask();
    for (int a = 0; a < th.size(); ++a) {
      if (!std::isfinite(th(a))) throw DomainError("non-finite parameter");
      if (mask[a] && !(th(a) > 0)) throw DomainError("scale parameter must be positive");
    }
  }

  Family family_ = Family::product;
  std::vector<Factor> factors_;
  Vector theta_;
  int micro_dim_ = 0;
  int param_count_ = 0;
};

namespace detail {

inline double factor_log_density(const Factor& f, const double* th, const double* x) {
  switch (f.kind) {
    case Factor::Kind::gauss: {
      double mu = th[0], s = th[1], d = x[0] - mu;
      return -0.5 * std::log(2 * kPi) - std::log(s) - d * d / (2 * s * s);
    }
    case Factor::Kind::bivariate: {
      double s = th[2], r = f.r, dx = x[0] - th[0], dy = x[1] - th[1];
      double q = dx * dx - 2 * r * dx * dy + dy * dy;
      double om = 1 - r * r;
      return -std::log(2 * kPi * s * s * std::sqrt(om)) - q / (2 * om * s * s);
    }
    case Factor::Kind::exponential: {
      if (!(x[0] >= 0)) throw DomainError("exponential micro-variable must be non-negative");
      return -std::log(th[0]) - x[0] / th[0];
    }
    case Factor::Kind::wigner_dyson: {
      if (!(x[0] >= 0)) throw DomainError("level spacing must be non-negative");
      if (x[0] == 0) return -INFINITY;
      double mu = th[0];
      return std::log(kPi / 2) + std::log(x[0]) - 2 * std::log(mu) - kPi * x[0] * x[0] / (4 * mu * mu);
    }
  }
  return 0;
}

inline void factor_score(const Factor& f, const double* th, const double* x, double* out) {
  switch (f.kind) {
    case Factor::Kind::gauss: {
      double mu = th[0], s = th[1], d = x[0] - mu;
      out[0] = d / (s * s);
      out[1] = d * d / (s * s * s) - 1 / s;
      return;
    }
    case Factor::Kind::bivariate: {
      double s = th[2], r = f.r, dx = x[0] - th[0], dy = x[1] - th[1];
      double om = 1 - r * r;
      double q = dx * dx - 2 * r * dx * dy + dy * dy;
      out[0] = (dx - r * dy) / (om * s * s);
      out[1] = (dy - r * dx) / (om * s * s);
      out[2] = -2 / s + q / (om * s * s * s);
      return;
    }
    case Factor::Kind::exponential: {
      if (!(x[0] >= 0)) throw DomainError("exponential micro-variable must be non-negative");
      out[0] = -1 / th[0] + x[0] / (th[0] * th[0]);
      return;
    }
    case Factor::Kind::wigner_dyson: {
      if (!(x[0] >= 0)) throw DomainError("level spacing must be non-negative");
      double mu = th[0];
      out[0] = -2 / mu + kPi * x[0] * x[0] / (2 * mu * mu * mu);
      return;
    }
  }
}

inline void factor_analytic(const Factor& f, const double* th, Matrix& g, std::vector<Matrix>& dg) {
  int n = f.n_params();
  g = Matrix::Zero(n, n);
  dg.assign(n, Matrix::Zero(n, n));
  switch (f.kind) {
    case Factor::Kind::gauss: {
      double s = th[1];
      g(0, 0) = 1 / (s * s);
      g(1, 1) = 2 / (s * s);
      dg[1](0, 0) = -2 / (s * s * s);
      dg[1](1, 1) = -4 / (s * s * s);
      return;
    }
    case Factor::Kind::bivariate: {
      double s = th[2], r = f.r, om = 1 - r * r;
      Matrix b(3, 3);
      b << 1 / om, -r / om, 0, -r / om, 1 / om, 0, 0, 0, 4;
      g = b / (s * s);
      dg[2] = -2 * b / (s * s * s);
      return;
    }
    case Factor::Kind::exponential: {
      double mu = th[0];
      g(0, 0) = 1 / (mu * mu);
      dg[0](0, 0) = -2 / (mu * mu * mu);
      return;
    }
    case Factor::Kind::wigner_dyson: {
      double mu = th[0];
      g(0, 0) = 4 / (mu * mu);
      dg[0](0, 0) = -8 / (mu * mu * mu);
      return;
    }
  }
}

inline double factor_sqrt_det(const Factor& f, const double* th) {
  switch (f.kind) {
    case Factor::Kind::gauss: return std::sqrt(2.0) / (th[1] * th[1]);
    case Factor::Kind::bivariate: return 2 / (th[2] * th[2] * th[2] * std::sqrt(1 - f.r * f.r));
    case Factor::Kind::exponential: return 1 / th[0];
    case Factor::Kind::wigner_dyson: return 2 / th[0];
  }
  return 0;
}

// Integrals against the factor density on a rule matched to its weight:
//   z = int P, mean = int P s, second = int P s s^T.
// Each node carries W_i * P(X_i) * |dX/dt| / w(t_i); the bracket is O(1) by construction,
// but it is evaluated from log_density so the density code is what gets integrated.
struct FactorMoments {
  double z = 0;
  Vector mean;
  Matrix second;
};

inline FactorMoments factor_moments(const Factor& f, const double* th, int n) {
  int np = f.n_params();
  FactorMoments m;
  m.mean = Vector::Zero(np);
  m.second = Matrix::Zero(np, np);
  double x[2];
  double s[3];
  auto accumulate = [&](double c) {
    if (c == 0 || !std::isfinite(c)) return;
    factor_score(f, th, x, s);
    m.z += c;
    for (int a = 0; a < np; ++a) {
      m.mean(a) += c * s[a];
      for (int b = 0; b < np; ++b) m.second(a, b) += c * s[a] * s[b];
    }
  };
  switch (f.kind) {
    case Factor::Kind::gauss: {
      const auto& rule = gauss_rule(GaussKind::hermite, n);
      double mu = th[0], sg = th[1], lj = std::log(std::sqrt(2.0) * sg);
      for (int i = 0; i < n; ++i) {
        double t = rule.nodes[i];
        x[0] = mu + std::sqrt(2.0) * sg * t;
        accumulate(rule.weights[i] * std::exp(factor_log_density(f, th, x) + lj + t * t));
      }
      break;
    }
    case Factor::Kind::bivariate: {
      const auto& rule = gauss_rule(GaussKind::hermite, n);
      double sg = th[2], r = f.r, c2 = std::sqrt(1 - r * r);
      double lj = std::log(2 * sg * sg * c2);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          double t1 = rule.nodes[i], t2 = rule.nodes[j];
          x[0] = th[0] + std::sqrt(2.0) * sg * t1;
          x[1] = th[1] + std::sqrt(2.0) * sg * (r * t1 + c2 * t2);
          double w = rule.weights[i] * rule.weights[j];
          accumulate(w * std::exp(factor_log_density(f, th, x) + lj + t1 * t1 + t2 * t2));
        }
      }
      break;
    }
    case Factor::Kind::exponential: {
      const auto& rule = gauss_rule(GaussKind::laguerre, n);
      double mu = th[0], lj = std::log(mu);
      for (int i = 0; i < n; ++i) {
        double t = rule.nodes[i];
        x[0] = mu * t;
        accumulate(rule.weights[i] * std::exp(factor_log_density(f, th, x) + lj + t));
      }
      break;
    }
    case Factor::Kind::wigner_dyson: {
      // x = 2 mu sqrt(t/pi) turns the Rayleigh factor into e^{-t}
      const auto& rule = gauss_rule(GaussKind::laguerre, n);
      double mu = th[0];
      for (int i = 0; i < n; ++i) {
        double t = rule.nodes[i];
        x[0] = 2 * mu * std::sqrt(t / kPi);
        double lj = std::log(mu / std::sqrt(kPi * t));
        accumulate(rule.weights[i] * std::exp(factor_log_density(f, th, x) + lj + t));
      }
      break;
    }
  }
  return m;
}

}  // namespace detail

inline double log_density(const StatModel& model, const Vector& x) {
  if (x.size() != model.micro_dim()) throw DomainError("micro-point has wrong dimension");
  double s = 0;
  for (const auto& f : model.factors())
    s += detail::factor_log_density(f, model.theta().data() + f.param_offset, x.data() + f.micro_offset);
  return s;
}

inline Vector score(const StatModel& model, const Vector& x) {
  if (x.size() != model.micro_dim()) throw DomainError("micro-point has wrong dimension");
  Vector out(model.param_dim());
  for (const auto& f : model.factors())
    detail::factor_score(f, model.theta().data() + f.param_offset, x.data() + f.micro_offset,
                         out.data() + f.param_offset);
  return out;
}

inline MetricField analytic_fisher(const StatModel& model) {
  int n = model.param_dim();
  auto factors = model.factors();
  auto jet = [factors, n](const Vector& th) {
    MetricJet j;
    j.g = Matrix::Zero(n, n);
    j.dg.assign(n, Matrix::Zero(n, n));
    Matrix gf;
    std::vector<Matrix> dgf;
    for (const auto& f : factors) {
      detail::factor_analytic(f, th.data() + f.param_offset, gf, dgf);
      int o = f.param_offset, k = f.n_params();
      j.g.block(o, o, k, k) = gf;
      for (int c = 0; c < k; ++c) j.dg[o + c].block(o, o, k, k) = dgf[c];
    }
    return j;
  };
  auto eval = [jet](const Vector& th) { return jet(th).g; };
  auto vol = [factors](const Vector& th) {
    double v = 1;
    for (const auto& f : factors) v *= detail::factor_sqrt_det(f, th.data() + f.param_offset);
    return v;
  };
  MetricField m(n, eval, MetricSource::analytic, model.scale_mask());
  m.with_jet(jet).with_volume(vol).with_blocks(model.factor_blocks());
  return m;
}

struct QuadSpec {
  int nodes = 64;
  int max_nodes = 512;
  double rel_tol = 1e-9;
};

// Fisher matrix by quadrature at the model's own theta.
// Cross-factor blocks are products of per-factor score means (the integrand separates).
inline Matrix fisher_quadrature_matrix(const StatModel& model, const QuadSpec& spec = {},
                                       double* achieved = nullptr) {
  int n = model.param_dim();
  const auto& fs = model.factors();
  auto at_level = [&](int nodes) {
    std::vector<detail::FactorMoments> mom;
    for (const auto& f : fs) {
      int nn = f.kind == Factor::Kind::bivariate ? std::min(nodes, 256) : nodes;
      mom.push_back(detail::factor_moments(f, model.theta().data() + f.param_offset, nn));
    }
    Matrix g = Matrix::Zero(n, n);
    for (size_t i = 0; i < fs.size(); ++i) {
      for (size_t j = 0; j < fs.size(); ++j) {
        double rest = 1;
        for (size_t k = 0; k < fs.size(); ++k)
          if (k != i && k != j) rest *= mom[k].z;
        int oi = fs[i].param_offset, oj = fs[j].param_offset;
        if (i == j)
          g.block(oi, oi, fs[i].n_params(), fs[i].n_params()) = mom[i].second * rest;
        else
          g.block(oi, oj, fs[i].n_params(), fs[j].n_params()) = mom[i].mean * mom[j].mean.transpose() * rest;
      }
    }
    return Matrix(0.5 * (g + g.transpose()));
  };
  int nodes = spec.nodes;
  Matrix prev = at_level(nodes);
  double change = INFINITY;
  while (2 * nodes <= spec.max_nodes) {
    nodes *= 2;
    Matrix cur = at_level(nodes);
    double scale = cur.cwiseAbs().maxCoeff();
    change = scale > 0 ? (cur - prev).cwiseAbs().maxCoeff() / scale : 0.0;
    prev = cur;
    if (change < spec.rel_tol) {
      if (achieved) *achieved = change;
      return cur;
    }
  }
  throw AccuracyError("Fisher quadrature did not converge", change);
}

inline MetricField fisher_quadrature(const StatModel& model, const QuadSpec& spec = {}) {
  auto eval = [model, spec](const Vector& th) { return fisher_quadrature_matrix(model.with_theta(th), spec); };
  MetricField m(model.param_dim(), eval, MetricSource::quadrature, model.scale_mask());
  m.with_blocks(model.factor_blocks());
  return m;
}

// quadrature normalization of the whole density, a by-product of the same rules
inline double quadrature_normalization(const StatModel& model, int nodes = 128) {
  double z = 1;
  for (const auto& f : model.factors())
    z *= detail::factor_moments(f, model.theta().data() + f.param_offset, nodes).z;
  return z;
}

// Pair metric (1/sigma^2)[[1, r],[r, 2]] per (mu_k, sigma_k); r_k are model constants.
inline MetricField macro_correlated_metric(const std::vector<double>& r) {
  int l = static_cast<int>(r.size());
  if (l < 1) throw DomainError("need at least one pair");
  for (double rk : r)
    if (!(rk >= 0 && rk < 1)) throw DomainError("macro correlation must lie in [0, 1)");
  int n = 2 * l;
  auto jet = [r, l, n](const Vector& th) {
    MetricJet j;
    j.g = Matrix::Zero(n, n);
    j.dg.assign(n, Matrix::Zero(n, n));
    for (int k = 0; k < l; ++k) {
      double s = th(2 * k + 1);
      Matrix b(2, 2);
      b << 1, r[k], r[k], 2;
      j.g.block(2 * k, 2 * k, 2, 2) = b / (s * s);
      j.dg[2 * k + 1].block(2 * k, 2 * k, 2, 2) = -2 * b / (s * s * s);
    }
    return j;
  };
  auto vol = [r, l](const Vector& th) {
    double v = 1;
    for (int k = 0; k < l; ++k) v *= std::sqrt(2 - r[k] * r[k]) / (th(2 * k + 1) * th(2 * k + 1));
    return v;
  };
  std::vector<bool> scale(n, false);
  std::vector<std::vector<int>> blocks;
  for (int k = 0; k < l; ++k) {
    scale[2 * k + 1] = true;
    blocks.push_back({2 * k, 2 * k + 1});
  }
  MetricField m(n, [jet](const Vector& th) { return jet(th).g; }, MetricSource::analytic, scale);
  m.with_jet(jet).with_volume(vol).with_blocks(blocks);
  return m;
}

// Constant metric; used for flat reference manifolds.
inline MetricField constant_metric(const Matrix& g) {
  int n = static_cast<int>(g.rows());
  auto jet = [g, n](const Vector&) {
    MetricJet j;
    j.g = g;
    j.dg.assign(n, Matrix::Zero(n, n));
    return j;
  };
  MetricField m(n, [g](const Vector&) { return g; }, MetricSource::analytic);
  m.with_jet(jet);
  return m;
}

}  // namespace igac
