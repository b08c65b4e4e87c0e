#pragma once

#include "igac/dynamics.hpp"

#include <limits>
#include <optional>
#include <string>

namespace igac {

inline double volume_element(const MetricField& metric, const Vector& th) { return metric.sqrt_det(th); }

// ---- region volume over the coordinate box traced by a path ----

struct VolumeOptions {
  int start_nodes = 32;
  int max_nodes = 256;
  double rel_tol = 1e-6;
  long max_points = 1L << 23;  // per block, per level
};

namespace detail {

// Tensor-product Gauss-Legendre over the axes of one block. Scale axes are mapped to log variables.
class BlockIntegrand {
 public:
  BlockIntegrand(const MetricField& m, std::vector<int> axes, const Vector& lo, const Vector& hi)
      : m_(m), axes_(std::move(axes)), lo_(lo), hi_(hi), x_(0.5 * (lo + hi)) {
    whole_ = static_cast<int>(axes_.size()) == m.dim();
    for (int a : axes_) {
      bool lg = m.is_scale(a) && lo(a) > 0;
      log_.push_back(lg);
      a_.push_back(lg ? std::log(lo(a)) : lo(a));
      b_.push_back(lg ? std::log(hi(a)) : hi(a));
    }
  }

  double integrate(int n) {
    const GaussRule& gr = gauss_rule(GaussKind::legendre, n);
    int k = static_cast<int>(axes_.size());
    std::vector<std::vector<double>> xs(k, std::vector<double>(n)), ws(k, std::vector<double>(n));
    for (int j = 0; j < k; ++j) {
      double half = 0.5 * (b_[j] - a_[j]);
      for (int q = 0; q < n; ++q) {
        double t = a_[j] + half * (gr.nodes[q] + 1);
        xs[j][q] = log_[j] ? std::exp(t) : t;
        ws[j][q] = gr.weights[q] * half * (log_[j] ? xs[j][q] : 1.0);
      }
    }
    std::vector<int> idx(k, 0);
    for (int j = 0; j < k; ++j) x_(axes_[j]) = xs[j][0];
    double total = 0;
    for (;;) {
      double w = 1;
      for (int j = 0; j < k; ++j) w *= ws[j][idx[j]];
      total += w * density();
      int j = 0;
      while (j < k && ++idx[j] == n) {
        idx[j] = 0;
        x_(axes_[j]) = xs[j][0];
        ++j;
      }
      if (j == k) break;
      x_(axes_[j]) = xs[j][idx[j]];
    }
    return total;
  }

 private:
  double density() {
    if (whole_) return m_.sqrt_det_unchecked(x_);
    Matrix g = m_.eval(x_);
    int k = static_cast<int>(axes_.size());
    Matrix b(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) b(i, j) = g(axes_[i], axes_[j]);
    Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success) throw DegenerateMetricError("metric block not positive definite");
    double v = 1;
    for (int i = 0; i < k; ++i) v *= llt.matrixL()(i, i);
    return v;
  }

  const MetricField& m_;
  std::vector<int> axes_;
  Vector lo_, hi_, x_;
  bool whole_ = false;
  std::vector<bool> log_;
  std::vector<double> a_, b_;
};

}  // namespace detail

// Iterated integral of sqrt(det g) over [lo, hi]; blocks of a separable metric are integrated apart.
inline double box_volume(const MetricField& metric, const Vector& lo, const Vector& hi, const VolumeOptions& opt = {}) {
  int n = metric.dim();
  for (int a = 0; a < n; ++a) {
    if (!(hi(a) >= lo(a))) throw DomainError("box bounds out of order");
    if (hi(a) == lo(a)) return 0.0;
  }
  metric.check_chart(lo);
  metric.check_chart(hi);
  double total = 1;
  for (const auto& axes : metric.blocks()) {
    detail::BlockIntegrand f(metric, axes, lo, hi);
    int nodes = opt.start_nodes;
    double prev = f.integrate(nodes);
    for (;;) {
      if (2 * nodes > opt.max_nodes ||
          std::pow(2.0 * nodes, static_cast<double>(axes.size())) > static_cast<double>(opt.max_points))
        throw AccuracyError("box volume did not converge", prev);
      nodes *= 2;
      double cur = f.integrate(nodes);
      bool done = rel_diff(cur, prev) < opt.rel_tol;
      prev = cur;
      if (done) break;
    }
    total *= prev;
  }
  return total;
}

namespace detail {

struct BoxTracker {
  Vector lo, hi;
  void add(const Vector& th) {
    if (lo.size() == 0) {
      lo = hi = th;
      return;
    }
    lo = lo.cwiseMin(th);
    hi = hi.cwiseMax(th);
  }
};

// running per-coordinate bounds at each grid point, refined with dense output between samples
inline std::vector<BoxTracker> running_boxes(const GeodesicPath& path, int sub = 8) {
  std::vector<BoxTracker> out(path.size());
  BoxTracker b;
  for (size_t i = 0; i < path.size(); ++i) {
    if (i > 0 && path.dense)
      for (int s = 1; s < sub; ++s) {
        double t = path.tau[i - 1] + (path.tau[i] - path.tau[i - 1]) * s / sub;
        b.add(path.at(t).first);
      }
    b.add(path.theta[i]);
    out[i] = b;
  }
  return out;
}

}  // namespace detail

// Volume of the coordinate bounding box of the path over [tau_0, tau].
inline double volume_between(const MetricField& metric, const GeodesicPath& path, double tau,
                             const VolumeOptions& opt = {}) {
  if (path.size() == 0) throw DomainError("empty path");
  if (tau < path.tau.front() || tau > path.tau.back() * (1 + 1e-12)) throw DomainError("tau outside the path range");
  detail::BoxTracker b;
  for (size_t i = 0; i < path.size() && path.tau[i] <= tau; ++i) {
    if (i > 0 && path.dense)
      for (int s = 1; s < 8; ++s) {
        double t = path.tau[i - 1] + (path.tau[i] - path.tau[i - 1]) * s / 8;
        b.add(path.at(t).first);
      }
    b.add(path.theta[i]);
  }
  if (path.dense) b.add(path.at(tau).first);
  return box_volume(metric, b.lo, b.hi, opt);
}

// ---- traces and fits ----

enum class FitForm { linear, logarithmic, power, exponential, ige_saturating };

inline const char* form_name(FitForm f) {
  switch (f) {
    case FitForm::linear: return "linear";
    case FitForm::logarithmic: return "logarithmic";
    case FitForm::power: return "power";
    case FitForm::exponential: return "exponential";
    case FitForm::ige_saturating: return "ige_saturating";
  }
  return "?";
}

struct AsymptoticFit {
  FitForm form = FitForm::linear;
  std::vector<double> params;
  double r2 = 0;
  double tau_lo = 0, tau_hi = 0;
};

struct ComplexityTrace {
  std::vector<double> tau;
  std::vector<double> delta_v;
  std::vector<double> igc;
  std::vector<double> ige;  // -inf where igc == 0
  std::optional<AsymptoticFit> fit;
  std::string region = "coordinate bounding box";
  size_t size() const { return tau.size(); }
};

namespace detail {

// integral over [x[i], x[i+1]] of the cubic through the four nearest nodes
inline double cubic_panel(const std::vector<double>& x, const std::vector<double>& y, size_t i) {
  size_t n = x.size();
  if (n < 4) return 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
  size_t s = i == 0 ? 0 : std::min(i - 1, n - 4);
  const GaussRule& gr = gauss_rule(GaussKind::legendre, 3);
  double half = 0.5 * (x[i + 1] - x[i]), mid = 0.5 * (x[i + 1] + x[i]), total = 0;
  for (int q = 0; q < 3; ++q) {
    double t = mid + half * gr.nodes[q], p = 0;
    for (size_t j = s; j < s + 4; ++j) {
      double l = 1;
      for (size_t k = s; k < s + 4; ++k)
        if (k != j) l *= (t - x[k]) / (x[j] - x[k]);
      p += l * y[j];
    }
    total += gr.weights[q] * p;
  }
  return half * total;
}

}  // namespace detail

// cumulative (1/(tau - tau_0)) * integral of v from tau_0
inline std::vector<double> running_average(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> out(x.size());
  double acc = 0;
  out[0] = y[0];
  for (size_t i = 0; i + 1 < x.size(); ++i) {
    acc += detail::cubic_panel(x, y, i);
    out[i + 1] = acc / (x[i + 1] - x[0]);
  }
  return out;
}

inline ComplexityTrace trace_from_volumes(std::vector<double> tau, std::vector<double> dv) {
  ComplexityTrace tr;
  tr.tau = std::move(tau);
  tr.delta_v = std::move(dv);
  tr.igc = running_average(tr.tau, tr.delta_v);
  tr.igc[0] = tr.delta_v[0];
  for (double c : tr.igc) tr.ige.push_back(c > 0 ? std::log(c) : -std::numeric_limits<double>::infinity());
  return tr;
}

// Delta V at every path grid point (parallel), then IGC and IGE
inline ComplexityTrace complexity_trace(const MetricField& metric, const GeodesicPath& path,
                                        const VolumeOptions& opt = {}) {
  if (path.size() < 2) throw DomainError("path needs at least two points");
  auto boxes = detail::running_boxes(path);
  std::vector<double> dv(path.size());
  parallel_for(path.size(), [&](size_t i) { dv[i] = box_volume(metric, boxes[i].lo, boxes[i].hi, opt); });
  // guard monotonicity against quadrature noise at the 1e-6 level
  for (size_t i = 1; i < dv.size(); ++i) dv[i] = std::max(dv[i], dv[i - 1]);
  return trace_from_volumes(path.tau, std::move(dv));
}

inline double igc(const MetricField& metric, const GeodesicPath& path, double tau, const VolumeOptions& opt = {}) {
  if (!(tau > 0)) throw DomainError("tau must be positive");
  std::vector<double> grid;
  for (double t : path.tau)
    if (t < tau) grid.push_back(t);
  grid.push_back(tau);
  if (grid.size() < 2) throw DomainError("tau outside the path range");
  GeodesicPath p = path.dense ? resample(metric, path, grid) : path;
  return complexity_trace(metric, p, opt).igc.back();
}

inline double ige(const MetricField& metric, const GeodesicPath& path, double tau, const VolumeOptions& opt = {}) {
  double c = igc(metric, path, tau, opt);
  if (!(c > 0)) throw UndefinedEntropyError("complexity vanishes; entropy undefined");
  return std::log(c);
}

struct LineFit {
  double slope = 0, intercept = 0, r2 = 0;
};

inline double r_squared(const std::vector<double>& y, const std::vector<double>& yhat) {
  double mean = 0;
  for (double v : y) mean += v;
  mean /= y.size();
  double ss_tot = 0, ss_res = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    ss_tot += (y[i] - mean) * (y[i] - mean);
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  }
  if (ss_tot == 0) return ss_res == 0 ? 1.0 : 0.0;
  return std::clamp(1 - ss_res / ss_tot, 0.0, 1.0);
}

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw FitError("need at least two points");
  Matrix A(x.size(), 2);
  Vector b(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw FitError("non-finite sample in fit");
    A(i, 0) = x[i];
    A(i, 1) = 1;
    b(i) = y[i];
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  if (qr.rank() < 2) throw FitError("rank-deficient design");
  Vector c = qr.solve(b);
  LineFit f{c(0), c(1), 0};
  std::vector<double> yhat(x.size());
  for (size_t i = 0; i < x.size(); ++i) yhat[i] = c(0) * x[i] + c(1);
  f.r2 = r_squared(y, yhat);
  return f;
}

struct FitOptions {
  double window_fraction = 0.25;  // leading share of the tau range dropped as transient
  int l = 1;                      // prefactor of the saturating form
  size_t min_points = 32;
};

// S = a tau + b | a ln tau + b | l ln(L1 + L2/tau); C = a tau^b | a e^(b tau)
inline AsymptoticFit fit_asymptotics(const ComplexityTrace& tr, FitForm form, const FitOptions& opt = {}) {
  if (tr.size() < 2) throw FitError("trace too short");
  if (!(opt.window_fraction >= 0 && opt.window_fraction < 1)) throw DomainError("window fraction must lie in [0, 1)");
  double t0 = tr.tau.front(), t1 = tr.tau.back();
  double lo = t0 + opt.window_fraction * (t1 - t0);
  std::vector<double> t, s;
  for (size_t i = 0; i < tr.size(); ++i)
    if (tr.tau[i] >= lo && tr.tau[i] > 0 && std::isfinite(tr.ige[i])) {
      t.push_back(tr.tau[i]);
      s.push_back(tr.ige[i]);
    }
  if (t.size() < opt.min_points) throw FitError("fewer than the minimum points in the fit window");
  AsymptoticFit f;
  f.form = form;
  f.tau_lo = t.front();
  f.tau_hi = t.back();
  std::vector<double> x(t.size());
  switch (form) {
    case FitForm::linear:
    case FitForm::exponential: {
      LineFit lf = fit_line(t, s);
      f.params = form == FitForm::linear ? std::vector<double>{lf.slope, lf.intercept}
                                         : std::vector<double>{std::exp(lf.intercept), lf.slope};
      f.r2 = lf.r2;
      break;
    }
    case FitForm::logarithmic:
    case FitForm::power: {
      for (size_t i = 0; i < t.size(); ++i) x[i] = std::log(t[i]);
      LineFit lf = fit_line(x, s);
      f.params = form == FitForm::logarithmic ? std::vector<double>{lf.slope, lf.intercept}
                                              : std::vector<double>{std::exp(lf.intercept), lf.slope};
      f.r2 = lf.r2;
      break;
    }
    case FitForm::ige_saturating: {
      // linear start on exp(S/l) = L1 + L2/tau, then Gauss-Newton on S itself
      if (opt.l < 1) throw DomainError("l must be positive");
      double l = opt.l;
      std::vector<double> e(t.size());
      for (size_t i = 0; i < t.size(); ++i) {
        x[i] = 1 / t[i];
        e[i] = std::exp(s[i] / l);
      }
      LineFit lf = fit_line(x, e);
      double L1 = lf.intercept, L2 = lf.slope;
      auto model = [&](double a, double b, double tt) { return l * std::log(a + b / tt); };
      for (int it = 0; it < 50; ++it) {
        Matrix J(t.size(), 2);
        Vector res(t.size());
        bool ok = true;
        for (size_t i = 0; i < t.size(); ++i) {
          double arg = L1 + L2 / t[i];
          if (!(arg > 0)) {
            ok = false;
            break;
          }
          res(i) = s[i] - l * std::log(arg);
          J(i, 0) = l / arg;
          J(i, 1) = l / (arg * t[i]);
        }
        if (!ok) break;
        Eigen::ColPivHouseholderQR<Matrix> qr(J);
        if (qr.rank() < 2) throw FitError("rank-deficient design");
        Vector d = qr.solve(res);
        L1 += d(0);
        L2 += d(1);
        if (d.norm() < 1e-14 * (1 + std::abs(L1) + std::abs(L2))) break;
      }
      std::vector<double> yhat(t.size());
      for (size_t i = 0; i < t.size(); ++i) {
        double arg = L1 + L2 / t[i];
        yhat[i] = arg > 0 ? model(L1, L2, t[i]) : std::numeric_limits<double>::quiet_NaN();
      }
      for (double v : yhat)
        if (!std::isfinite(v)) throw FitError("saturating form leaves its domain");
      f.params = {L1, L2};
      f.r2 = r_squared(s, yhat);
      break;
    }
  }
  return f;
}

// ---- closed forms for the wave-packet manifold ----

// IGC closed form with lambda = 2 A0
inline double wavepacket_igc_closed(double lambda, double tau, double r) {
  double pre = 8 * std::sqrt((1 - r) / (1 + r)) / lambda;
  return pre * (-0.75 * lambda + 0.25 * std::sinh(lambda * tau) / tau + std::tanh(0.5 * lambda * tau) / tau);
}

// large-tau entropy lambda tau - ln(lambda tau) + (1/2) ln((1-r)/(1+r))
inline double wavepacket_ige_asymptotic(double lambda, double tau, double r) {
  return lambda * tau - std::log(lambda * tau) + 0.5 * std::log((1 - r) / (1 + r));
}

}  // namespace igac
