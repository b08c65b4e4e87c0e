#pragma once

#include "igac/models.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <functional>
#include <limits>
#include <string>

namespace igac {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- one-dimensional quadrature on a possibly infinite interval ----

struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
};

inline double integrate_1d(const std::function<double(double)>& f, const Interval& d, double tol = 1e-14,
                           double* err = nullptr) {
  using namespace boost::math::quadrature;
  double e = 0, l1 = 0;
  double v;
  if (d.finite()) {
    thread_local tanh_sinh<double> ts(15);
    v = ts.integrate(f, d.lo, d.hi, tol, &e, &l1);
  } else if (std::isfinite(d.lo)) {
    thread_local exp_sinh<double> es(12);
    v = es.integrate([&](double x) { return f(x); }, d.lo, std::numeric_limits<double>::infinity(), tol, &e, &l1);
  } else if (std::isfinite(d.hi)) {
    thread_local exp_sinh<double> es(12);
    v = es.integrate([&](double t) { return f(-t); }, -d.hi, std::numeric_limits<double>::infinity(), tol, &e, &l1);
  } else {
    // two half-lines, so a kink at the origin (absolute-value constraints) sits on an endpoint
    thread_local exp_sinh<double> es(12);
    double e2 = 0;
    const double inf = std::numeric_limits<double>::infinity();
    v = es.integrate([&](double x) { return f(x); }, 0.0, inf, tol, &e, &l1) +
        es.integrate([&](double t) { return f(-t); }, 0.0, inf, tol, &e2, &l1);
    e += e2;
  }
  if (err) *err = e;
  return v;
}

// as integrate_1d, but quadrature breakdown (singular or divergent integrand) yields NaN
inline double try_integrate_1d(const std::function<double(double)>& f, const Interval& d, double tol = 1e-14) {
  try {
    return integrate_1d(f, d, tol);
  } catch (const std::exception&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// ---- problem description ----

struct Constraint {
  enum class Kind { identity, square, absolute, polynomial };
  Kind kind = Kind::identity;
  std::vector<double> coeffs;  // polynomial: c0 + c1 x + c2 x^2 + ...
  double target = 0;

  double operator()(double x) const {
    switch (kind) {
      case Kind::identity: return x;
      case Kind::square: return x * x;
      case Kind::absolute: return std::abs(x);
      case Kind::polynomial: {
        double v = 0;
        for (size_t i = coeffs.size(); i-- > 0;) v = v * x + coeffs[i];
        return v;
      }
    }
    return 0;
  }
  static Constraint identity(double F) { return {Kind::identity, {}, F}; }
  static Constraint square(double F) { return {Kind::square, {}, F}; }
  static Constraint absolute(double F) { return {Kind::absolute, {}, F}; }
  static Constraint polynomial(std::vector<double> c, double F) { return {Kind::polynomial, std::move(c), F}; }
};

struct Prior {
  Interval domain;
  std::function<double(double)> log_density;
  std::string name;
  std::vector<double> params;  // factory arguments, empty for models and tables

  double density(double x) const {
    if (x < domain.lo || x > domain.hi) return 0;
    return std::exp(log_density(x));
  }

  static Prior uniform(double a, double b) {
    if (!(std::isfinite(a) && std::isfinite(b) && b > a)) throw DomainError("uniform prior needs a finite interval");
    double lw = -std::log(b - a);
    return {{a, b}, [lw](double) { return lw; }, "uniform", {a, b}};
  }
  static Prior exponential(double mean) {
    if (!(mean > 0)) throw DomainError("exponential mean must be positive");
    return {{0, kInf}, [mean](double x) { return -std::log(mean) - x / mean; }, "exponential", {mean}};
  }
  static Prior normal(double mu, double sigma) {
    if (!(sigma > 0)) throw DomainError("normal spread must be positive");
    return {{-kInf, kInf},
            [mu, sigma](double x) {
              double z = (x - mu) / sigma;
              return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2 * kPi);
            },
            "normal",
            {mu, sigma}};
  }
  static Prior cauchy(double x0, double gamma) {
    if (!(gamma > 0)) throw DomainError("Cauchy scale must be positive");
    return {{-kInf, kInf},
            [x0, gamma](double x) {
              double z = (x - x0) / gamma;
              return -std::log(kPi * gamma * (1 + z * z));
            },
            "cauchy",
            {x0, gamma}};
  }
  // one-dimensional statistical model at its current parameters
  static Prior from_model(const StatModel& m) {
    if (m.micro_dim() != 1) throw UnsupportedError("prior model must have one microscopic variable");
    Interval d = m.factors()[0].kind == Factor::Kind::gauss ? Interval{} : Interval{0, kInf};
    return {d, [m](double x) { return igac::log_density(m, Vector::Constant(1, x)); }, "model", {}};
  }
  // piecewise-linear density through (x_i, p_i); normalized on [x_0, x_n]
  static Prior tabulated(std::vector<double> xs, std::vector<double> ps) {
    if (xs.size() < 2 || xs.size() != ps.size()) throw DomainError("tabulated prior needs matching grids");
    double z = 0;
    for (size_t i = 0; i + 1 < xs.size(); ++i) {
      if (!(xs[i + 1] > xs[i])) throw DomainError("tabulated grid must increase");
      if (ps[i] < 0) throw DomainError("tabulated density must be nonnegative");
      z += 0.5 * (xs[i + 1] - xs[i]) * (ps[i] + ps[i + 1]);
    }
    if (!(z > 0)) throw DomainError("tabulated density has no mass");
    for (double& p : ps) p /= z;
    auto f = [xs, ps](double x) {
      auto it = std::upper_bound(xs.begin(), xs.end(), x);
      size_t i = it == xs.begin() ? 0 : std::min<size_t>(it - xs.begin() - 1, xs.size() - 2);
      double s = (x - xs[i]) / (xs[i + 1] - xs[i]);
      double p = (1 - s) * ps[i] + s * ps[i + 1];
      return p > 0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    };
    return {{xs.front(), xs.back()}, f, "tabulated", {}};
  }
};

struct MrEProblem {
  Prior prior;
  std::vector<Constraint> constraints;
};

struct MrEResult {
  Vector beta;
  double log_z = 0;
  Vector achieved;
  double objective = 0;  // S[P_new, P_old]
  Prior prior;
  std::vector<Constraint> constraints;
  std::vector<double> table_x;  // 2048 Chebyshev-Lobatto points
  std::vector<double> table_p;
  int iterations = 0;

  double log_density(double x) const {
    double e = prior.log_density(x) - log_z;
    for (size_t i = 0; i < constraints.size(); ++i) e += beta(i) * constraints[i](x);
    return e;
  }
  double density(double x) const {
    if (x < prior.domain.lo || x > prior.domain.hi) return 0;
    return std::exp(log_density(x));
  }
  // posterior as a prior for a further update
  Prior as_prior() const {
    MrEResult self = *this;
    return {prior.domain, [self](double x) { return self.log_density(x); }, "posterior", {}};
  }
};

namespace detail {

// tilt exponent log P_old + beta . f
struct Tilt {
  const MrEProblem& pb;
  Vector beta;
  double exponent(double x) const {
    double e = pb.prior.log_density(x);
    for (size_t i = 0; i < pb.constraints.size(); ++i) e += beta(i) * pb.constraints[i](x);
    return e;
  }
};

inline std::vector<double> probe_points(const Interval& d) {
  std::vector<double> xs;
  if (d.finite()) {
    for (int i = 0; i <= 512; ++i) xs.push_back(d.lo + (d.hi - d.lo) * i / 512.0);
  } else {
    double c = std::isfinite(d.lo) ? d.lo : (std::isfinite(d.hi) ? d.hi : 0.0);
    for (int i = 0; i <= 400; ++i) {
      double t = std::sinh(8.0 * i / 400);
      if (std::isfinite(d.lo)) xs.push_back(c + t);
      if (std::isfinite(d.hi)) xs.push_back(c - t);
      if (!std::isfinite(d.lo) && !std::isfinite(d.hi)) {
        xs.push_back(c + t);
        xs.push_back(c - t);
      }
    }
  }
  return xs;
}

// Tail probe: integrand g is taken as integrable when x g(x) keeps falling over the last decades.
inline bool tail_diverges(const Tilt& tl, const std::function<double(double)>& log_weight) {
  const Interval& d = tl.pb.prior.domain;
  auto grows = [&](double sgn) {
    double h[3];
    for (int i = 0; i < 3; ++i) {
      double x = sgn * std::pow(10.0, 4 + i);
      h[i] = tl.exponent(x) + log_weight(x) + std::log(std::abs(x));
    }
    if (std::isnan(h[2])) return true;
    if (h[2] == -kInf) return false;
    return !(h[2] < h[1] - 0.5 && h[1] < h[0] - 0.5);
  };
  return (!std::isfinite(d.hi) && grows(1)) || (!std::isfinite(d.lo) && grows(-1));
}

struct TiltMoments {
  bool finite = true;
  double log_z = 0;
  Vector mean;
  Matrix cov;
};

inline TiltMoments tilt_moments(const MrEProblem& pb, const Vector& beta, bool with_cov) {
  Tilt tl{pb, beta};
  TiltMoments m;
  int k = static_cast<int>(pb.constraints.size());
  if (tail_diverges(tl, [](double) { return 0.0; })) {
    m.finite = false;
    return m;
  }
  for (const auto& c : pb.constraints)
    if (tail_diverges(tl, [&c](double x) { return std::log(std::abs(c(x))); })) {
      m.finite = false;
      return m;
    }
  double shift = -kInf;
  for (double x : probe_points(pb.prior.domain)) {
    double e = tl.exponent(x);
    if (std::isfinite(e)) shift = std::max(shift, e);
  }
  if (!std::isfinite(shift)) {
    m.finite = false;
    return m;
  }
  auto w = [&](double x) {
    double e = tl.exponent(x) - shift;
    return e < -745 ? 0.0 : std::exp(e);
  };
  const Interval& d = pb.prior.domain;
  double z = try_integrate_1d(w, d);
  if (!(z > 0) || !std::isfinite(z)) {
    m.finite = false;
    return m;
  }
  m.log_z = shift + std::log(z);
  m.mean = Vector::Zero(k);
  for (int i = 0; i < k; ++i)
    m.mean(i) = try_integrate_1d([&](double x) { double v = w(x); return v == 0 ? 0.0 : v * pb.constraints[i](x); }, d) / z;
  if (with_cov) {
    m.cov = Matrix::Zero(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j) {
        double c = try_integrate_1d(
            [&](double x) {
              double v = w(x);
              return v == 0 ? 0.0 : v * (pb.constraints[i](x) - m.mean(i)) * (pb.constraints[j](x) - m.mean(j));
            },
            d);
        m.cov(i, j) = m.cov(j, i) = c / z;
      }
  }
  for (int i = 0; i < k; ++i)
    if (!std::isfinite(m.mean(i))) m.finite = false;
  return m;
}

inline void fill_table(MrEResult& r) {
  Interval d = r.prior.domain;
  double a = d.lo, b = d.hi;
  if (!d.finite()) {
    // mean +- 40 std of the identity moment, clipped to the domain
    MrEProblem pb{r.prior, r.constraints};
    auto w = [&](double x) { return r.density(x); };
    double mean = integrate_1d([&](double x) { return x * w(x); }, d);
    double var = integrate_1d([&](double x) { return (x - mean) * (x - mean) * w(x); }, d);
    double sd = std::sqrt(std::max(var, 0.0));
    a = std::max(d.lo, mean - 40 * sd);
    b = std::min(d.hi, mean + 40 * sd);
  }
  const int n = 2048;
  r.table_x.resize(n);
  r.table_p.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = 0.5 * (a + b) - 0.5 * (b - a) * std::cos(kPi * i / (n - 1));
    if (i == 0) x = a;
    if (i == n - 1) x = b;
    r.table_x[i] = x;
    r.table_p[i] = r.density(x);
  }
}

inline MrEResult finish(const MrEProblem& pb, const Vector& beta, const TiltMoments& m, int iters) {
  MrEResult r;
  r.beta = beta;
  r.log_z = m.log_z;
  r.achieved = m.mean;
  r.objective = m.log_z - beta.dot(m.mean);
  r.prior = pb.prior;
  r.constraints = pb.constraints;
  r.iterations = iters;
  fill_table(r);
  return r;
}

inline void validate(const MrEProblem& pb) {
  if (pb.constraints.empty()) throw DomainError("at least one constraint is required");
  for (const auto& c : pb.constraints)
    if (!std::isfinite(c.target)) throw DomainError("constraint target must be finite");
  double z = integrate_1d([&](double x) { return std::exp(pb.prior.log_density(x)); }, pb.prior.domain);
  if (!(std::abs(z - 1) < 1e-8)) throw DomainError("prior is not normalized on its domain");
}

// On a finite domain Z never diverges, so an unreachable target lies outside the range of f.
[[noreturn]] inline void unreachable(const MrEProblem& pb) {
  if (pb.prior.domain.finite()) throw BracketingError("target lies outside the range attainable by tilting");
  throw InfeasibleError("target is not reachable before the partition function diverges");
}

inline MrEResult solve_scalar(const MrEProblem& pb, double tol) {
  double F = pb.constraints[0].target;
  auto eval = [&](double b) { return tilt_moments(pb, Vector::Constant(1, b), true); };
  TiltMoments m0 = eval(0);
  if (!m0.finite) throw InfeasibleError("constraint expectation diverges under the prior");
  // residual with divergence mapped to the sign of the side it occurs on
  auto resid = [&](double b, TiltMoments& m) {
    m = eval(b);
    if (!m.finite) return b > 0 ? kInf : -kInf;
    return m.mean(0) - F;
  };
  double r0 = m0.mean(0) - F;
  if (r0 == 0) return finish(pb, Vector::Zero(1), m0, 0);
  double lo = -1, hi = 1;
  TiltMoments mlo, mhi;
  double rlo = resid(lo, mlo), rhi = resid(hi, mhi);
  double sgn = r0 > 0 ? -1.0 : 1.0;  // direction in which the root lies
  double inner = 0;                  // last finite point on the root side
  for (int it = 0; sgn > 0 ? rhi < 0 : rlo > 0; ++it) {
    if (it > 60) throw BracketingError("no sign change in the constraint residual");
    if (sgn > 0) {
      inner = hi;
      hi *= 2;
      rhi = resid(hi, mhi);
    } else {
      inner = lo;
      lo *= 2;
      rlo = resid(lo, mlo);
    }
  }
  if (sgn > 0) {
    lo = std::max(lo, inner == 0 ? lo : inner);
    if (inner != 0) rlo = resid(lo, mlo);
    if (rlo > 0) {
      lo = 0;
      rlo = r0;
    }
  } else {
    hi = std::min(hi, inner == 0 ? hi : inner);
    if (inner != 0) rhi = resid(hi, mhi);
    if (rhi < 0) {
      hi = 0;
      rhi = r0;
    }
  }
  // safeguarded Newton inside [lo, hi]
  double b = std::isfinite(rlo) && std::isfinite(rhi) ? 0.5 * (lo + hi) : (std::isfinite(rlo) ? lo : hi);
  if (lo < 0 && hi > 0) b = 0;
  TiltMoments m;
  int iters = 0;
  for (; iters < 400; ++iters) {
    double r = resid(b, m);
    if (std::isfinite(r)) {
      if (r < 0) lo = b;
      else hi = b;
      if (std::abs(r) <= tol) break;
    } else {
      if (r > 0) hi = b;
      else lo = b;
    }
    double next = std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(r) && m.cov(0, 0) > 0) next = b - r / m.cov(0, 0);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - b) <= 1e-15 * std::max(1.0, std::abs(b)) && std::isfinite(r)) {
      b = next;
      break;
    }
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(b))) {
      if (!std::isfinite(r)) unreachable(pb);
      break;
    }
    b = next;
  }
  double r = resid(b, m);
  if (!std::isfinite(r)) unreachable(pb);
  if (std::abs(r) > std::max(tol, 1e-9)) throw BracketingError("multiplier solve stalled");
  return finish(pb, Vector::Constant(1, b), m, iters);
}

inline MrEResult solve_multi(const MrEProblem& pb, double tol) {
  int k = static_cast<int>(pb.constraints.size());
  Vector F(k);
  for (int i = 0; i < k; ++i) F(i) = pb.constraints[i].target;
  Vector beta = Vector::Zero(k);
  TiltMoments m = tilt_moments(pb, beta, true);
  if (!m.finite) throw InfeasibleError("constraint expectation diverges under the prior");
  auto dual = [&](const TiltMoments& t, const Vector& b) { return t.log_z - b.dot(F); };
  int iters = 0;
  for (; iters < 200; ++iters) {
    Vector g = m.mean - F;
    if (g.cwiseAbs().maxCoeff() <= tol) break;
    // covariance is PSD; lift it until the factorization is clean
    Matrix H = m.cov;
    double lift = 0, scale = std::max(H.trace(), 1e-300);
    Eigen::LDLT<Matrix> ldlt(H);
    while (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-14 * scale)) {
      lift = lift == 0 ? 1e-12 * scale : lift * 10;
      if (lift > scale) throw InfeasibleError("constraint functions are degenerate under the current posterior");
      ldlt.compute(H + lift * Matrix::Identity(k, k));
    }
    Vector step = -ldlt.solve(g);
    double d0 = dual(m, beta), alpha = 1;
    bool moved = false;
    for (int s = 0; s < 60; ++s, alpha *= 0.5) {
      Vector trial = beta + alpha * step;
      TiltMoments mt = tilt_moments(pb, trial, true);
      if (mt.finite && dual(mt, trial) <= d0 + 1e-15 * std::abs(d0)) {
        beta = trial;
        m = mt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if ((m.mean - F).cwiseAbs().maxCoeff() > std::max(tol, 1e-9))
    throw InfeasibleError("targets are not reachable by an exponential tilt of the prior");
  return finish(pb, beta, m, iters);
}

}  // namespace detail

// Finds beta with d lnZ / d beta = F; posterior P_old e^{beta f} / Z.
inline MrEResult solve_multiplier(const MrEProblem& pb, double tol = 1e-12) {
  detail::validate(pb);
  if (pb.constraints.size() == 1) return detail::solve_scalar(pb, tol);
  return detail::solve_multi(pb, tol);
}

// First and second moment update; variance must be positive.
inline MrEResult update_two_moments(const Prior& prior, double mean, double second, double tol = 1e-12) {
  if (!(second - mean * mean > 0)) throw InfeasibleError("second moment must exceed the squared mean");
  return solve_multiplier({prior, {Constraint::identity(mean), Constraint::square(second)}}, tol);
}

// S[p, q] = -int p ln(p / q) from log densities; -inf marks zero density
inline double relative_entropy_log(const std::function<double(double)>& log_p,
                                   const std::function<double(double)>& log_q, const Interval& d) {
  bool violated = false;
  double s = integrate_1d(
      [&](double x) {
        double lp = log_p(x);
        if (lp == -kInf || lp < -745) return 0.0;
        double lq = log_q(x);
        if (lq == -kInf) {
          violated = true;
          return 0.0;
        }
        return -std::exp(lp) * (lp - lq);
      },
      d);
  if (violated) throw DomainError("p is not absolutely continuous with respect to q");
  return s;
}

inline double relative_entropy(const std::function<double(double)>& p, const std::function<double(double)>& q,
                               const Interval& d) {
  auto lg = [](const std::function<double(double)>& f) {
    return [&f](double x) {
      double v = f(x);
      return v > 0 ? std::log(v) : -kInf;
    };
  };
  return relative_entropy_log(lg(p), lg(q), d);
}

struct PerturbationCheck {
  int trials = 0;
  int passed = 0;
  double worst_gap = -kInf;  // max of S[perturbed] - S[posterior]
};

// Random constraint-preserving perturbations p = post (1 + eps h) never score higher.
inline PerturbationCheck perturbation_check(const MrEResult& res, int trials, std::uint64_t seed) {
  Interval w{res.table_x.front(), res.table_x.back()};
  // adaptive panels keep the quadrature resolving a narrow posterior on a wide window
  auto integ = [&](const std::function<double(double)>& f) {
    const int panels = 32;
    double s = 0;
    for (int i = 0; i < panels; ++i)
      s += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          f, w.lo + (w.hi - w.lo) * i / panels, w.lo + (w.hi - w.lo) * (i + 1) / panels, 12, 1e-13);
    return s;
  };
  auto post = [&](double x) { return res.density(x); };
  int k = static_cast<int>(res.constraints.size());
  std::vector<std::function<double(double)>> phi{[](double) { return 1.0; }};
  for (const auto& c : res.constraints) phi.push_back([c](double x) { return c(x); });
  int m = k + 1;
  Matrix G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) G(i, j) = G(j, i) = integ([&](double x) { return post(x) * phi[i](x) * phi[j](x); });
  PerturbationCheck out;
  const int modes = 6;
  for (int t = 0; t < trials; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    std::vector<double> c(modes);
    for (double& v : c) v = rng.uniform(-1, 1);
    auto raw = [&](double x) {
      double u = (x - w.lo) / (w.hi - w.lo), v = 0;
      for (int j = 0; j < modes; ++j) v += c[j] * std::cos((j + 1) * kPi * u);
      return v;
    };
    Vector rhs(m);
    for (int i = 0; i < m; ++i) rhs(i) = integ([&](double x) { return post(x) * raw(x) * phi[i](x); });
    Vector a = G.ldlt().solve(rhs);
    auto h = [&](double x) {
      double v = raw(x);
      for (int i = 0; i < m; ++i) v -= a(i) * phi[i](x);
      return v;
    };
    double sup = 0;
    for (int i = 0; i <= 8192; ++i) sup = std::max(sup, std::abs(h(w.lo + (w.hi - w.lo) * i / 8192.0)));
    double eps = sup > 0 ? 0.5 / sup : 0;
    // S[perturbed] - S[post]; the perturbation vanishes outside the window
    double gap = integ([&](double x) {
      double lp = res.log_density(x);
      if (lp < -745) return 0.0;
      double rel = lp - res.prior.log_density(x), q = 1 + eps * h(x);
      return std::exp(lp) * (rel - q * (rel + std::log(q)));
    });
    ++out.trials;
    if (gap <= 1e-9) ++out.passed;
    out.worst_gap = std::max(out.worst_gap, gap);
  }
  return out;
}

}  // namespace igac
