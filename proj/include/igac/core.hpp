#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace igac {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
// scale coordinates below this are outside the chart
inline constexpr double kChartFloor = 1e-8;

// ---- errors ----

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : Error {
  using Error::Error;
};
struct UnsupportedError : Error {
  using Error::Error;
};
struct AccuracyError : Error {
  AccuracyError(const std::string& what, double est) : Error(what), estimate(est) {}
  double estimate;
};
struct DegenerateMetricError : Error {
  using Error::Error;
};
struct DegeneratePlaneError : Error {
  using Error::Error;
};
struct ChartBoundaryError : Error {
  ChartBoundaryError(const std::string& what, double tau, Vector theta, Vector theta_dot)
      : Error(what), last_tau(tau), last_theta(std::move(theta)), last_theta_dot(std::move(theta_dot)) {}
  double last_tau;
  Vector last_theta;
  Vector last_theta_dot;
};
struct StiffnessError : Error {
  using Error::Error;
};
struct BvpError : Error {
  BvpError(const std::string& what, double best) : Error(what), best_residual(best) {}
  double best_residual;
};
struct FitError : Error {
  using Error::Error;
};
struct InfeasibleError : Error {
  using Error::Error;
};
struct BracketingError : Error {
  using Error::Error;
};
struct UndefinedRateError : Error {
  using Error::Error;
};
struct UndefinedEntropyError : Error {
  using Error::Error;
};
struct RegimeError : Error {
  using Error::Error;
};
struct PoleError : Error {
  using Error::Error;
};
struct BoundViolationError : Error {
  using Error::Error;
};
struct OrderingError : Error {
  using Error::Error;
};

// ---- dense tensors with a shared dimension ----

class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), d_(static_cast<size_t>(n) * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int a, int b, int c) { return d_[(static_cast<size_t>(a) * n_ + b) * n_ + c]; }
  double operator()(int a, int b, int c) const { return d_[(static_cast<size_t>(a) * n_ + b) * n_ + c]; }
  std::vector<double>& data() { return d_; }
  const std::vector<double>& data() const { return d_; }

 private:
  int n_ = 0;
  std::vector<double> d_;
};

class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), d_(static_cast<size_t>(n) * n * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int a, int b, int c, int d) {
    return d_[((static_cast<size_t>(a) * n_ + b) * n_ + c) * n_ + d];
  }
  double operator()(int a, int b, int c, int d) const {
    return d_[((static_cast<size_t>(a) * n_ + b) * n_ + c) * n_ + d];
  }
  double max_abs() const {
    double m = 0;
    for (double x : d_) m = std::max(m, std::abs(x));
    return m;
  }
  const std::vector<double>& data() const { return d_; }

 private:
  int n_ = 0;
  std::vector<double> d_;
};

// ---- Gauss rules (Golub-Welsch) ----

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // absolute accuracy only; tiny tail weights are not relatively exact
};

enum class GaussKind { legendre, hermite, laguerre };

namespace detail {

inline GaussRule golub_welsch(GaussKind kind, int n) {
  Vector diag(n), sub(std::max(n - 1, 1));
  double mu0 = 0;
  for (int k = 0; k < n; ++k) {
    switch (kind) {
      case GaussKind::legendre:
        diag(k) = 0;
        if (k + 1 < n) {
          double j = k + 1;
          sub(k) = j / std::sqrt(4 * j * j - 1);
        }
        mu0 = 2;
        break;
      case GaussKind::hermite:
        diag(k) = 0;
        if (k + 1 < n) sub(k) = std::sqrt((k + 1) / 2.0);
        mu0 = std::sqrt(kPi);
        break;
      case GaussKind::laguerre:
        diag(k) = 2.0 * k + 1;
        if (k + 1 < n) sub(k) = k + 1.0;
        mu0 = 1;
        break;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag, sub.head(std::max(n - 1, 0)), Eigen::ComputeEigenvectors);
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    double v = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v * v;
  }
  if (kind != GaussKind::laguerre) {
    // symmetrize against eigen-solver roundoff
    for (int i = 0; i < n / 2; ++i) {
      int j = n - 1 - i;
      double x = 0.5 * (r.nodes[j] - r.nodes[i]);
      r.nodes[i] = -x;
      r.nodes[j] = x;
      double w = 0.5 * (r.weights[i] + r.weights[j]);
      r.weights[i] = r.weights[j] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  }
  return r;
}

}  // namespace detail

// cached per (kind, n); thread-safe
inline const GaussRule& gauss_rule(GaussKind kind, int n) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(static_cast<int>(kind), n);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, detail::golub_welsch(kind, n)).first;
  return it->second;
}

// ---- counter-based random numbers ----

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// value i of stream s is a pure function of (seed, s, i)
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}
  std::uint64_t next_u64() { return at(counter_++); }
  std::uint64_t at(std::uint64_t i) const {
    return splitmix64(splitmix64(seed_ ^ splitmix64(stream_)) + i * 0xd1b54a32d192ed03ULL);
  }
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

// ---- threading ----

// IGAC_THREADS caps the worker count; 0 or unset means hardware concurrency
inline unsigned thread_budget() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* s = std::getenv("IGAC_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(s, &end, 10);
    if (end != s && v > 0) return static_cast<unsigned>(v);
  }
  return hw;
}

// results must be written to per-index slots so output is order independent
template <class Fn>
void parallel_for(size_t n, Fn&& fn) {
  unsigned workers = static_cast<unsigned>(std::min<size_t>(thread_budget(), n));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto work = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  // lowest failing index wins, independent of scheduling
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline double rel_diff(double a, double b) {
  double s = std::max(std::abs(a), std::abs(b));
  return s == 0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace igac
