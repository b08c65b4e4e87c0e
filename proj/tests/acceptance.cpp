#include "igac/cli_io.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

using namespace igac;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [miss: " << what << "]";
    }
  }
};

int failures = 0;

template <class Fn>
void criterion(int id, const char* title, Fn fn) {
  Outcome o;
  try {
    fn(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d. %s:%s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.str().c_str());
  std::fflush(stdout);
}

std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", x);
  return b;
}

Vector packet_dj(const MetricField& m, const GeodesicPath& p) {
  Vector seed(3);
  seed << 1, 1, 0;
  return detail::unit_orthogonal(m.eval(p.theta[0]), p.theta_dot[0], seed);
}

}  // namespace

int main() {
  const WavePacketParams packet{20, 2, 1, 0.5};

  criterion(1, "uncorrelated Gaussian scalar curvature equals -l", [](Outcome& o) {
    auto t0 = std::chrono::steady_clock::now();
    double worst_a = 0, worst_q = 0;
    for (int l = 1; l <= 3; ++l) {
      std::vector<double> th;
      for (int k = 0; k < l; ++k) {
        th.push_back(0.5 * k - 0.3);
        th.push_back(0.8 + 0.6 * k);
      }
      StatModel m = StatModel::gaussian_diag(th);
      worst_a = std::max(worst_a, std::abs(ricci_scalar(analytic_fisher(m), m.theta()) + l));
      worst_q = std::max(worst_q, std::abs(ricci_scalar(fisher_quadrature(m), m.theta()) + l));
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.detail << " analytic err " << fmt(worst_a) << ", quadrature err " << fmt(worst_q) << ", " << fmt(secs) << " s";
    o.require(worst_a < 1e-6, "analytic within 1e-6");
    o.require(worst_q < 1e-4, "quadrature within 1e-4");
    o.require(secs < 5, "runtime under 5 s");
  });

  criterion(2, "wave-packet manifold sectional -1/4, scalar -3/2, Weyl zero", [](Outcome& o) {
    double ws = 0, wr = 0, ww = 0;
    for (double r : {0.1, 0.5, 0.9}) {
      CurvatureReport cr =
          curvature_report(analytic_fisher(StatModel::gaussian_bivariate_corr(0, 0, 1, r)), Vector::Constant(3, 0.7));
      for (const auto& s : cr.sectional) ws = std::max(ws, std::abs(s.k + 0.25));
      wr = std::max(wr, std::abs(cr.scalar + 1.5));
      ww = std::max(ww, cr.weyl_max_abs);
    }
    o.detail << " sectional err " << fmt(ws) << ", scalar err " << fmt(wr) << ", max|W| " << fmt(ww);
    o.require(ws < 1e-6 && wr < 1e-6, "curvatures within 1e-6");
    o.require(ww < 1e-8, "Weyl below 1e-8");
  });

  criterion(3, "numeric geodesics match tanh/cosh closed forms", [&](Outcome& o) {
    MetricField m = analytic_fisher(StatModel::gaussian_bivariate_corr(0, 0, 1, packet.r));
    GeodesicPath p = integrate_geodesic(m, wavepacket_geodesics(packet, 0, Branch::after).vec(),
                                        wavepacket_velocity(packet, 0, Branch::after).vec(), 5 / packet.A0(), 1e-10, 201);
    double err = 0;
    for (size_t i = 0; i < p.size(); ++i)
      err = std::max(err, (p.theta[i] - wavepacket_geodesics(packet, p.tau[i], Branch::after).vec()).cwiseAbs().maxCoeff());
    o.detail << " max err " << fmt(err) << ", speed drift " << fmt(p.max_speed_drift());
    o.require(err < 1e-6, "componentwise error below 1e-6");
    o.require(p.max_speed_drift() < 1e-8, "speed drift below 1e-8");
  });

  criterion(4, "Jacobi intensity and Lyapunov estimate", [&](Outcome& o) {
    double worst = 0, spread = 0;
    std::vector<double> lyap;
    for (double r : {0.0, 0.2, 0.5}) {
      WavePacketParams p = packet;
      p.r = r;
      MetricField m = analytic_fisher(StatModel::gaussian_bivariate_corr(0, 0, 1, r));
      GeodesicPath path = integrate_geodesic(m, wavepacket_geodesics(p, 0, Branch::after).vec(),
                                             wavepacket_velocity(p, 0, Branch::after).vec(), 20 / p.A0(), 1e-10, 401);
      JacobiTrace jt = integrate_jacobi(m, path, Vector::Zero(3), packet_dj(m, path));
      for (size_t i = 1; i < jt.size() && jt.tau[i] <= 10 / p.A0() * (1 + 1e-12); ++i)
        worst = std::max(worst, std::abs(jt.intensity[i] / wavepacket_jacobi_intensity(p, 1, jt.tau[i]) - 1));
      lyap.push_back(lyapunov_estimate(jt).value);
    }
    double target = 2 * packet.A0();
    for (double v : lyap) spread = std::max(spread, std::abs(v / target - 1));
    o.detail << " intensity rel err " << fmt(worst) << ", lyapunov " << fmt(lyap[0]) << "/" << fmt(lyap[1]) << "/"
             << fmt(lyap[2]) << " vs " << fmt(target);
    o.require(worst < 1e-4, "intensity within 1e-4");
    o.require(spread < 0.05, "Lyapunov within 5% for every r");
  });

  criterion(5, "IGC ratio, IGE gap and r recovery", [&](Outcome& o) {
    Numerics nm;
    WavePacketParams p0 = packet;
    p0.r = 0;
    WavePacketRun unc = wavepacket_run(p0, 20, nm);
    double lam = 2 * packet.A0(), wr = 0, wg = 0, wrec = 0, wclosed = 0;
    for (double r : {0.1, 0.3, 0.5}) {
      WavePacketParams p = packet;
      p.r = r;
      WavePacketRun corr = wavepacket_run(p, 20, nm);
      double q = std::sqrt((1 - r) / (1 + r));
      for (size_t i = 0; i < corr.complexity.size(); ++i) {
        double t = corr.complexity.tau[i];
        if (t < 2 / lam || t > 20 / lam * (1 + 1e-12)) continue;
        double cc = corr.complexity.igc[i], cu = unc.complexity.igc[i];
        wr = std::max(wr, std::abs(cc / cu / q - 1));
        wg = std::max(wg, std::abs(corr.complexity.ige[i] - unc.complexity.ige[i] - std::log(q)));
        wrec = std::max(wrec, std::abs(r_from_igc(cu, cc) / r - 1));
        wclosed = std::max(wclosed, std::abs(r_from_igc(wavepacket_igc_closed(lam, t, 0), wavepacket_igc_closed(lam, t, r)) - r));
      }
    }
    o.detail << " ratio rel err " << fmt(wr) << ", gap err " << fmt(wg) << ", r rel err " << fmt(wrec)
             << ", closed-form r err " << fmt(wclosed);
    o.require(wr < 0.02, "ratio within 2%");
    o.require(wg < 0.02, "gap within 0.02");
    o.require(wrec < 0.02, "numeric r within 2%");
    o.require(wclosed < 1e-6, "closed-form r within 1e-6");
  });

  criterion(6, "MrE multipliers, two-moment update, optimality", [](Outcome& o) {
    MrEResult a = solve_multiplier({Prior::exponential(1), {Constraint::identity(2)}});
    MrEResult b = solve_multiplier({Prior::normal(0, 1), {Constraint::identity(1)}});
    MrEResult c = update_two_moments(Prior::uniform(-20, 20), 0, 1);
    double sup = 0;
    for (double x = -8; x <= 8; x += 0.005)
      sup = std::max(sup, std::abs(c.density(x) - std::exp(-0.5 * x * x) / std::sqrt(2 * kPi)));
    PerturbationCheck pa = perturbation_check(a, 20, 1), pc = perturbation_check(c, 20, 2);
    o.detail << " beta err " << fmt(std::abs(a.beta(0) - 0.5)) << "/" << fmt(std::abs(b.beta(0) - 1)) << ", sup err "
             << fmt(sup) << ", perturbation " << pa.passed << "/20 and " << pc.passed << "/20";
    o.require(std::abs(a.beta(0) - 0.5) < 1e-10 && std::abs(b.beta(0) - 1) < 1e-10, "multipliers within 1e-10");
    o.require(sup < 1e-6, "normal density within 1e-6");
    o.require(pa.passed == 20 && pc.passed == 20, "20/20 perturbations");
  });

  criterion(7, "Fisher quadrature matches analytic metrics", [](Outcome& o) {
    CounterRng rng(7);
    double worst = 0;
    std::vector<StatModel> fams = {StatModel::gaussian_diag(0, 1), StatModel::exponential(1), StatModel::wigner_dyson(1),
                                   StatModel::gaussian_bivariate_corr(0, 0, 1, 0.6)};
    for (const auto& base : fams)
      for (int k = 0; k < 5; ++k) {
        Vector th = base.theta();
        for (int a = 0; a < th.size(); ++a) th(a) = base.scale_mask()[a] ? rng.uniform(0.3, 4) : rng.uniform(-3, 3);
        StatModel m = base.with_theta(th);
        worst = std::max(worst, (analytic_fisher(m).eval(th) - fisher_quadrature_matrix(m)).cwiseAbs().maxCoeff());
      }
    o.detail << " max entry err " << fmt(worst) << " over 20 points";
    o.require(worst < 1e-6, "entries within 1e-6");
  });

  criterion(8, "IHO growth rate, doubling, Ohmic normalization", [](Outcome& o) {
    ScenarioReport rep = run_iho({});
    const Check* rate = rep.check("igc_growth_rate");
    const Check* dbl = rep.check("ige_slope_doubling_ratio");
    const Check* norm = rep.check("ohmic_normalization");
    o.detail << " rate " << fmt(rate->value) << " vs " << fmt(rate->oracle) << ", doubling ratio " << fmt(dbl->value)
             << ", normalization err " << fmt(std::abs(norm->value - 1));
    o.require(rate->pass, "rate within 5%");
    o.require(dbl->pass, "doubling within 2%");
    o.require(norm->pass, "normalization exact");
  });

  criterion(9, "spin-chain curvature and growth classification", [](Outcome& o) {
    SpinConfig reg, ch;
    ch.regime = SpinRegime::chaotic;
    ScenarioReport a = run_spin_chain(reg), b = run_spin_chain(ch);
    o.detail << " R " << fmt(a.observable("ricci_scalar")->value) << "/" << fmt(b.observable("ricci_scalar")->value)
             << ", margins " << fmt(a.observable("classification_margin")->value) << "/"
             << fmt(b.observable("classification_margin")->value);
    o.require(a.check("ricci_scalar")->pass && b.check("ricci_scalar")->pass, "curvatures");
    o.require(a.check("classification_margin")->pass && b.check("classification_margin")->pass, "margins at least 0.05");
  });

  criterion(10, "scattering chain", [](Outcome& o) {
    double phase = 0, trip = 0;
    for (double kl : {0.02, 0.05, 0.1})
      for (double r : {0.05, 0.1, 0.2}) {
        ScatterConfig c;
        c.sigma0 = 0.5;  // keeps 2/eta above r
        c.L = kl;
        c.r = r;
        phase = std::max(phase, std::abs(exact_phase_shift(c) / scattering_observables(c).theta0_shift - 1));
      }
    ScatterConfig c;
    c.L = 0.1;
    double bound = prolongation(c).r_upper_bound, prev = -1;
    bool monotone = true;
    for (int i = 0; i <= 50; ++i) {
      c.r = 0.95 * bound * i / 50;
      trip = std::max(trip, std::abs(r_from_purity(c, scattering_observables(c).purity) - c.r));
      double d = prolongation(c).delta;
      monotone = monotone && d > prev;
      prev = d;
    }
    c.r = 0;
    double d0 = prolongation(c).delta;
    bool enforced = false;
    c.r = bound;
    try {
      prolongation(c);
    } catch (const BoundViolationError&) {
      enforced = true;
    }
    o.detail << " phase rel err " << fmt(phase) << ", purity roundtrip err " << fmt(trip) << ", delta(0) " << fmt(d0)
             << ", monotone " << (monotone ? "yes" : "no") << ", bound " << (enforced ? "enforced" : "not enforced");
    o.require(phase < 0.01, "phase within 1%");
    o.require(trip < 1e-6, "roundtrip within 1e-6");
    o.require(d0 == 0 && monotone, "prolongation zero at r=0 and monotone");
    o.require(enforced, "bound enforced");
  });

  criterion(11, "property suites at seeded points", [](Outcome& o) {
    int n = 0, bad = 0;
    for (int p = 0; p < 12; ++p) {
      CounterRng rng(99, p);
      std::vector<StatModel> parts = {StatModel::gaussian_diag(rng.uniform(-1, 1), rng.uniform(0.5, 2)),
                                      StatModel::gaussian_bivariate_corr(0, 0, rng.uniform(0.5, 2), rng.uniform(-0.7, 0.7)),
                                      StatModel::wigner_dyson(rng.uniform(0.5, 2))};
      StatModel m = StatModel::product(parts);
      CurvatureReport cr = curvature_report(analytic_fisher(m), m.theta());
      n += 3;
      bad += !(cr.antisymmetry_residual < 1e-8);
      bad += !(cr.bianchi_residual < 1e-8);
      bad += !(std::abs(cr.scalar - cr.sectional_sum) < 1e-8);
      // score against central differences
      Vector x(m.micro_dim());
      for (int i = 0; i < x.size(); ++i) x(i) = rng.uniform(0.2, 2);
      Vector s = score(m, x);
      for (int a = 0; a < m.param_dim(); ++a) {
        Vector tp = m.theta(), tm = m.theta();
        tp(a) += 1e-6;
        tm(a) -= 1e-6;
        double fd = (log_density(m.with_theta(tp), x) - log_density(m.with_theta(tm), x)) / 2e-6;
        ++n;
        bad += !(std::abs(s(a) - fd) < 1e-6 * (1 + std::abs(fd)));
      }
      // volume in (mu, sigma) against (mu, ln sigma)
      MetricField g = analytic_fisher(StatModel::gaussian_diag(0, 1));
      double a0 = rng.uniform(0.3, 1), a1 = a0 + rng.uniform(0.1, 2);
      double v = box_volume(g, Vector::Constant(2, 0).cwiseMax(Vector::Constant(2, 0)) + (Vector(2) << 0, a0).finished(),
                            (Vector(2) << 1, a1).finished());
      double w = box_volume(pull_back_log(g), (Vector(2) << 0, std::log(a0)).finished(),
                            (Vector(2) << 1, std::log(a1)).finished());
      ++n;
      bad += !(std::abs(w / v - 1) < 1e-6);
    }
    // Jacobi superposition along one geodesic per point
    for (int p = 0; p < 10; ++p) {
      CounterRng rng(199, p);
      MetricField g = analytic_fisher(StatModel::gaussian_bivariate_corr(0, 0, 1, rng.uniform(0, 0.8)));
      Vector th(3), v(3), e1 = Vector::Unit(3, 0), e2 = Vector::Unit(3, 2);
      th << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 2);
      v << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
      GeodesicPath path = integrate_geodesic(g, th, v, 2, 1e-10, 11);
      JacobiTrace a = integrate_jacobi(g, path, e1, e2), b = integrate_jacobi(g, path, e2, e1);
      JacobiTrace c = integrate_jacobi(g, path, e1 + 2 * e2, e2 + 2 * e1);
      ++n;
      bad += !((c.J.back() - a.J.back() - 2 * b.J.back()).cwiseAbs().maxCoeff() < 1e-7 * (1 + c.J.back().norm()));
    }
    o.detail << " " << (n - bad) << "/" << n << " property evaluations hold";
    o.require(bad == 0, "zero failures");
  });

  // reported, not gating: published forms this implementation does not reproduce
  std::printf("info: non-gating comparisons\n");
  for (double r : {0.3, 0.6}) {
    MacroConfig mc;
    mc.r = {r};
    ScenarioReport rep = run_macro_correlated(mc);
    const Observable* fit = rep.observable("lambda1_fit");
    std::printf("info   saturating entropy fit at r=%.1f: Lambda1 %s vs formula %s\n", r,
                fit ? fmt(fit->value).c_str() : "unavailable (fit leaves its domain)", fmt(lambda1_formula(r)).c_str());
    std::printf("info   scalar curvature at r=%.1f: kernel %s vs published formula %s\n", r,
                fmt(rep.observable("ricci_scalar")->value).c_str(), fmt(macro_ricci_formula(mc.r)).c_str());
  }
  std::printf("%s: %d of 11 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
