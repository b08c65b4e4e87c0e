#include "test_support.hpp"

using namespace igac;

TEST(MrE, TiltedExponential) {
  // exponential prior of mean 1 updated to mean 2: beta = 1 - 1/2
  MrEResult res = solve_multiplier({Prior::exponential(1), {Constraint::identity(2)}});
  EXPECT_NEAR(res.beta(0), 0.5, 1e-10);
}

TEST(MrE, TiltedGaussian) {
  MrEResult res = solve_multiplier({Prior::normal(0, 1), {Constraint::identity(1)}});
  EXPECT_NEAR(res.beta(0), 1.0, 1e-10);
  EXPECT_NEAR(res.log_z, 0.5, 1e-10);
  EXPECT_NEAR(res.objective, -0.5, 1e-10);
}

TEST(MrE, UniformMeanFrozen) {
  // mpmath root of the tilted-uniform mean equation on [0, 1]
  MrEResult res = solve_multiplier({Prior::uniform(0, 1), {Constraint::identity(0.3)}});
  EXPECT_NEAR(res.beta(0), -2.67210385527338554, 1e-10);
  EXPECT_NEAR(res.log_z, -1.05447671958620164, 1e-10);
}

TEST(MrE, AbsoluteMomentFrozen) {
  MrEResult res = solve_multiplier({Prior::normal(0, 1), {Constraint::absolute(1)}});
  EXPECT_NEAR(res.beta(0), 0.48105838703462803, 1e-9);
}

TEST(MrE, TwoMomentUpdateReproducesNormal) {
  MrEResult res = update_two_moments(Prior::uniform(-20, 20), 1.5, 1.5 * 1.5 + 0.49);
  double worst = 0;
  for (double x = -5; x <= 8; x += 0.01) {
    double z = (x - 1.5) / 0.7;
    worst = std::max(worst, std::abs(res.density(x) - std::exp(-0.5 * z * z) / (0.7 * std::sqrt(2 * kPi))));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(MrE, ZeroUpdateAndIdempotence) {
  MrEResult a = solve_multiplier({Prior::normal(0, 1), {Constraint::identity(0)}});
  EXPECT_NEAR(a.beta(0), 0.0, 1e-12);
  MrEResult b = solve_multiplier({Prior::exponential(1), {Constraint::identity(3)}});
  MrEResult c = solve_multiplier({b.as_prior(), {Constraint::identity(3)}});
  EXPECT_NEAR(c.beta(0), 0.0, 1e-8);
}

TEST(MrE, PolynomialConstraint) {
  // E[x + x^2] = 1 + 1 for N(1, 1) reached from N(0, 1)
  MrEResult res = solve_multiplier({Prior::normal(0, 1), {Constraint::polynomial({0, 1, 1}, 3)}});
  EXPECT_NEAR(res.achieved(0), 3.0, 1e-9);
}

TEST(MrE, RelativeEntropyFrozen) {
  // S[p, q] = -int p ln(p / q); mpmath gives KL(normal || cauchy) = 0.259244532488862
  Prior p = Prior::normal(0, 1), q = Prior::cauchy(0, 1);
  EXPECT_NEAR(relative_entropy([&](double x) { return p.density(x); }, [&](double x) { return q.density(x); },
                               Interval{}),
              -0.25924453248886226, 1e-8);
  Prior n1 = Prior::normal(1, 1);
  EXPECT_NEAR(relative_entropy_log(n1.log_density, p.log_density, Interval{}), -0.5, 1e-10);
}

TEST(MrE, ErrorKinds) {
  EXPECT_THROW(solve_multiplier({Prior::cauchy(0, 1), {Constraint::identity(1)}}), InfeasibleError);
  EXPECT_THROW(solve_multiplier({Prior::exponential(1), {Constraint::identity(-1)}}), BracketingError);
  EXPECT_THROW(solve_multiplier({Prior::uniform(0, 1), {Constraint::identity(2)}}), BracketingError);
  EXPECT_THROW(update_two_moments(Prior::normal(0, 1), 1, 0.5), InfeasibleError);
}

TEST(MrE, PerturbationOptimality) {
  MrEResult a = solve_multiplier({Prior::exponential(1), {Constraint::identity(2)}});
  PerturbationCheck pa = perturbation_check(a, 20, 3);
  EXPECT_EQ(pa.passed, 20);
  MrEResult b = update_two_moments(Prior::uniform(-20, 20), 0, 1);
  EXPECT_EQ(perturbation_check(b, 20, 4).passed, 20);
}

TEST(MrE, ClosedFormMultipliers) {
  auto b = mre_closed_form({Prior::normal(1, 2), {Constraint::identity(3), Constraint::square(10)}});
  ASSERT_TRUE(b.has_value());
  MrEResult res = solve_multiplier({Prior::normal(1, 2), {Constraint::identity(3), Constraint::square(10)}});
  EXPECT_NEAR(res.beta(0), (*b)(0), 1e-9);
  EXPECT_NEAR(res.beta(1), (*b)(1), 1e-9);
}
