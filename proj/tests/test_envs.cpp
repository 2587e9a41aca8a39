#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "lbsda/envs.hpp"
#include "lbsda/rng.hpp"

using namespace lbsda;

namespace {

ArmModel bern(double p) { return {Family::Bernoulli, p, 1.0}; }

EnvironmentSpec two_phase() {
  return EnvironmentSpec(10, {Phase{1, {bern(0.0), bern(1.0)}}, Phase{6, {bern(1.0), bern(0.0)}}});
}

}  // namespace

TEST(Kl, BernoulliReferenceValue) {
  // mpmath, 30 digits: 0.0507337389213...
  EXPECT_NEAR(kl_divergence(bern(0.05), bern(0.15)), 0.0507337389213077, 1e-12);
  EXPECT_NEAR(bernoulli_kl(0.05, 0.15), 0.0507337389213077, 1e-12);
}

TEST(Kl, OtherFamiliesReferenceValues) {
  EXPECT_NEAR(kl_divergence({Family::Gaussian, 0.3, 0.5}, {Family::Gaussian, 0.8, 0.5}), 0.5, 1e-15);
  EXPECT_NEAR(kl_divergence({Family::Poisson, 2.0, 1.0}, {Family::Poisson, 3.0, 1.0}), 0.189069783783671, 1e-12);
  EXPECT_NEAR(kl_divergence({Family::Exponential, 2.0, 1.0}, {Family::Exponential, 3.0, 1.0}), 0.0721317747748311, 1e-12);
}

TEST(Kl, BoundaryAndIdentity) {
  EXPECT_EQ(bernoulli_kl(0.3, 0.3), 0.0);
  EXPECT_EQ(bernoulli_kl(0.0, 0.0), 0.0);
  EXPECT_EQ(bernoulli_kl(1.0, 1.0), 0.0);
  EXPECT_TRUE(std::isinf(bernoulli_kl(0.5, 0.0)));
  EXPECT_TRUE(std::isinf(bernoulli_kl(0.5, 1.0)));
  EXPECT_NEAR(bernoulli_kl(0.0, 0.5), std::log(2.0), 1e-15);
}

TEST(Kl, IncomparableArmsThrow) {
  EXPECT_THROW(kl_divergence(bern(0.5), {Family::Gaussian, 0.5, 1.0}), std::domain_error);
  EXPECT_THROW(kl_divergence({Family::Gaussian, 0.0, 1.0}, {Family::Gaussian, 0.0, 2.0}), std::domain_error);
}

TEST(Kl, NonNegativeAndZeroOnlyOnDiagonal) {
  Rng rng = make_rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double p = uniform01(rng), q = uniform01(rng);
    const double v = bernoulli_kl(p, q);
    EXPECT_GE(v, 0.0);
    if (p != q) {
      EXPECT_GT(v, 0.0);
    }
    const double a = 0.1 + 5 * uniform01(rng), b = 0.1 + 5 * uniform01(rng);
    EXPECT_GE(poisson_kl(a, b), 0.0);
    EXPECT_GE(exponential_kl(a, b), 0.0);
    EXPECT_GE(gaussian_kl(a, b, 0.7), 0.0);
  }
}

TEST(Environment, StationaryBernoulliMeansAndSamples) {
  auto env = EnvironmentSpec::stationary(1000, {bern(0.05), bern(0.15)});
  EXPECT_EQ(env.num_arms(), 2u);
  EXPECT_EQ(env.num_breakpoints(), 0u);
  EXPECT_DOUBLE_EQ(oracle_mean(env, 1, 500), 0.15);
  EXPECT_DOUBLE_EQ(env.best_mean(1000), 0.15);
  Rng rng = make_rng(3);
  for (int i = 0; i < 200; ++i) {
    const double r = sample_reward(env, 0, 1, rng);
    EXPECT_TRUE(r == 0.0 || r == 1.0);
  }
}

TEST(Environment, BreakpointIsLeftClosed) {
  auto env = two_phase();
  EXPECT_EQ(env.phase_index(5), 0u);
  EXPECT_EQ(env.phase_index(6), 1u);
  EXPECT_DOUBLE_EQ(env.oracle_mean(0, 5), 0.0);
  EXPECT_DOUBLE_EQ(env.oracle_mean(0, 6), 1.0);
}

TEST(Environment, DisjointSupportsAcrossBreakpoint) {
  auto env = two_phase();
  Rng rng = make_rng(5);
  for (TimeStep t = 1; t <= 10; ++t) {
    const double expect = t < 6 ? 0.0 : 1.0;
    EXPECT_EQ(env.sample_reward(0, t, rng), expect) << "t=" << t;
    EXPECT_EQ(env.sample_reward(1, t, rng), 1.0 - expect) << "t=" << t;
  }
}

TEST(Environment, OutOfRangeQueriesThrow) {
  auto env = two_phase();
  Rng rng = make_rng(1);
  EXPECT_THROW(env.oracle_mean(0, 0), std::invalid_argument);
  EXPECT_THROW(env.oracle_mean(0, 11), std::invalid_argument);
  EXPECT_THROW(env.oracle_mean(2, 1), std::invalid_argument);
  EXPECT_THROW(env.sample_reward(2, 1, rng), std::invalid_argument);
}

TEST(Environment, ValidationRejectsMalformedPhases) {
  EXPECT_THROW(EnvironmentSpec(10, {Phase{2, {bern(0.1), bern(0.2)}}}), std::invalid_argument);
  EXPECT_THROW(EnvironmentSpec(10, {Phase{1, {bern(0.1)}}}), std::invalid_argument);
  EXPECT_THROW(EnvironmentSpec(10, {Phase{1, {bern(0.1), bern(1.2)}}}), std::invalid_argument);
  EXPECT_THROW(EnvironmentSpec(10, {Phase{1, {bern(0.1), bern(0.2)}}, Phase{1, {bern(0.1), bern(0.2)}}}),
               std::invalid_argument);
  EXPECT_THROW(EnvironmentSpec(10, {Phase{1, {bern(0.1), bern(0.2)}}, Phase{11, {bern(0.1), bern(0.2)}}}),
               std::invalid_argument);
  EXPECT_THROW(EnvironmentSpec(10, {Phase{1, {bern(0.1), bern(0.2)}}, Phase{5, {bern(0.1)}}}), std::invalid_argument);
  EXPECT_THROW(EnvironmentSpec(10, {Phase{1, {bern(0.1), {Family::Gaussian, 0.2, 1.0}}}}), std::invalid_argument);
  EXPECT_THROW(EnvironmentSpec(10, {Phase{1, {{Family::Gaussian, 0.1, 0.0}, {Family::Gaussian, 0.2, 1.0}}}}),
               std::invalid_argument);
  EXPECT_THROW(EnvironmentSpec(10, {Phase{1, {{Family::Poisson, 0.0, 1.0}, {Family::Poisson, 1.0, 1.0}}}}),
               std::invalid_argument);
  EXPECT_THROW(EnvironmentSpec(0, {Phase{1, {bern(0.1), bern(0.2)}}}), std::invalid_argument);
}

TEST(Environment, ValidateListsEveryProblem) {
  auto problems = EnvironmentSpec::validate(10, {Phase{2, {bern(-0.1), bern(0.2)}}, Phase{20, {bern(0.1), bern(0.2)}}});
  EXPECT_GE(problems.size(), 3u);
}

TEST(Environment, EmpiricalMomentsMatchEachFamily) {
  Rng rng = make_rng(99);
  const int n = 200000;
  for (ArmModel m : {ArmModel{Family::Bernoulli, 0.3, 1.0}, ArmModel{Family::Gaussian, -0.5, 2.0},
                     ArmModel{Family::Poisson, 3.5, 1.0}, ArmModel{Family::Exponential, 0.8, 1.0}}) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += draw(m, rng);
    const double sd = m.family == Family::Bernoulli     ? std::sqrt(0.21)
                      : m.family == Family::Gaussian    ? 2.0
                      : m.family == Family::Poisson     ? std::sqrt(3.5)
                                                        : 0.8;
    EXPECT_NEAR(s / n, m.mean, 5.0 * sd / std::sqrt(static_cast<double>(n))) << family_name(m.family);
  }
}

TEST(Environment, SameSeedSameStream) {
  auto env = EnvironmentSpec::stationary(100, {ArmModel{Family::Gaussian, 0.0, 1.0}, ArmModel{Family::Gaussian, 1.0, 1.0}});
  Rng a = make_rng(42), b = make_rng(42), c = make_rng(43);
  bool differs = false;
  for (TimeStep t = 1; t <= 100; ++t) {
    const double x = env.sample_reward(t % 2, t, a);
    EXPECT_EQ(x, env.sample_reward(t % 2, t, b));
    differs = differs || x != env.sample_reward(t % 2, t, c);
  }
  EXPECT_TRUE(differs);
}

TEST(Environment, FamilyNamesRoundTrip) {
  for (Family f : {Family::Bernoulli, Family::Gaussian, Family::Poisson, Family::Exponential})
    EXPECT_EQ(parse_family(family_name(f)), f);
  EXPECT_FALSE(parse_family("cauchy").has_value());
}
