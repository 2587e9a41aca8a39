#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "lbsda/harness.hpp"

using namespace lbsda;

namespace {

ExperimentConfig small_config(std::size_t reps = 6) {
  ExperimentConfig cfg;
  cfg.name = "small";
  cfg.environment = EnvironmentSpec(
      800, {Phase{1, {{Family::Bernoulli, 0.3, 1}, {Family::Bernoulli, 0.6, 1}, {Family::Bernoulli, 0.5, 1}}},
            Phase{401, {{Family::Bernoulli, 0.7, 1}, {Family::Bernoulli, 0.2, 1}, {Family::Bernoulli, 0.5, 1}}}});
  for (auto n : {"lbsda", "sw-lbsda", "dts", "exp3s", "klucb"})
    cfg.policies.push_back(resolve_policy(policy_named(n), cfg.environment));
  cfg.replications = reps;
  cfg.base_seed = 40;
  return cfg;
}

}  // namespace

TEST(Checkpoints, LogSpacedIncludesEndpointsSortedUnique) {
  auto c = log_spaced_checkpoints(10000, 200);
  EXPECT_EQ(c.front(), 1u);
  EXPECT_EQ(c.back(), 10000u);
  EXPECT_LE(c.size(), 200u);
  EXPECT_GT(c.size(), 100u);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_LT(c[i - 1], c[i]);
  EXPECT_EQ(log_spaced_checkpoints(1, 200), std::vector<TimeStep>{1});
}

TEST(Checkpoints, ExplicitAndFull) {
  ExperimentConfig cfg = small_config();
  cfg.checkpoints.mode = CheckpointSpec::Mode::Explicit;
  cfg.checkpoints.times = {800, 5, 5, 100};
  EXPECT_EQ(checkpoint_times(cfg), (std::vector<TimeStep>{5, 100, 800}));
  cfg.checkpoints.mode = CheckpointSpec::Mode::Full;
  EXPECT_EQ(checkpoint_times(cfg).size(), 800u);
}

TEST(Quantile, Type7) {
  std::vector<double> v{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.75), 3.25);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.75), 7.0);
  EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
}

TEST(Replication, FixedArmRegretIsGapTimesTime) {
  auto env = EnvironmentSpec(100, {Phase{1, {{Family::Bernoulli, 0.2, 1}, {Family::Bernoulli, 0.5, 1}}},
                                   Phase{51, {{Family::Bernoulli, 0.9, 1}, {Family::Bernoulli, 0.5, 1}}}});
  PolicySpec fixed = policy_named("fixed");
  fixed.arm = 0;
  auto rec = run_replication(env, fixed, 1, {});
  ASSERT_EQ(rec.cumulative_regret.size(), 100u);
  EXPECT_NEAR(rec.cumulative_regret[49], 50 * 0.3, 1e-9);
  EXPECT_NEAR(rec.cumulative_regret[99], 50 * 0.3, 1e-9);
  EXPECT_EQ(rec.pulls, (std::vector<std::size_t>{100, 0}));
}

TEST(Replication, StopsAtExactlyTMidRound) {
  // Round 1 pulls all 5 arms; with T = 3 the round is cut after arm 2.
  std::vector<ArmModel> arms(5, ArmModel{Family::Bernoulli, 0.5, 1});
  auto env = EnvironmentSpec::stationary(3, arms);
  auto rec = run_replication(env, policy_named("lbsda"), 1, RunOptions{true, false});
  EXPECT_EQ(rec.cumulative_regret.size(), 3u);
  EXPECT_EQ(rec.pulls, (std::vector<std::size_t>{1, 1, 1, 0, 0}));
  EXPECT_TRUE(rec.trajectory->rounds.empty());
}

TEST(Replication, RegretNonDecreasing) {
  auto cfg = small_config();
  for (const auto& spec : cfg.policies) {
    auto rec = run_replication(cfg.environment, spec, 3, {});
    for (std::size_t i = 1; i < rec.cumulative_regret.size(); ++i)
      ASSERT_GE(rec.cumulative_regret[i], rec.cumulative_regret[i - 1] - 1e-12) << spec.name;
  }
}

TEST(Replication, InvariantChecksRunForSubsamplingPolicies) {
  auto cfg = small_config();
  RunOptions opts{false, true};
  for (const auto& spec : cfg.policies) {
    auto rec = run_replication(cfg.environment, spec, 9, opts);
    EXPECT_EQ(rec.invariant_violations, 0u) << spec.name << ": " << rec.first_violation;
    EXPECT_FALSE(rec.trajectory.has_value());
  }
}

TEST(Experiment, AggregatesInSeedOrder) {
  auto cfg = small_config(5);
  auto res = run_experiment(cfg, 1);
  ASSERT_EQ(res.policies.size(), cfg.policies.size());
  EXPECT_EQ(res.seeds, (std::vector<std::uint64_t>{40, 41, 42, 43, 44}));
  const auto& p = res.policies.front();
  ASSERT_EQ(p.final_samples.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    auto rec = run_replication(cfg.environment, cfg.policies.front(), 40 + i, {});
    EXPECT_EQ(p.final_samples[i], rec.final_regret());
  }
  EXPECT_EQ(p.times.back(), 800u);
  EXPECT_DOUBLE_EQ(p.mean.back(), p.final_regret.mean);
  for (std::size_t c = 0; c < p.times.size(); ++c) EXPECT_LE(p.q25[c], p.q75[c]);
  double pulls = 0;
  for (double v : p.mean_pulls) pulls += v;
  EXPECT_DOUBLE_EQ(pulls, 800.0);
}

TEST(Experiment, WorkerCountDoesNotChangeResults) {
  auto cfg = small_config(7);
  auto a = run_experiment(cfg, 1);
  auto b = run_experiment(cfg, 8);
  ASSERT_EQ(a.policies.size(), b.policies.size());
  for (std::size_t p = 0; p < a.policies.size(); ++p) {
    EXPECT_EQ(a.policies[p].mean, b.policies[p].mean);
    EXPECT_EQ(a.policies[p].q25, b.policies[p].q25);
    EXPECT_EQ(a.policies[p].q75, b.policies[p].q75);
    EXPECT_EQ(a.policies[p].final_samples, b.policies[p].final_samples);
  }
}

TEST(Experiment, RejectsInvalidConfigs) {
  auto cfg = small_config();
  cfg.policies.push_back(cfg.policies.front());
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  cfg = small_config();
  cfg.replications = 0;
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  cfg = small_config();
  cfg.policies.clear();
  EXPECT_FALSE(config_problems(cfg).empty());
}

TEST(Experiment, InvariantViolationCountsAreAggregated) {
  auto cfg = small_config(3);
  cfg.invariant_checks = true;
  auto res = run_experiment(cfg, 2);
  EXPECT_EQ(res.invariant_violations(), 0u);
  EXPECT_NE(res.find("sw-lbsda"), nullptr);
  EXPECT_EQ(res.find("absent"), nullptr);
}
