#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lbsda/config.hpp"
#include "lbsda/envs.hpp"
#include "lbsda/factory.hpp"
#include "lbsda/harness.hpp"
#include "lbsda/memory_schedule.hpp"
#include "lbsda/rng.hpp"
#include "lbsda/verify.hpp"

namespace lbsda {

/// Outcome of checking one invariant over many seeded runs.
struct CampaignReport {
  std::string name;
  std::size_t runs = 0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::vector<std::uint64_t> failing_seeds;
  std::string first_message;
  double wall_time = 0.0;

  bool passed() const { return violations == 0 && runs > 0; }

  void absorb(const InvariantReport& rep, std::uint64_t seed) {
    checks += rep.rounds_checked;
    if (rep.passed) return;
    if (violations == 0) first_message = rep.message;
    violations += rep.violations;
    failing_seeds.push_back(seed);
  }
};

/// K-armed Bernoulli instance with means drawn uniformly from [0.05, 0.95].
inline EnvironmentSpec random_bernoulli(std::size_t num_arms, TimeStep horizon, Rng& rng) {
  std::vector<ArmModel> arms;
  for (std::size_t k = 0; k < num_arms; ++k) arms.push_back({Family::Bernoulli, 0.05 + 0.9 * uniform01(rng), 1.0});
  return EnvironmentSpec::stationary(horizon, std::move(arms));
}

namespace detail {

inline Trajectory traced_run(const EnvironmentSpec& env, const PolicySpec& spec, std::uint64_t seed) {
  RunRecord rec = run_replication(env, resolve_policy(spec, env), seed, RunOptions{true, false});
  return std::move(*rec.trajectory);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// LB-SDA on random Bernoulli instances, alternating K between the entries
/// of `arm_counts`.
inline CampaignReport lemma_wt_campaign(std::size_t runs, TimeStep horizon, std::uint64_t seed,
                                        const std::vector<std::size_t>& arm_counts = {2, 5}) {
  const auto t0 = std::chrono::steady_clock::now();
  CampaignReport out;
  out.name = "lemma-wt";
  for (std::size_t i = 0; i < runs; ++i) {
    const std::uint64_t s = seed + i;
    Rng inst = make_rng(s ^ 0x9e3779b97f4a7c15ULL);
    const auto env = random_bernoulli(arm_counts[i % arm_counts.size()], horizon, inst);
    out.absorb(check_lemma_wt(detail::traced_run(env, policy_named("lbsda"), s)), s);
    ++out.runs;
  }
  out.wall_time = detail::seconds_since(t0);
  return out;
}

/// SW-LB-SDA with the default window tuning on the 4-phase Bernoulli preset.
inline CampaignReport sw_leader_campaign(std::size_t runs, TimeStep horizon, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  CampaignReport out;
  out.name = "sw-leader";
  PresetOverrides o;
  o.horizon = horizon;
  const auto env = find_preset("fig4-bernoulli-nonstationary")->build(o).environment;
  const PolicySpec spec = resolve_policy(policy_named("sw-lbsda"), env);
  for (std::size_t i = 0; i < runs; ++i) {
    const std::uint64_t s = seed + i;
    out.absorb(check_sw_leader_bound(detail::traced_run(env, spec, s), *spec.window), s);
    ++out.runs;
  }
  out.wall_time = detail::seconds_since(t0);
  return out;
}

/// Storage bounds for LB-SDA-LM under `schedule` and window replay for
/// SW-LB-SDA, on random Bernoulli instances.
inline CampaignReport storage_campaign(std::size_t runs, TimeStep horizon, std::uint64_t seed,
                                       const MemorySchedule& schedule) {
  const auto t0 = std::chrono::steady_clock::now();
  CampaignReport out;
  out.name = "storage";
  PolicySpec lm = policy_named("lbsda-lm");
  lm.schedule = schedule;
  for (std::size_t i = 0; i < runs; ++i) {
    const std::uint64_t s = seed + i;
    Rng inst = make_rng(s ^ 0x9e3779b97f4a7c15ULL);
    const auto env = random_bernoulli(2 + i % 3, horizon, inst);
    out.absorb(check_storage(detail::traced_run(env, lm, s)), s);
    out.absorb(check_storage(detail::traced_run(env, policy_named("lbsda"), s)), s);
    PolicySpec sw = policy_named("sw-lbsda");
    sw.window = std::max<std::size_t>(env.num_arms(), horizon / 20);
    out.absorb(check_storage(detail::traced_run(env, sw, s)), s);
    ++out.runs;
  }
  out.wall_time = detail::seconds_since(t0);
  return out;
}

struct BalanceCampaignReport {
  std::size_t queries = 0;
  std::size_t agreeing = 0;       // |MC - exact| <= 3 std errors
  std::size_t bound_failures = 0;  // queries whose upper bound fails somewhere on the grid
  double worst_z = 0.0;
  double wall_time = 0.0;
};

/// Random Bernoulli queries with mu* > mu, j in [1, max_block], M in [1, max_duels].
inline BalanceCampaignReport balance_campaign(std::size_t queries, std::size_t samples, std::uint64_t seed,
                                              std::size_t max_block = 10, std::size_t max_duels = 100) {
  const auto t0 = std::chrono::steady_clock::now();
  BalanceCampaignReport out;
  Rng rng = make_rng(seed);
  for (std::size_t i = 0; i < queries; ++i) {
    double a = 0.05 + 0.9 * uniform01(rng), b = 0.05 + 0.9 * uniform01(rng);
    if (a < b) std::swap(a, b);
    BalanceQuery q{{Family::Bernoulli, a, 1.0}, {Family::Bernoulli, b, 1.0}, 1 + uniform_index(rng, max_block),
                   1 + uniform_index(rng, max_duels)};
    const double exact = balance_exact_bernoulli(q);
    const auto est = balance_monte_carlo(q, samples, rng);
    const double diff = std::abs(est.estimate - exact);
    if (diff <= 3.0 * est.std_error + 1e-12) ++out.agreeing;
    if (est.std_error > 0.0) out.worst_z = std::max(out.worst_z, diff / est.std_error);
    if (!check_balance_upper_bound_grid(q)) ++out.bound_failures;
    ++out.queries;
  }
  out.wall_time = detail::seconds_since(t0);
  return out;
}

}  // namespace lbsda
