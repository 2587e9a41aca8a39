#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lbsda/envs.hpp"
#include "lbsda/factory.hpp"
#include "lbsda/policy.hpp"
#include "lbsda/rng.hpp"
#include "lbsda/verify.hpp"

namespace lbsda {

/// Time steps at which aggregate regret is reported.
struct CheckpointSpec {
  enum class Mode { LogSpaced, Full, Explicit };
  Mode mode = Mode::LogSpaced;
  std::size_t count = 200;
  std::vector<TimeStep> times;

  friend bool operator==(const CheckpointSpec&, const CheckpointSpec&) = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  EnvironmentSpec environment;
  std::vector<PolicySpec> policies;
  std::size_t replications = 1;
  std::uint64_t base_seed = 0;
  bool record_trajectories = false;
  bool invariant_checks = false;
  CheckpointSpec checkpoints;

  TimeStep horizon() const { return environment.horizon(); }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// About `count` log-spaced steps in [1, T], always including 1 and T.
inline std::vector<TimeStep> log_spaced_checkpoints(TimeStep horizon, std::size_t count) {
  std::set<TimeStep> out;
  if (count == 0 || horizon == 0) return {};
  out.insert(1);
  out.insert(horizon);
  const double top = std::log10(static_cast<double>(horizon));
  for (std::size_t i = 0; i + 1 < count; ++i) {
    const double e = top * static_cast<double>(i) / static_cast<double>(count - 1);
    const auto t = static_cast<TimeStep>(std::llround(std::pow(10.0, e)));
    out.insert(std::clamp<TimeStep>(t, 1, horizon));
  }
  return {out.begin(), out.end()};
}

inline std::vector<TimeStep> checkpoint_times(const ExperimentConfig& cfg) {
  const TimeStep T = cfg.horizon();
  switch (cfg.checkpoints.mode) {
    case CheckpointSpec::Mode::Full: {
      std::vector<TimeStep> all(T);
      for (TimeStep t = 1; t <= T; ++t) all[t - 1] = t;
      return all;
    }
    case CheckpointSpec::Mode::Explicit: {
      std::vector<TimeStep> v;
      for (TimeStep t : cfg.checkpoints.times)
        if (t >= 1 && t <= T) v.push_back(t);
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      return v;
    }
    case CheckpointSpec::Mode::LogSpaced:
      break;
  }
  return log_spaced_checkpoints(T, cfg.checkpoints.count);
}

struct RunOptions {
  bool record_trajectory = false;
  bool invariant_checks = false;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<double> cumulative_regret;  // index t-1
  std::vector<std::size_t> pulls;
  std::vector<std::size_t> storage_high_water;
  std::size_t rounds = 0;
  std::size_t invariant_violations = 0;
  std::optional<std::size_t> first_violation_round;
  std::string first_violation;
  std::size_t clamp_warnings = 0;
  double wall_time = 0.0;
  std::optional<Trajectory> trajectory;

  double final_regret() const { return cumulative_regret.empty() ? 0.0 : cumulative_regret.back(); }
};

namespace detail {

inline void merge_report(RunRecord& rec, const InvariantReport& rep) {
  if (rep.passed) return;
  if (rec.invariant_violations == 0) {
    rec.first_violation_round = rep.first_violation_round;
    rec.first_violation = rep.message;
  }
  rec.invariant_violations += rep.violations;
}

}  // namespace detail

/// Simulates one replication until exactly T pulls. Round-based policies pull
/// their set in ascending arm order; a round overshooting T is cut after the
/// pull reaching T. Each pull at time t draws from phase(t) and adds
/// mu*_t - mu_{A_t,t} to the regret.
inline RunRecord run_replication(const EnvironmentSpec& env, const PolicySpec& spec, std::uint64_t seed,
                                 const RunOptions& opts = {}) {
  const auto started = std::chrono::steady_clock::now();
  auto policy = make_policy(spec, env);
  const bool want_log = opts.record_trajectory || (opts.invariant_checks && is_round_based(spec.name));
  if (want_log) policy->enable_trajectory();

  Rng rng = make_rng(seed);
  const TimeStep T = env.horizon();
  const std::size_t k_arms = env.num_arms();
  RunRecord rec;
  rec.seed = seed;
  rec.cumulative_regret.reserve(T);
  rec.pulls.assign(k_arms, 0);

  TimeStep t = 0;
  double regret = 0.0;
  while (t < T) {
    const auto arms = policy->select(rng);
    if (arms.empty()) throw std::logic_error("policy returned an empty pull set");
    bool truncated = false;
    for (std::size_t i = 0; i < arms.size(); ++i) {
      const ArmIndex a = arms[i];
      if (a >= k_arms) throw std::logic_error("policy selected an out-of-range arm");
      ++t;
      const double reward = env.sample_reward(a, t, rng);
      regret += env.best_mean(t) - env.oracle_mean(a, t);
      rec.cumulative_regret.push_back(regret);
      ++rec.pulls[a];
      policy->observe(a, reward);
      if (t == T) {
        truncated = i + 1 < arms.size();
        break;
      }
    }
    ++rec.rounds;
    if (!truncated) policy->end_round(rng);
  }

  rec.storage_high_water = policy->storage_high_water();
  rec.clamp_warnings = policy->clamp_warnings();
  if (const Trajectory* traj = policy->trajectory()) {
    if (opts.invariant_checks) {
      if (traj->kind == TrajectoryKind::LbSda) detail::merge_report(rec, check_lemma_wt(*traj));
      if (traj->kind == TrajectoryKind::SwLbSda) detail::merge_report(rec, check_sw_leader_bound(*traj, traj->window));
      detail::merge_report(rec, check_storage(*traj));
    }
    if (opts.record_trajectory) rec.trajectory = *traj;
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

/// Linear-interpolation quantile (type 7) of an unsorted sample.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

struct FinalRegretSummary {
  double mean = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, min = 0.0, max = 0.0;
};

struct PolicyAggregate {
  std::string label;
  std::string name;
  std::vector<TimeStep> times;
  std::vector<double> mean, q25, q75;
  FinalRegretSummary final_regret;
  std::vector<double> final_samples;  // final regret per replication, index order
  std::vector<double> mean_pulls;
  std::vector<std::size_t> storage_high_water;  // max over replications
  std::size_t invariant_violations = 0;
  std::vector<std::uint64_t> violating_seeds;
  std::string first_violation;
  std::size_t clamp_warnings = 0;
  double wall_time = 0.0;  // summed over replications
};

struct AggregateResult {
  std::vector<PolicyAggregate> policies;
  std::vector<std::uint64_t> seeds;
  double wall_time = 0.0;

  std::size_t invariant_violations() const {
    std::size_t n = 0;
    for (const auto& p : policies) n += p.invariant_violations;
    return n;
  }
  const PolicyAggregate* find(const std::string& label) const {
    for (const auto& p : policies)
      if (p.label == label) return &p;
    return nullptr;
  }
};

/// Raised when a replication fails; carries the seed that reproduces it.
class ReplicationError : public std::runtime_error {
 public:
  ReplicationError(const std::string& what, std::string policy, std::uint64_t seed)
      : std::runtime_error(what), policy_(std::move(policy)), seed_(seed) {}
  const std::string& policy() const { return policy_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::string policy_;
  std::uint64_t seed_;
};

/// Every reason the config cannot run (empty when valid).
inline std::vector<std::string> config_problems(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.replications < 1) out.emplace_back("replications must be >= 1");
  if (cfg.policies.empty()) out.emplace_back("at least one policy is required");
  std::set<std::string> labels;
  for (const auto& p : cfg.policies) {
    if (!labels.insert(p.display_name()).second) out.push_back("duplicate policy label '" + p.display_name() + "'");
    for (auto& msg : policy_problems(p, cfg.environment)) out.push_back(std::move(msg));
  }
  return out;
}

/// Runs every (policy, replication) pair with seed base_seed + i on
/// `workers` threads and aggregates in replication order, so the result does
/// not depend on scheduling.
inline AggregateResult run_experiment(const ExperimentConfig& cfg, std::size_t workers = 1) {
  if (auto problems = config_problems(cfg); !problems.empty()) throw ConfigError(problems.front());
  const auto started = std::chrono::steady_clock::now();
  const auto times = checkpoint_times(cfg);
  const std::size_t n_pol = cfg.policies.size();
  const std::size_t n_rep = cfg.replications;
  const RunOptions opts{cfg.record_trajectories, cfg.invariant_checks};

  struct Slot {
    std::vector<double> at_checkpoints;
    double final_regret = 0.0;
    std::vector<std::size_t> pulls, high_water;
    std::size_t violations = 0, clamps = 0;
    std::string first_violation;
    double wall = 0.0;
  };
  std::vector<Slot> slots(n_pol * n_rep);
  std::vector<std::exception_ptr> errors(slots.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t task = next++; task < slots.size(); task = next++) {
      const std::size_t p = task / n_rep, i = task % n_rep;
      try {
        RunRecord rec = run_replication(cfg.environment, cfg.policies[p], cfg.base_seed + i, opts);
        Slot& s = slots[task];
        s.at_checkpoints.reserve(times.size());
        for (TimeStep t : times) s.at_checkpoints.push_back(rec.cumulative_regret[t - 1]);
        s.final_regret = rec.final_regret();
        s.pulls = std::move(rec.pulls);
        s.high_water = std::move(rec.storage_high_water);
        s.violations = rec.invariant_violations;
        s.first_violation = std::move(rec.first_violation);
        s.clamps = rec.clamp_warnings;
        s.wall = rec.wall_time;
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, slots.size()));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_threads; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t task = 0; task < errors.size(); ++task) {
    if (!errors[task]) continue;
    const auto& spec = cfg.policies[task / n_rep];
    const std::uint64_t seed = cfg.base_seed + task % n_rep;
    try {
      std::rethrow_exception(errors[task]);
    } catch (const std::exception& e) {
      throw ReplicationError("replication failed for policy '" + spec.display_name() + "' with seed " +
                                 std::to_string(seed) + ": " + e.what(),
                             spec.display_name(), seed);
    }
  }

  AggregateResult out;
  for (std::size_t i = 0; i < n_rep; ++i) out.seeds.push_back(cfg.base_seed + i);
  const std::size_t k_arms = cfg.environment.num_arms();
  for (std::size_t p = 0; p < n_pol; ++p) {
    PolicyAggregate agg;
    agg.label = cfg.policies[p].display_name();
    agg.name = cfg.policies[p].name;
    agg.times = times;
    agg.mean_pulls.assign(k_arms, 0.0);
    std::vector<double> column(n_rep);
    for (std::size_t c = 0; c < times.size(); ++c) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n_rep; ++i) {
        column[i] = slots[p * n_rep + i].at_checkpoints[c];
        sum += column[i];
      }
      agg.mean.push_back(sum / static_cast<double>(n_rep));
      agg.q25.push_back(quantile(column, 0.25));
      agg.q75.push_back(quantile(column, 0.75));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n_rep; ++i) {
      const Slot& s = slots[p * n_rep + i];
      agg.final_samples.push_back(s.final_regret);
      sum += s.final_regret;
      for (std::size_t k = 0; k < k_arms; ++k) agg.mean_pulls[k] += static_cast<double>(s.pulls[k]);
      if (agg.storage_high_water.size() < s.high_water.size()) agg.storage_high_water.resize(s.high_water.size(), 0);
      for (std::size_t k = 0; k < s.high_water.size(); ++k)
        agg.storage_high_water[k] = std::max(agg.storage_high_water[k], s.high_water[k]);
      if (s.violations > 0) {
        if (agg.violating_seeds.empty()) agg.first_violation = s.first_violation;
        agg.violating_seeds.push_back(cfg.base_seed + i);
      }
      agg.invariant_violations += s.violations;
      agg.clamp_warnings += s.clamps;
      agg.wall_time += s.wall;
    }
    for (double& v : agg.mean_pulls) v /= static_cast<double>(n_rep);
    auto& f = agg.final_regret;
    f.mean = sum / static_cast<double>(n_rep);
    f.q25 = quantile(agg.final_samples, 0.25);
    f.median = quantile(agg.final_samples, 0.5);
    f.q75 = quantile(agg.final_samples, 0.75);
    f.min = *std::min_element(agg.final_samples.begin(), agg.final_samples.end());
    f.max = *std::max_element(agg.final_samples.begin(), agg.final_samples.end());
    out.policies.push_back(std::move(agg));
  }
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace lbsda
