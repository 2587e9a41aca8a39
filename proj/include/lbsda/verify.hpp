#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lbsda/envs.hpp"
#include "lbsda/policy.hpp"
#include "lbsda/rng.hpp"

namespace lbsda {

// ---------------------------------------------------------------------------
// Balance function alpha(M, j) = E_{X ~ nu*_j}[(1 - F_{nu_j}(X))^M], where
// nu_j is the law of a sum of j rewards.

struct BalanceQuery {
  ArmModel optimal;
  ArmModel suboptimal;
  std::size_t block_size = 1;  // j
  std::size_t duel_count = 1;  // M
};

/// Probability mass of Bin(n, p) at 0..n.
inline std::vector<double> binomial_pmf(std::size_t n, double p) {
  std::vector<double> pmf(n + 1, 0.0);
  if (p <= 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p >= 1.0) {
    pmf[n] = 1.0;
    return pmf;
  }
  const double lp = std::log(p), lq = std::log1p(-p);
  const double ln_fact_n = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::size_t x = 0; x <= n; ++x) {
    const double xd = static_cast<double>(x);
    const double lc = ln_fact_n - std::lgamma(xd + 1.0) - std::lgamma(static_cast<double>(n - x) + 1.0);
    pmf[x] = std::exp(lc + xd * lp + static_cast<double>(n - x) * lq);
  }
  return pmf;
}

inline std::vector<double> binomial_cdf(std::size_t n, double p) {
  auto c = binomial_pmf(n, p);
  for (std::size_t x = 1; x <= n; ++x) c[x] += c[x - 1];
  for (double& v : c) v = std::min(v, 1.0);
  return c;
}

constexpr std::size_t kMaxExactBlock = 60;

inline void require_bernoulli_query(const BalanceQuery& q) {
  if (q.optimal.family != Family::Bernoulli || q.suboptimal.family != Family::Bernoulli)
    throw std::invalid_argument("exact balance is only available for Bernoulli arms");
  if (q.block_size < 1) throw std::invalid_argument("block size must be >= 1");
  if (q.block_size > kMaxExactBlock) throw std::out_of_range("block size too large for exact enumeration");
}

/// Exact alpha(M, j) for Bernoulli arms by enumerating the binomial support.
inline double balance_exact_bernoulli(const BalanceQuery& q) {
  require_bernoulli_query(q);
  if (q.duel_count == 0) return 1.0;
  const std::size_t j = q.block_size;
  const auto pmf_star = binomial_pmf(j, q.optimal.mean);
  const auto cdf = binomial_cdf(j, q.suboptimal.mean);
  const double m = static_cast<double>(q.duel_count);
  double alpha = 0.0;
  for (std::size_t x = 0; x <= j; ++x) alpha += pmf_star[x] * std::pow(std::max(0.0, 1.0 - cdf[x]), m);
  return alpha;
}

struct BalanceEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of alpha(M, j). F_{nu_j} is exact for Bernoulli
/// (binomial) and Gaussian (normal) arms and a nested empirical CDF built
/// from `nested_samples` block sums for Poisson and Exponential arms.
inline BalanceEstimate balance_monte_carlo(const BalanceQuery& q, std::size_t samples, Rng& rng,
                                           std::size_t nested_samples = 20000) {
  if (samples < 1000) throw std::invalid_argument("balance_monte_carlo needs at least 1000 samples");
  if (q.block_size < 1) throw std::invalid_argument("block size must be >= 1");
  if (q.optimal.family != q.suboptimal.family) throw std::invalid_argument("arms must share a family");
  if (q.duel_count == 0) return {1.0, 0.0};

  const std::size_t j = q.block_size;
  const double m = static_cast<double>(q.duel_count);
  auto block_sum = [&](const ArmModel& arm) {
    double s = 0.0;
    for (std::size_t i = 0; i < j; ++i) s += draw(arm, rng);
    return s;
  };

  std::vector<double> bern_cdf;
  std::vector<double> nested;
  const Family fam = q.optimal.family;
  if (fam == Family::Bernoulli) {
    bern_cdf = binomial_cdf(j, q.suboptimal.mean);
  } else if (fam == Family::Poisson || fam == Family::Exponential) {
    nested.resize(nested_samples);
    for (double& v : nested) v = block_sum(q.suboptimal);
    std::sort(nested.begin(), nested.end());
  }
  auto survival = [&](double x) {
    switch (fam) {
      case Family::Bernoulli: {
        const auto idx = static_cast<std::size_t>(std::llround(x));
        return 1.0 - bern_cdf[std::min(idx, j)];
      }
      case Family::Gaussian: {
        const double jd = static_cast<double>(j);
        const double z = (x - jd * q.suboptimal.mean) / (q.suboptimal.scale * std::sqrt(jd));
        return 0.5 * std::erfc(z / std::numbers::sqrt2);
      }
      default: {
        const auto above = nested.end() - std::upper_bound(nested.begin(), nested.end(), x);
        return static_cast<double>(above) / static_cast<double>(nested.size());
      }
    }
  };

  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double v = std::pow(std::max(0.0, survival(block_sum(q.optimal))), m);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double n = static_cast<double>(samples);
  const double var = samples > 1 ? m2 / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

/// F*_j(u) + (1 - F_j(u))^M for Bernoulli arms, u in [0, j].
inline double balance_upper_bound(const BalanceQuery& q, double u) {
  require_bernoulli_query(q);
  const std::size_t j = q.block_size;
  const auto idx = static_cast<std::size_t>(std::floor(std::clamp(u, 0.0, static_cast<double>(j))));
  const double f_star = binomial_cdf(j, q.optimal.mean)[idx];
  const double f_sub = binomial_cdf(j, q.suboptimal.mean)[idx];
  return f_star + std::pow(std::max(0.0, 1.0 - f_sub), static_cast<double>(q.duel_count));
}

constexpr double kBalanceTolerance = 1e-12;

inline bool check_balance_upper_bound(const BalanceQuery& q, double u) {
  return balance_exact_bernoulli(q) <= balance_upper_bound(q, u) + kBalanceTolerance;
}

/// Checks the bound at every support point u = 0..j.
inline bool check_balance_upper_bound_grid(const BalanceQuery& q) {
  const double alpha = balance_exact_bernoulli(q);
  for (std::size_t u = 0; u <= q.block_size; ++u)
    if (!(alpha <= balance_upper_bound(q, static_cast<double>(u)) + kBalanceTolerance)) return false;
  return true;
}

/// Trade-off choice of u: the CDF level (j kl(nu, nu*) + ln M) / M, mapped to
/// the smallest support point of the suboptimal block sum reaching it.
inline double heuristic_threshold(const BalanceQuery& q) {
  require_bernoulli_query(q);
  const double m = static_cast<double>(std::max<std::size_t>(q.duel_count, 1));
  const double level = std::clamp(
      (static_cast<double>(q.block_size) * kl_divergence(q.suboptimal, q.optimal) + std::log(m)) / m, 0.0, 1.0);
  const auto cdf = binomial_cdf(q.block_size, q.suboptimal.mean);
  for (std::size_t x = 0; x <= q.block_size; ++x)
    if (cdf[x] >= level) return static_cast<double>(x);
  return static_cast<double>(q.block_size);
}

// ---------------------------------------------------------------------------
// Trajectory checkers

struct InvariantReport {
  bool passed = true;
  std::size_t rounds_checked = 0;
  std::size_t violations = 0;
  std::optional<std::size_t> first_violation_round;
  std::string message;

  void fail(std::size_t round, const std::string& what) {
    passed = false;
    if (violations++ == 0) {
      first_violation_round = round;
      message = what;
    }
  }
};

/// For LB-SDA trajectories: W_r = 1 + #{s < r : A_{s+1} = {l(s)}} must equal
/// N_{l(r)}(r), and N_{l(r)}(r) >= r / K, at every round.
inline InvariantReport check_lemma_wt(const Trajectory& traj) {
  if (traj.kind != TrajectoryKind::LbSda)
    throw std::invalid_argument("check_lemma_wt only applies to LB-SDA trajectories with full memory");
  if (traj.num_arms < 2) throw std::invalid_argument("check_lemma_wt requires at least two arms");
  InvariantReport rep;
  std::size_t w = 0;
  for (const auto& e : traj.rounds) {
    if (e.round == 1) {
      w = 1;
    } else if (e.leader_used && e.pulled.size() == 1 && e.pulled.front() == *e.leader_used) {
      ++w;
    }
    ++rep.rounds_checked;
    if (!e.next_leader) {
      rep.fail(e.round, "no leader recorded");
      continue;
    }
    const std::size_t n_lead = e.counts[*e.next_leader];
    if (n_lead != w) {
      rep.fail(e.round, "W_r = " + std::to_string(w) + " but N_leader = " + std::to_string(n_lead) +
                            " at round " + std::to_string(e.round));
    } else if (n_lead * traj.num_arms < e.round) {
      rep.fail(e.round, "N_leader = " + std::to_string(n_lead) + " < r/K at round " + std::to_string(e.round));
    }
  }
  return rep;
}

/// For SW-LB-SDA trajectories: the leader entering round r holds at least
/// min(r-1, tau)/(2K) windowed samples. Rounds r < 2K are exempt.
inline InvariantReport check_sw_leader_bound(const Trajectory& traj, std::size_t window) {
  if (traj.kind != TrajectoryKind::SwLbSda)
    throw std::invalid_argument("check_sw_leader_bound only applies to SW-LB-SDA trajectories");
  InvariantReport rep;
  const std::size_t two_k = 2 * traj.num_arms;
  for (const auto& e : traj.rounds) {
    const std::size_t decision_round = e.round + 1;
    if (decision_round < two_k || !e.next_leader) continue;
    ++rep.rounds_checked;
    const std::size_t n_lead = e.stored[*e.next_leader];
    if (n_lead * two_k < std::min(e.round, window)) {
      rep.fail(decision_round, "leader windowed count " + std::to_string(n_lead) + " below min(r-1,tau)/(2K) at round " +
                                   std::to_string(decision_round));
    }
  }
  return rep;
}

/// Storage invariants: LM stored lengths never exceed m_r nor the pull count;
/// SW windowed counts equal an exact replay of the last tau rounds.
inline InvariantReport check_storage(const Trajectory& traj) {
  InvariantReport rep;
  std::vector<std::size_t> replay(traj.num_arms, 0);
  for (std::size_t i = 0; i < traj.rounds.size(); ++i) {
    const auto& e = traj.rounds[i];
    ++rep.rounds_checked;
    if (traj.kind == TrajectoryKind::SwLbSda) {
      for (ArmIndex k : e.pulled) ++replay[k];
      if (i >= traj.window) {
        const auto& expired = traj.rounds[i - traj.window];
        for (ArmIndex k : expired.pulled) --replay[k];
      }
      if (e.stored != replay) rep.fail(e.round, "windowed counts differ from replay at round " + std::to_string(e.round));
      continue;
    }
    for (std::size_t k = 0; k < traj.num_arms; ++k) {
      if (e.stored[k] > e.counts[k]) {
        rep.fail(e.round, "stored more rewards than pulls at round " + std::to_string(e.round));
        break;
      }
      if (traj.kind == TrajectoryKind::LbSdaLm && e.stored[k] > e.capacity) {
        rep.fail(e.round, "arm " + std::to_string(k) + " stores " + std::to_string(e.stored[k]) + " > m_r = " +
                              std::to_string(e.capacity) + " at round " + std::to_string(e.round));
        break;
      }
      if (traj.kind == TrajectoryKind::LbSda && e.stored[k] != e.counts[k]) {
        rep.fail(e.round, "full-memory history length differs from pull count at round " + std::to_string(e.round));
        break;
      }
    }
  }
  return rep;
}

inline std::string_view trajectory_kind_name(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::LbSda: return "lbsda";
    case TrajectoryKind::LbSdaLm: return "lbsda-lm";
    case TrajectoryKind::SwLbSda: return "sw-lbsda";
  }
  return "unknown";
}

/// One JSON object per line: round, leader used, pulled set, counts, stored
/// (windowed for SW), next leader.
inline void write_trajectory_ndjson(const Trajectory& traj, std::ostream& os) {
  auto list = [&](const auto& v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
  };
  auto opt = [&](const std::optional<ArmIndex>& a) {
    if (a) os << *a;
    else os << "null";
  };
  for (const auto& e : traj.rounds) {
    os << "{\"r\":" << e.round << ",\"leader\":";
    opt(e.leader_used);
    os << ",\"pulled\":";
    list(e.pulled);
    os << ",\"counts\":";
    list(e.counts);
    os << ",\"stored\":";
    list(e.stored);
    os << ",\"next_leader\":";
    opt(e.next_leader);
    os << "}\n";
  }
}

}  // namespace lbsda
