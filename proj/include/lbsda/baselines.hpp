#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "lbsda/envs.hpp"
#include "lbsda/policy.hpp"
#include "lbsda/rng.hpp"

namespace lbsda {

// ---------------------------------------------------------------------------
// Tunings

/// Rounds to the nearest integer, ties downward.
inline std::size_t round_half_down(double x) {
  const double c = std::ceil(x);
  return static_cast<std::size_t>(c - x >= 0.5 ? c - 1.0 : c);
}

/// Sliding window tau = 2 B sqrt(T ln T / Gamma); B = 1 + 2 sigma for
/// Gaussian rewards, 1 otherwise. Gamma = 0 gives tau = T.
inline std::size_t tuned_window(std::size_t horizon, std::size_t breakpoints, double range = 1.0) {
  if (breakpoints == 0) return horizon;
  const double t = static_cast<double>(horizon);
  return std::max<std::size_t>(1, round_half_down(2.0 * range * std::sqrt(t * std::log(t) / static_cast<double>(breakpoints))));
}

/// Discount gamma with 1/(1-gamma) = 4 B sqrt(T / Gamma) (rounded). Gamma = 0
/// disables discounting.
inline double tuned_discount(std::size_t horizon, std::size_t breakpoints, double range = 1.0) {
  if (breakpoints == 0) return 1.0;
  const double eff = static_cast<double>(round_half_down(
      4.0 * range * std::sqrt(static_cast<double>(horizon) / static_cast<double>(breakpoints))));
  return 1.0 - 1.0 / std::max(eff, 1.0);
}

struct Exp3sTuning {
  double alpha;
  double gamma;
};

/// alpha = 1/T, gamma = min(1, sqrt(K (e + Gamma ln(K T)) / ((e - 1) T))).
inline Exp3sTuning tuned_exp3s(std::size_t horizon, std::size_t num_arms, std::size_t breakpoints) {
  constexpr double e = std::numbers::e;
  const double t = static_cast<double>(horizon);
  const double k = static_cast<double>(num_arms);
  const double g = std::sqrt(k * (e + static_cast<double>(breakpoints) * std::log(k * t)) / ((e - 1.0) * t));
  return {1.0 / t, std::min(1.0, g)};
}

// ---------------------------------------------------------------------------
// kl-UCB

/// Exploration level f(t) = ln t + 3 ln ln t, clamped at 0 (ln t alone below t = 2).
inline double klucb_exploration(double t) {
  if (t < 2.0) return std::max(0.0, std::log(std::max(t, 1.0)));
  return std::max(0.0, std::log(t) + 3.0 * std::log(std::log(t)));
}

/// sup{ q >= mean : count * kl(mean, q) <= level } for the family of `model`
/// (model.mean is ignored; model.scale is sigma for Gaussian arms).
inline double klucb_index_level(double mean, double count, double level, const ArmModel& model) {
  if (!(count > 0.0)) return std::numeric_limits<double>::infinity();
  const double budget = level / count;
  switch (model.family) {
    case Family::Gaussian:
      return mean + model.scale * std::sqrt(2.0 * budget);
    case Family::Bernoulli: {
      const double p = std::clamp(mean, 0.0, 1.0);
      if (p >= 1.0) return 1.0;
      double lo = p, hi = 1.0;
      if (bernoulli_kl(p, hi) <= budget) return 1.0;
      while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (bernoulli_kl(p, mid) <= budget ? lo : hi) = mid;
      }
      return lo;
    }
    case Family::Poisson:
    case Family::Exponential: {
      auto kl = [&](double q) {
        return model.family == Family::Poisson ? poisson_kl(mean, q) : exponential_kl(mean, q);
      };
      double lo = mean, hi = std::max(2.0 * mean, mean + 1.0);
      while (kl(hi) <= budget) hi = mean + 2.0 * (hi - mean);
      while (hi - lo > 1e-9 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (kl(mid) <= budget ? lo : hi) = mid;
      }
      return lo;
    }
  }
  return mean;
}

inline double klucb_index(double mean, double count, double t, const ArmModel& model) {
  return klucb_index_level(mean, count, klucb_exploration(t), model);
}

// ---------------------------------------------------------------------------
// Per-arm statistics. Each exposes count(k), sum(k), update(arm, reward) and
// horizon_term(t): the "t" an index should use (t, min(t,tau) or n_t(gamma)).

class PlainStats {
 public:
  explicit PlainStats(std::size_t k) : counts_(k, 0.0), sums_(k, 0.0) {}
  void update(ArmIndex arm, double reward) {
    counts_[arm] += 1.0;
    sums_[arm] += reward;
  }
  double count(ArmIndex k) const { return counts_[k]; }
  double sum(ArmIndex k) const { return sums_[k]; }
  double horizon_term(std::size_t t) const { return static_cast<double>(t); }
  std::size_t num_arms() const { return counts_.size(); }

 private:
  std::vector<double> counts_, sums_;
};

/// Exact statistics over the last `window` time steps.
class WindowedStats {
 public:
  WindowedStats(std::size_t k, std::size_t window) : window_(window), counts_(k, 0), sums_(k, 0.0) {
    if (window == 0) throw std::invalid_argument("window must be >= 1");
  }
  void update(ArmIndex arm, double reward) {
    steps_.emplace_back(arm, reward);
    ++counts_[arm];
    sums_[arm] += reward;
    if (steps_.size() > window_) {
      const auto [old_arm, old_reward] = steps_.front();
      steps_.pop_front();
      --counts_[old_arm];
      sums_[old_arm] -= old_reward;
      if (counts_[old_arm] == 0) sums_[old_arm] = 0.0;
    }
  }
  double count(ArmIndex k) const { return static_cast<double>(counts_[k]); }
  double sum(ArmIndex k) const { return sums_[k]; }
  double horizon_term(std::size_t t) const { return static_cast<double>(std::min(t, window_)); }
  std::size_t num_arms() const { return counts_.size(); }
  std::size_t window() const { return window_; }

 private:
  std::size_t window_;
  std::deque<std::pair<ArmIndex, double>> steps_;
  std::vector<std::size_t> counts_;
  std::vector<double> sums_;
};

/// Discounted statistics: every step all counts and sums are multiplied by
/// gamma before the pulled arm is credited.
class DiscountedStats {
 public:
  DiscountedStats(std::size_t k, double gamma) : gamma_(gamma), counts_(k, 0.0), sums_(k, 0.0) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("discount must lie in (0,1]");
  }
  void update(ArmIndex arm, double reward) {
    for (std::size_t k = 0; k < counts_.size(); ++k) {
      counts_[k] *= gamma_;
      sums_[k] *= gamma_;
    }
    counts_[arm] += 1.0;
    sums_[arm] += reward;
  }
  /// Advance one step without a pull.
  void decay() {
    for (std::size_t k = 0; k < counts_.size(); ++k) {
      counts_[k] *= gamma_;
      sums_[k] *= gamma_;
    }
  }
  double count(ArmIndex k) const { return counts_[k]; }
  double sum(ArmIndex k) const { return sums_[k]; }
  double total_count() const {
    double s = 0.0;
    for (double c : counts_) s += c;
    return s;
  }
  double horizon_term(std::size_t) const { return total_count(); }
  std::size_t num_arms() const { return counts_.size(); }
  double gamma() const { return gamma_; }

 private:
  double gamma_;
  std::vector<double> counts_, sums_;
};

// ---------------------------------------------------------------------------
// Index rules

/// mean + width * range * sqrt(ln(h) / N). width = sqrt(2) gives UCB1,
/// sqrt(xi) SW-UCB and 2 sqrt(xi) D-UCB.
struct UcbIndex {
  double width = std::numbers::sqrt2;
  double range = 1.0;

  template <class Stats>
  double operator()(const Stats& s, ArmIndex k, std::size_t t, Rng&) const {
    const double n = s.count(k);
    const double h = std::max(s.horizon_term(t), 1.0);
    return s.sum(k) / n + width * range * std::sqrt(std::log(h) / n);
  }
};

struct KlUcbIndex {
  ArmModel family;  // family and sigma; mean unused

  template <class Stats>
  double operator()(const Stats& s, ArmIndex k, std::size_t t, Rng&) const {
    const double n = s.count(k);
    return klucb_index(s.sum(k) / n, n, s.horizon_term(t), family);
  }
};

/// One posterior draw: Beta(1 + S, 1 + N - S) for Bernoulli rewards, Normal
/// (mean, sigma^2 / N) with a flat prior for Gaussian rewards.
struct ThompsonIndex {
  ArmModel family;

  template <class Stats>
  double operator()(const Stats& s, ArmIndex k, std::size_t, Rng& rng) const {
    const double n = s.count(k);
    const double succ = std::clamp(s.sum(k), 0.0, n);
    if (family.family == Family::Bernoulli)
      return boost::random::beta_distribution<double>{1.0 + succ, 1.0 + (n - succ)}(rng);
    return boost::random::normal_distribution<double>{s.sum(k) / n, family.scale / std::sqrt(n)}(rng);
  }
};

/// Index policy over a statistics type. Arms are first pulled once each (and
/// whenever their statistics become empty); afterwards the argmax of the
/// index is pulled, lowest arm on ties.
template <class Stats, class Index>
class IndexPolicy : public Policy {
 public:
  IndexPolicy(Stats stats, Index index, bool needs_forced_pulls_when_empty = true)
      : stats_(std::move(stats)), index_(std::move(index)), refill_(needs_forced_pulls_when_empty),
        ever_pulled_(stats_.num_arms(), false) {}

  std::vector<ArmIndex> select(Rng& rng) override {
    ++t_;
    const std::size_t k_arms = stats_.num_arms();
    for (ArmIndex k = 0; k < k_arms; ++k) {
      if (!ever_pulled_[k] || (refill_ && !(stats_.count(k) > 0.0))) return {k};
    }
    ArmIndex best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (ArmIndex k = 0; k < k_arms; ++k) {
      const double v = index_(stats_, k, t_, rng);
      if (v > best_value) {
        best_value = v;
        best = k;
      }
    }
    return {best};
  }

  void observe(ArmIndex arm, double reward) override {
    ever_pulled_[arm] = true;
    stats_.update(arm, reward);
  }

  const Stats& stats() const { return stats_; }

 private:
  Stats stats_;
  Index index_;
  bool refill_;
  std::vector<bool> ever_pulled_;
  std::size_t t_ = 0;
};

// ---------------------------------------------------------------------------
// EXP3S

/// EXP3.S exponential weights with weight sharing. Rewards are mapped to
/// [0,1] via (reward - low) / (high - low) and clamped.
class Exp3sPolicy : public Policy {
 public:
  Exp3sPolicy(std::size_t num_arms, double alpha, double gamma, double low = 0.0, double high = 1.0)
      : alpha_(alpha), gamma_(gamma), low_(low), high_(high), weights_(num_arms, 1.0) {
    if (num_arms < 1) throw std::invalid_argument("EXP3S requires at least one arm");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("EXP3S gamma must lie in (0,1]");
    if (!(alpha >= 0.0)) throw std::invalid_argument("EXP3S alpha must be >= 0");
    if (!(high > low)) throw std::invalid_argument("EXP3S reward range is empty");
  }

  std::vector<double> probabilities() const {
    double total = 0.0;
    for (double w : weights_) total += w;
    const double k = static_cast<double>(weights_.size());
    std::vector<double> p(weights_.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = (1.0 - gamma_) * weights_[i] / total + gamma_ / k;
    return p;
  }

  std::vector<ArmIndex> select(Rng& rng) override {
    last_probs_ = probabilities();
    const double u = uniform01(rng);
    double acc = 0.0;
    ArmIndex chosen = last_probs_.size() - 1;
    for (ArmIndex i = 0; i < last_probs_.size(); ++i) {
      acc += last_probs_[i];
      if (u < acc) {
        chosen = i;
        break;
      }
    }
    return {chosen};
  }

  void observe(ArmIndex arm, double reward) override {
    if (last_probs_.empty()) last_probs_ = probabilities();
    double x = (reward - low_) / (high_ - low_);
    if (x < 0.0 || x > 1.0) {
      ++clamped_;
      x = std::clamp(x, 0.0, 1.0);
    }
    const double k = static_cast<double>(weights_.size());
    double total = 0.0;
    for (double w : weights_) total += w;
    const double share = std::numbers::e * alpha_ / k * total;
    const double gain = x / last_probs_[arm];
    weights_[arm] *= std::exp(gamma_ * gain / k);
    for (double& w : weights_) w += share;
    double new_total = 0.0;
    for (double w : weights_) new_total += w;
    if (new_total > kRenormalize) {
      for (double& w : weights_) w /= new_total;
    }
    last_probs_.clear();
  }

  std::size_t clamp_warnings() const override { return clamped_; }
  const std::vector<double>& weights() const { return weights_; }
  double gamma() const { return gamma_; }

 private:
  static constexpr double kRenormalize = 1e100;

  double alpha_, gamma_, low_, high_;
  std::vector<double> weights_;
  std::vector<double> last_probs_;
  std::size_t clamped_ = 0;
};

// ---------------------------------------------------------------------------
// Reference policies used by tests and sanity runs.

/// Always pulls the same arm.
class FixedArmPolicy : public Policy {
 public:
  explicit FixedArmPolicy(ArmIndex arm) : arm_(arm) {}
  std::vector<ArmIndex> select(Rng&) override { return {arm_}; }
  void observe(ArmIndex, double) override {}

 private:
  ArmIndex arm_;
};

/// Pulls argmax_k mu_k(t) at every step (knows the environment).
class OraclePolicy : public Policy {
 public:
  explicit OraclePolicy(const EnvironmentSpec& env) : env_(&env) {}
  std::vector<ArmIndex> select(Rng&) override {
    ++t_;
    ArmIndex best = 0;
    for (ArmIndex k = 1; k < env_->num_arms(); ++k)
      if (env_->oracle_mean(k, t_) > env_->oracle_mean(best, t_)) best = k;
    return {best};
  }
  void observe(ArmIndex, double) override {}

 private:
  const EnvironmentSpec* env_;
  TimeStep t_ = 0;
};

}  // namespace lbsda
