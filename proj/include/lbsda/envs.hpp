#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "lbsda/rng.hpp"

namespace lbsda {

using ArmIndex = std::size_t;
using TimeStep = std::size_t;  // 1-based

enum class Family { Bernoulli, Gaussian, Poisson, Exponential };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::Bernoulli: return "bernoulli";
    case Family::Gaussian: return "gaussian";
    case Family::Poisson: return "poisson";
    case Family::Exponential: return "exponential";
  }
  return "unknown";
}

inline std::optional<Family> parse_family(std::string_view s) {
  if (s == "bernoulli") return Family::Bernoulli;
  if (s == "gaussian") return Family::Gaussian;
  if (s == "poisson") return Family::Poisson;
  if (s == "exponential") return Family::Exponential;
  return std::nullopt;
}

/// One-parameter exponential-family reward distribution in mean
/// parametrization. `scale` is the standard deviation for Gaussian arms and
/// ignored otherwise.
struct ArmModel {
  Family family = Family::Bernoulli;
  double mean = 0.0;
  double scale = 1.0;

  friend bool operator==(const ArmModel&, const ArmModel&) = default;
};

/// Empty string when the model satisfies its family's support constraints,
/// otherwise a description of the violated constraint.
inline std::string arm_model_problem(const ArmModel& m) {
  if (!std::isfinite(m.mean)) return "mean must be finite";
  switch (m.family) {
    case Family::Bernoulli:
      if (m.mean < 0.0 || m.mean > 1.0) return "Bernoulli mean must lie in [0,1]";
      break;
    case Family::Gaussian:
      if (!(m.scale > 0.0) || !std::isfinite(m.scale)) return "Gaussian scale must be > 0";
      break;
    case Family::Poisson:
      if (!(m.mean > 0.0)) return "Poisson mean must be > 0";
      break;
    case Family::Exponential:
      if (!(m.mean > 0.0)) return "Exponential mean must be > 0";
      break;
  }
  return {};
}

inline bool kl_comparable(const ArmModel& a, const ArmModel& b) {
  if (a.family != b.family) return false;
  return a.family != Family::Gaussian || a.scale == b.scale;
}

inline double xlogx_ratio(double x, double y) {
  // x ln(x/y) with 0 ln 0 = 0
  if (x == 0.0) return 0.0;
  return x * std::log(x / y);
}

/// Bernoulli KL divergence kl(p, q). Returns +infinity when q sits on the
/// boundary of [0,1] and p differs from it.
inline double bernoulli_kl(double p, double q) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (p == q) return 0.0;
  if ((q <= 0.0 && p > 0.0) || (q >= 1.0 && p < 1.0)) return inf;
  return std::max(0.0, xlogx_ratio(p, q) + xlogx_ratio(1.0 - p, 1.0 - q));
}

inline double gaussian_kl(double mu_a, double mu_b, double sigma) {
  const double d = mu_a - mu_b;
  return d * d / (2.0 * sigma * sigma);
}

inline double poisson_kl(double la, double lb) {
  if (la == lb) return 0.0;
  if (lb <= 0.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, xlogx_ratio(la, lb) + lb - la);
}

inline double exponential_kl(double ma, double mb) {
  if (ma == mb) return 0.0;
  return std::max(0.0, std::log(mb / ma) + ma / mb - 1.0);
}

/// KL divergence between two same-family arms expressed through their means.
inline double kl_divergence(const ArmModel& a, const ArmModel& b) {
  if (!kl_comparable(a, b)) {
    throw std::domain_error("kl_divergence: arms are not from the same family/scale");
  }
  switch (a.family) {
    case Family::Bernoulli: return bernoulli_kl(a.mean, b.mean);
    case Family::Gaussian: return gaussian_kl(a.mean, b.mean, a.scale);
    case Family::Poisson: return poisson_kl(a.mean, b.mean);
    case Family::Exponential: return exponential_kl(a.mean, b.mean);
  }
  return 0.0;
}

inline double draw(const ArmModel& m, Rng& rng) {
  switch (m.family) {
    case Family::Bernoulli:
      return uniform01(rng) < m.mean ? 1.0 : 0.0;
    case Family::Gaussian:
      return boost::random::normal_distribution<double>{m.mean, m.scale}(rng);
    case Family::Poisson:
      return static_cast<double>(boost::random::poisson_distribution<long, double>{m.mean}(rng));
    case Family::Exponential:
      return boost::random::exponential_distribution<double>{1.0 / m.mean}(rng);
  }
  return 0.0;
}

struct Phase {
  TimeStep start = 1;
  std::vector<ArmModel> arms;

  friend bool operator==(const Phase&, const Phase&) = default;
};

/// Piecewise-stationary environment. A phase governs every t in
/// [start, next start). Immutable once validated.
class EnvironmentSpec {
 public:
  EnvironmentSpec() = default;

  EnvironmentSpec(TimeStep horizon, std::vector<Phase> phases)
      : horizon_(horizon), phases_(std::move(phases)) {
    const auto problems = validate(horizon_, phases_);
    if (!problems.empty()) throw std::invalid_argument("EnvironmentSpec: " + problems.front());
  }

  static EnvironmentSpec stationary(TimeStep horizon, std::vector<ArmModel> arms) {
    return EnvironmentSpec(horizon, {Phase{1, std::move(arms)}});
  }

  std::size_t num_arms() const { return phases_.empty() ? 0 : phases_.front().arms.size(); }
  TimeStep horizon() const { return horizon_; }
  const std::vector<Phase>& phases() const { return phases_; }
  std::size_t num_breakpoints() const { return phases_.empty() ? 0 : phases_.size() - 1; }
  Family family() const { return phases_.front().arms.front().family; }

  /// Largest Gaussian scale over all arms and phases (1 for other families).
  double max_scale() const {
    if (family() != Family::Gaussian) return 1.0;
    double s = 0.0;
    for (const auto& p : phases_)
      for (const auto& a : p.arms) s = std::max(s, a.scale);
    return s;
  }

  std::size_t phase_index(TimeStep t) const {
    check_time(t);
    auto it = std::upper_bound(phases_.begin(), phases_.end(), t,
                               [](TimeStep v, const Phase& p) { return v < p.start; });
    return static_cast<std::size_t>(std::distance(phases_.begin(), it)) - 1;
  }

  const ArmModel& model(ArmIndex arm, TimeStep t) const {
    check_arm(arm);
    return phases_[phase_index(t)].arms[arm];
  }

  double oracle_mean(ArmIndex arm, TimeStep t) const { return model(arm, t).mean; }

  double best_mean(TimeStep t) const {
    const auto& arms = phases_[phase_index(t)].arms;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& a : arms) best = std::max(best, a.mean);
    return best;
  }

  double sample_reward(ArmIndex arm, TimeStep t, Rng& rng) const { return draw(model(arm, t), rng); }

  /// Human-readable list of every violated constraint (empty when valid).
  static std::vector<std::string> validate(TimeStep horizon, const std::vector<Phase>& phases) {
    std::vector<std::string> out;
    if (horizon < 1) out.emplace_back("horizon must be >= 1");
    if (phases.empty()) {
      out.emplace_back("at least one phase is required");
      return out;
    }
    if (phases.front().start != 1) out.emplace_back("first phase must start at t=1");
    const std::size_t k = phases.front().arms.size();
    if (k < 2) out.emplace_back("num_arms must be >= 2");
    const Family fam = k > 0 ? phases.front().arms.front().family : Family::Bernoulli;
    for (std::size_t i = 0; i < phases.size(); ++i) {
      const auto& p = phases[i];
      const std::string where = "phases[" + std::to_string(i) + "]";
      if (i > 0 && p.start <= phases[i - 1].start)
        out.push_back(where + ".start must be strictly increasing");
      if (p.start > horizon) out.push_back(where + ".start exceeds the horizon");
      if (p.arms.size() != k) out.push_back(where + " must list " + std::to_string(k) + " arms");
      for (std::size_t a = 0; a < p.arms.size(); ++a) {
        if (p.arms[a].family != fam) out.push_back(where + ".arms[" + std::to_string(a) + "] family differs");
        if (auto msg = arm_model_problem(p.arms[a]); !msg.empty())
          out.push_back(where + ".arms[" + std::to_string(a) + "]: " + msg);
      }
    }
    return out;
  }

  friend bool operator==(const EnvironmentSpec&, const EnvironmentSpec&) = default;

 private:
  void check_time(TimeStep t) const {
    if (t < 1 || t > horizon_) throw std::invalid_argument("time index out of range [1, T]");
  }
  void check_arm(ArmIndex arm) const {
    if (arm >= num_arms()) throw std::invalid_argument("arm index out of range");
  }

  TimeStep horizon_ = 0;
  std::vector<Phase> phases_;
};

inline double sample_reward(const EnvironmentSpec& env, ArmIndex arm, TimeStep t, Rng& rng) {
  return env.sample_reward(arm, t, rng);
}

inline double oracle_mean(const EnvironmentSpec& env, ArmIndex arm, TimeStep t) {
  return env.oracle_mean(arm, t);
}

}  // namespace lbsda
