#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lbsda/baselines.hpp"
#include "lbsda/envs.hpp"
#include "lbsda/memory_schedule.hpp"
#include "lbsda/policy.hpp"
#include "lbsda/sda.hpp"

namespace lbsda {

/// Raised for configurations that cannot be simulated (unknown policy,
/// family mismatch, missing or out-of-range parameters).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A policy by name plus its parameters. Unset tunings are filled in by
/// resolve_policy() from the environment.
struct PolicySpec {
  std::string name;
  std::string label;  // defaults to name; must be unique within an experiment
  std::optional<std::size_t> window;           // tau (sliding-window policies)
  std::optional<double> discount;              // gamma (discounted policies)
  std::optional<MemorySchedule> schedule;      // lbsda-lm
  std::optional<double> range;                 // reward range B of UCB-style widths
  std::optional<double> sigma;                 // Gaussian sigma for kl-UCB / TS
  std::optional<double> xi;                    // SW-UCB / D-UCB exploration constant
  std::optional<double> alpha;                 // exp3s
  std::optional<double> exp3_gamma;            // exp3s
  std::optional<std::size_t> arm;              // fixed

  const std::string& display_name() const { return label.empty() ? name : label; }

  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

inline PolicySpec policy_named(std::string name, std::string label = {}) {
  PolicySpec p;
  p.name = std::move(name);
  p.label = std::move(label);
  return p;
}

inline const std::vector<std::string_view>& known_policies() {
  static const std::vector<std::string_view> names{
      "lbsda", "lbsda-lm", "sw-lbsda", "ucb1", "klucb", "ts", "sw-ucb", "d-ucb",
      "sw-klucb", "d-klucb", "sw-ts", "dts", "exp3s", "fixed", "oracle"};
  return names;
}

inline bool is_known_policy(std::string_view name) {
  for (auto n : known_policies())
    if (n == name) return true;
  return false;
}

inline bool is_round_based(std::string_view name) {
  return name == "lbsda" || name == "lbsda-lm" || name == "sw-lbsda";
}

namespace detail {

inline bool uses_window(std::string_view n) { return n == "sw-lbsda" || n == "sw-ucb" || n == "sw-klucb" || n == "sw-ts"; }
inline bool uses_discount(std::string_view n) { return n == "d-ucb" || n == "d-klucb" || n == "dts"; }
inline bool is_kl(std::string_view n) { return n == "klucb" || n == "sw-klucb" || n == "d-klucb"; }
inline bool is_ts(std::string_view n) { return n == "ts" || n == "sw-ts" || n == "dts"; }
inline bool is_ucb(std::string_view n) { return n == "ucb1" || n == "sw-ucb" || n == "d-ucb"; }

/// 1 + 2 sigma for Gaussian environments, 1 otherwise.
inline double default_range(const EnvironmentSpec& env) {
  return env.family() == Family::Gaussian ? 1.0 + 2.0 * env.max_scale() : 1.0;
}

}  // namespace detail

/// Fills every unset tuning of `spec` from the environment. Messages about
/// fallbacks (e.g. no breakpoints, so tau = T) are appended to `warnings`.
inline PolicySpec resolve_policy(PolicySpec spec, const EnvironmentSpec& env, std::vector<std::string>* warnings = nullptr) {
  const std::string& n = spec.name;
  const std::size_t T = env.horizon();
  const std::size_t gamma_t = env.num_breakpoints();
  const bool gaussian = env.family() == Family::Gaussian;
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(spec.display_name() + ": " + msg);
  };

  if ((detail::is_ucb(n) || detail::is_kl(n)) && !spec.range) spec.range = detail::default_range(env);
  if ((detail::is_kl(n) || detail::is_ts(n)) && gaussian && !spec.sigma) spec.sigma = env.max_scale();
  if ((n == "sw-ucb" || n == "d-ucb") && !spec.xi) spec.xi = 0.6;

  if (detail::uses_window(n) && !spec.window) {
    // UCB-family windows scale with the reward range; SW-LB-SDA and SW-TS use the plain tuning.
    const double b = (detail::is_ucb(n) || detail::is_kl(n)) ? *spec.range : 1.0;
    spec.window = tuned_window(T, gamma_t, b);
    if (gamma_t == 0) warn("no breakpoints, window defaults to the horizon");
  }
  if (detail::uses_discount(n) && !spec.discount) {
    const double b = (detail::is_ucb(n) || detail::is_kl(n)) ? *spec.range : 1.0;
    spec.discount = tuned_discount(T, gamma_t, b);
    if (gamma_t == 0) warn("no breakpoints, discount defaults to 1 (no forgetting)");
  }
  if (n == "lbsda-lm" && !spec.schedule) spec.schedule = MemorySchedule{};
  if (n == "exp3s") {
    const auto tuning = tuned_exp3s(T, env.num_arms(), gamma_t);
    if (!spec.alpha) spec.alpha = tuning.alpha;
    if (!spec.exp3_gamma) spec.exp3_gamma = tuning.gamma;
  }
  return spec;
}

/// Every reason `spec` cannot run on `env` (empty when it can).
inline std::vector<std::string> policy_problems(const PolicySpec& spec, const EnvironmentSpec& env) {
  std::vector<std::string> out;
  const std::string where = "policy '" + spec.display_name() + "'";
  const std::string& n = spec.name;
  if (!is_known_policy(n)) {
    out.push_back(where + ": unknown policy name '" + n + "'");
    return out;
  }
  const Family fam = env.family();
  if ((detail::is_ts(n) || n == "exp3s") && fam != Family::Bernoulli && fam != Family::Gaussian)
    out.push_back(where + ": unsupported for the " + std::string(family_name(fam)) + " family");
  if (detail::uses_window(n)) {
    if (!spec.window) out.push_back(where + ": tau is required");
    else if (*spec.window < env.num_arms()) out.push_back(where + ": tau must be >= num_arms (" + std::to_string(env.num_arms()) + ")");
  }
  if (detail::uses_discount(n)) {
    if (!spec.discount) out.push_back(where + ": gamma is required");
    else if (!(*spec.discount > 0.0 && *spec.discount <= 1.0)) out.push_back(where + ": gamma must lie in (0,1]");
  }
  if (n == "lbsda-lm" && !spec.schedule) out.push_back(where + ": schedule is required");
  if (spec.range && !(*spec.range > 0.0)) out.push_back(where + ": range must be > 0");
  if (spec.sigma && !(*spec.sigma > 0.0)) out.push_back(where + ": sigma must be > 0");
  if ((detail::is_kl(n) || detail::is_ts(n)) && fam == Family::Gaussian && !spec.sigma)
    out.push_back(where + ": sigma is required for Gaussian environments");
  if ((detail::is_ucb(n) || detail::is_kl(n)) && !spec.range) out.push_back(where + ": range is required");
  if ((n == "sw-ucb" || n == "d-ucb") && !spec.xi) out.push_back(where + ": xi is required");
  if (n == "exp3s") {
    if (!spec.alpha || !spec.exp3_gamma) out.push_back(where + ": alpha and gamma are required");
    else if (!(*spec.exp3_gamma > 0.0 && *spec.exp3_gamma <= 1.0)) out.push_back(where + ": gamma must lie in (0,1]");
  }
  if (n == "fixed") {
    if (!spec.arm) out.push_back(where + ": arm is required");
    else if (*spec.arm >= env.num_arms()) out.push_back(where + ": arm out of range");
  }
  return out;
}

/// Builds a policy instance for one replication. `spec` must be resolved.
inline std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const EnvironmentSpec& env) {
  if (auto problems = policy_problems(spec, env); !problems.empty()) throw ConfigError(problems.front());
  const std::string& n = spec.name;
  const std::size_t k = env.num_arms();
  ArmModel family{env.family(), 0.0, spec.sigma.value_or(1.0)};

  if (n == "lbsda") return std::make_unique<LbSdaPolicy>(k);
  if (n == "lbsda-lm") return std::make_unique<LbSdaPolicy>(k, *spec.schedule);
  if (n == "sw-lbsda") return std::make_unique<SwLbSdaPolicy>(k, *spec.window);

  if (n == "ucb1")
    return std::make_unique<IndexPolicy<PlainStats, UcbIndex>>(PlainStats(k), UcbIndex{std::numbers::sqrt2, *spec.range});
  if (n == "sw-ucb")
    return std::make_unique<IndexPolicy<WindowedStats, UcbIndex>>(WindowedStats(k, *spec.window),
                                                                  UcbIndex{std::sqrt(*spec.xi), *spec.range});
  if (n == "d-ucb")
    return std::make_unique<IndexPolicy<DiscountedStats, UcbIndex>>(DiscountedStats(k, *spec.discount),
                                                                    UcbIndex{2.0 * std::sqrt(*spec.xi), *spec.range});
  if (n == "klucb") return std::make_unique<IndexPolicy<PlainStats, KlUcbIndex>>(PlainStats(k), KlUcbIndex{family});
  if (n == "sw-klucb")
    return std::make_unique<IndexPolicy<WindowedStats, KlUcbIndex>>(WindowedStats(k, *spec.window), KlUcbIndex{family});
  if (n == "d-klucb")
    return std::make_unique<IndexPolicy<DiscountedStats, KlUcbIndex>>(DiscountedStats(k, *spec.discount), KlUcbIndex{family});
  if (n == "ts") return std::make_unique<IndexPolicy<PlainStats, ThompsonIndex>>(PlainStats(k), ThompsonIndex{family});
  if (n == "sw-ts")
    return std::make_unique<IndexPolicy<WindowedStats, ThompsonIndex>>(WindowedStats(k, *spec.window), ThompsonIndex{family});
  if (n == "dts")
    return std::make_unique<IndexPolicy<DiscountedStats, ThompsonIndex>>(DiscountedStats(k, *spec.discount), ThompsonIndex{family});
  if (n == "exp3s") {
    const double high = env.family() == Family::Gaussian ? 1.0 + 2.0 * env.max_scale() : 1.0;
    return std::make_unique<Exp3sPolicy>(k, *spec.alpha, *spec.exp3_gamma, 0.0, high);
  }
  if (n == "fixed") return std::make_unique<FixedArmPolicy>(*spec.arm);
  if (n == "oracle") return std::make_unique<OraclePolicy>(env);
  throw ConfigError("unknown policy name '" + n + "'");
}

}  // namespace lbsda
