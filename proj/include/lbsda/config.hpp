#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lbsda/envs.hpp"
#include "lbsda/factory.hpp"
#include "lbsda/harness.hpp"
#include "lbsda/memory_schedule.hpp"

namespace lbsda {

/// A config that failed validation; `errors` names each offending key.
class ConfigValidationError : public std::runtime_error {
 public:
  explicit ConfigValidationError(std::vector<std::string> errors)
      : std::runtime_error(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& e) {
    std::string s = "invalid configuration:";
    for (const auto& x : e) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> errors_;
};

struct ParsedConfig {
  ExperimentConfig config;
  std::vector<std::string> warnings;
};

namespace detail {

using json = nlohmann::json;

class JsonReader {
 public:
  std::vector<std::string> errors;

  void unknown_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (auto a : allowed) ok = ok || it.key() == a;
      if (!ok) errors.push_back(path(where, it.key()) + ": unknown key");
    }
  }

  template <class T>
  std::optional<T> get(const json& obj, const std::string& where, const std::string& key, bool required) {
    if (!obj.contains(key)) {
      if (required) errors.push_back(path(where, key) + ": required key is missing");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return type_error(where, key, "a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return type_error(where, key, "a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
        return type_error(where, key, "a non-negative integer");
      return static_cast<T>(v.get<unsigned long long>());
    } else {
      if (!v.is_number()) return type_error(where, key, "a number");
      return v.get<double>();
    }
  }

  static std::string path(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
  }

 private:
  std::nullopt_t type_error(const std::string& where, const std::string& key, const char* what) {
    errors.push_back(path(where, key) + ": must be " + what);
    return std::nullopt;
  }
};

inline std::optional<EnvironmentSpec> read_environment(const json& j, std::size_t horizon, JsonReader& rd) {
  const std::string where = "environment";
  if (!j.is_object()) {
    rd.errors.push_back("environment: must be an object");
    return std::nullopt;
  }
  rd.unknown_keys(j, where, {"family", "phases"});
  const auto fam_name = rd.get<std::string>(j, where, "family", true);
  std::optional<Family> fam;
  if (fam_name) {
    fam = parse_family(*fam_name);
    if (!fam) rd.errors.push_back("environment.family: must be one of bernoulli, gaussian, poisson, exponential");
  }
  if (!j.contains("phases") || !j.at("phases").is_array() || j.at("phases").empty()) {
    rd.errors.push_back("environment.phases: must be a non-empty array");
    return std::nullopt;
  }
  const std::size_t before = rd.errors.size();
  std::vector<Phase> phases;
  const auto& arr = j.at("phases");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string pw = "environment.phases[" + std::to_string(i) + "]";
    const json& pj = arr[i];
    if (!pj.is_object()) {
      rd.errors.push_back(pw + ": must be an object");
      continue;
    }
    rd.unknown_keys(pj, pw, {"start", "means", "scales", "scale"});
    Phase ph;
    ph.start = rd.get<std::size_t>(pj, pw, "start", true).value_or(0);
    if (ph.start < 1 || ph.start > horizon)
      rd.errors.push_back(pw + ".start: must lie in [1, horizon=" + std::to_string(horizon) + "]");
    if (i == 0 && ph.start != 1) rd.errors.push_back(pw + ".start: first phase must start at 1");
    if (i > 0 && pj.contains("start") && arr[i - 1].is_object() && arr[i - 1].contains("start") &&
        arr[i - 1]["start"].is_number_unsigned() && ph.start <= arr[i - 1]["start"].get<std::size_t>())
      rd.errors.push_back(pw + ".start: breakpoints must be strictly increasing");
    if (!pj.contains("means") || !pj.at("means").is_array()) {
      rd.errors.push_back(pw + ".means: must be an array of numbers");
      continue;
    }
    const auto& means = pj.at("means");
    std::vector<double> scales;
    if (pj.contains("scales")) {
      if (!pj.at("scales").is_array() || pj.at("scales").size() != means.size()) {
        rd.errors.push_back(pw + ".scales: must be an array with one entry per arm");
      } else {
        for (const auto& s : pj.at("scales")) scales.push_back(s.is_number() ? s.get<double>() : -1.0);
      }
    } else if (pj.contains("scale")) {
      const auto s = rd.get<double>(pj, pw, "scale", true);
      scales.assign(means.size(), s.value_or(-1.0));
    }
    if (fam == Family::Gaussian && scales.empty() && !pj.contains("scales"))
      rd.errors.push_back(pw + ".scales: Gaussian phases need 'scales' or 'scale'");
    for (std::size_t a = 0; a < means.size(); ++a) {
      const std::string aw = pw + ".means[" + std::to_string(a) + "]";
      if (!means[a].is_number()) {
        rd.errors.push_back(aw + ": must be a number");
        continue;
      }
      ArmModel m{fam.value_or(Family::Bernoulli), means[a].get<double>(), a < scales.size() ? scales[a] : 1.0};
      if (fam) {
        auto msg = arm_model_problem(m);
        if (!msg.empty()) {
          const bool scale_issue = msg.find("scale") != std::string::npos;
          rd.errors.push_back((scale_issue ? pw + ".scales[" + std::to_string(a) + "]" : aw) + ": " + msg);
        }
      }
      ph.arms.push_back(m);
    }
    phases.push_back(std::move(ph));
  }
  if (rd.errors.size() != before || !fam) return std::nullopt;
  auto structural = EnvironmentSpec::validate(horizon, phases);
  for (auto& s : structural) rd.errors.push_back("environment: " + s);
  if (!structural.empty()) return std::nullopt;
  return EnvironmentSpec(horizon, std::move(phases));
}

inline PolicySpec read_policy(const json& pj, std::size_t i, JsonReader& rd) {
  const std::string pw = "policies[" + std::to_string(i) + "]";
  PolicySpec p;
  if (!pj.is_object()) {
    rd.errors.push_back(pw + ": must be an object");
    return p;
  }
  rd.unknown_keys(pj, pw, {"name", "label", "tau", "gamma", "schedule", "range", "sigma", "xi", "alpha", "exp3_gamma", "arm"});
  p.name = rd.get<std::string>(pj, pw, "name", true).value_or("");
  if (!p.name.empty() && !is_known_policy(p.name)) rd.errors.push_back(pw + ".name: unknown policy '" + p.name + "'");
  p.label = rd.get<std::string>(pj, pw, "label", false).value_or("");
  p.window = rd.get<std::size_t>(pj, pw, "tau", false);
  p.discount = rd.get<double>(pj, pw, "gamma", false);
  p.range = rd.get<double>(pj, pw, "range", false);
  p.sigma = rd.get<double>(pj, pw, "sigma", false);
  p.xi = rd.get<double>(pj, pw, "xi", false);
  p.alpha = rd.get<double>(pj, pw, "alpha", false);
  p.exp3_gamma = rd.get<double>(pj, pw, "exp3_gamma", false);
  p.arm = rd.get<std::size_t>(pj, pw, "arm", false);
  if (pj.contains("schedule")) {
    const json& sj = pj.at("schedule");
    const std::string sw = pw + ".schedule";
    if (!sj.is_object()) {
      rd.errors.push_back(sw + ": must be an object");
    } else {
      rd.unknown_keys(sj, sw, {"form", "floor", "coefficient"});
      MemorySchedule s;
      if (auto f = rd.get<std::string>(sj, sw, "form", true)) {
        if (auto form = parse_schedule_form(*f)) s.form = *form;
        else rd.errors.push_back(sw + ".form: must be 'additive' or 'max'");
      }
      s.floor = rd.get<std::size_t>(sj, sw, "floor", true).value_or(0);
      s.coefficient = rd.get<double>(sj, sw, "coefficient", false).value_or(1.0);
      if (!(s.coefficient >= 0.0)) rd.errors.push_back(sw + ".coefficient: must be >= 0");
      p.schedule = s;
    }
  }
  return p;
}

}  // namespace detail

/// Parses and validates a JSON experiment config, filling default tunings.
inline ParsedConfig parse_config_text(const std::string& text) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigValidationError({std::string("syntax error: ") + e.what()});
  }
  detail::JsonReader rd;
  if (!root.is_object()) throw ConfigValidationError({"top level: must be a JSON object"});
  rd.unknown_keys(root, "", {"name", "horizon", "replications", "seed", "record_trajectories", "invariant_checks",
                             "checkpoints", "environment", "policies"});
  ParsedConfig out;
  ExperimentConfig& cfg = out.config;
  cfg.name = rd.get<std::string>(root, "", "name", false).value_or("experiment");
  const auto horizon = rd.get<std::size_t>(root, "", "horizon", true);
  if (horizon && *horizon < 1) rd.errors.emplace_back("horizon: must be >= 1");
  cfg.replications = rd.get<std::size_t>(root, "", "replications", false).value_or(1);
  if (cfg.replications < 1) rd.errors.emplace_back("replications: must be >= 1");
  cfg.base_seed = rd.get<std::uint64_t>(root, "", "seed", false).value_or(0);
  cfg.record_trajectories = rd.get<bool>(root, "", "record_trajectories", false).value_or(false);
  cfg.invariant_checks = rd.get<bool>(root, "", "invariant_checks", false).value_or(false);

  if (root.contains("checkpoints")) {
    const json& c = root.at("checkpoints");
    if (c.is_string() && c.get<std::string>() == "full") {
      cfg.checkpoints.mode = CheckpointSpec::Mode::Full;
    } else if (c.is_number_unsigned()) {
      cfg.checkpoints.mode = CheckpointSpec::Mode::LogSpaced;
      cfg.checkpoints.count = c.get<std::size_t>();
    } else if (c.is_array()) {
      cfg.checkpoints.mode = CheckpointSpec::Mode::Explicit;
      for (const auto& v : c) {
        if (!v.is_number_unsigned() || v.get<std::size_t>() < 1 || (horizon && v.get<std::size_t>() > *horizon)) {
          rd.errors.emplace_back("checkpoints: entries must be integers in [1, horizon]");
          break;
        }
        cfg.checkpoints.times.push_back(v.get<std::size_t>());
      }
    } else {
      rd.errors.emplace_back("checkpoints: must be a count, \"full\" or an array of time steps");
    }
  }

  std::optional<EnvironmentSpec> env;
  if (!root.contains("environment")) rd.errors.emplace_back("environment: required key is missing");
  else if (horizon && *horizon >= 1) env = detail::read_environment(root.at("environment"), *horizon, rd);

  if (!root.contains("policies") || !root.at("policies").is_array() || root.at("policies").empty()) {
    rd.errors.emplace_back("policies: must be a non-empty array");
  } else {
    for (std::size_t i = 0; i < root.at("policies").size(); ++i)
      cfg.policies.push_back(detail::read_policy(root.at("policies")[i], i, rd));
  }

  if (env) {
    cfg.environment = *env;
    std::set<std::string> labels;
    for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
      auto& p = cfg.policies[i];
      if (p.name.empty() || !is_known_policy(p.name)) continue;
      p = resolve_policy(p, cfg.environment, &out.warnings);
      if (p.display_name().find_first_of(",\n\r\"") != std::string::npos)
        rd.errors.push_back("policies[" + std::to_string(i) + "].label: must not contain commas, quotes or newlines");
      if (!labels.insert(p.display_name()).second)
        rd.errors.push_back("policies[" + std::to_string(i) + "].label: duplicate label '" + p.display_name() + "'");
      for (const auto& msg : policy_problems(p, cfg.environment))
        rd.errors.push_back("policies[" + std::to_string(i) + "]: " + msg);
    }
  }
  if (!rd.errors.empty()) throw ConfigValidationError(rd.errors);
  return out;
}

inline ParsedConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigValidationError({path + ": cannot open config file"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline nlohmann::json environment_to_json(const EnvironmentSpec& env) {
  using detail::json;
  json phases = json::array();
  for (const auto& p : env.phases()) {
    json pj;
    pj["start"] = p.start;
    json means = json::array(), scales = json::array();
    for (const auto& a : p.arms) {
      means.push_back(a.mean);
      scales.push_back(a.scale);
    }
    pj["means"] = means;
    if (env.family() == Family::Gaussian) pj["scales"] = scales;
    phases.push_back(pj);
  }
  return json{{"family", std::string(family_name(env.family()))}, {"phases", phases}};
}

inline nlohmann::json policy_to_json(const PolicySpec& p) {
  nlohmann::json j;
  j["name"] = p.name;
  if (!p.label.empty()) j["label"] = p.label;
  if (p.window) j["tau"] = *p.window;
  if (p.discount) j["gamma"] = *p.discount;
  if (p.schedule)
    j["schedule"] = {{"form", std::string(schedule_form_name(p.schedule->form))},
                     {"floor", p.schedule->floor},
                     {"coefficient", p.schedule->coefficient}};
  if (p.range) j["range"] = *p.range;
  if (p.sigma) j["sigma"] = *p.sigma;
  if (p.xi) j["xi"] = *p.xi;
  if (p.alpha) j["alpha"] = *p.alpha;
  if (p.exp3_gamma) j["exp3_gamma"] = *p.exp3_gamma;
  if (p.arm) j["arm"] = *p.arm;
  return j;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  using detail::json;
  json j;
  j["name"] = cfg.name;
  j["horizon"] = cfg.horizon();
  j["replications"] = cfg.replications;
  j["seed"] = cfg.base_seed;
  j["record_trajectories"] = cfg.record_trajectories;
  j["invariant_checks"] = cfg.invariant_checks;
  switch (cfg.checkpoints.mode) {
    case CheckpointSpec::Mode::Full: j["checkpoints"] = "full"; break;
    case CheckpointSpec::Mode::LogSpaced: j["checkpoints"] = cfg.checkpoints.count; break;
    case CheckpointSpec::Mode::Explicit: j["checkpoints"] = cfg.checkpoints.times; break;
  }
  j["environment"] = environment_to_json(cfg.environment);
  json pols = json::array();
  for (const auto& p : cfg.policies) pols.push_back(policy_to_json(p));
  j["policies"] = pols;
  return j;
}

inline std::string serialize_config(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Presets

struct PresetOverrides {
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> replications;
  std::optional<std::uint64_t> seed;
};

struct Preset {
  std::string name;
  std::string description;
  std::function<ExperimentConfig(const PresetOverrides&)> build;
};

namespace detail {

inline TimeStep phase_start(std::size_t horizon, double fraction) {
  return static_cast<TimeStep>(std::llround(fraction * static_cast<double>(horizon))) + 1;
}

inline std::vector<Phase> make_phases(std::size_t horizon, Family fam, const std::vector<double>& fractions,
                                      const std::vector<std::vector<double>>& means,
                                      const std::vector<double>& sigmas) {
  std::vector<Phase> phases;
  for (std::size_t i = 0; i < means.size(); ++i) {
    Phase p;
    p.start = i == 0 ? 1 : phase_start(horizon, fractions[i]);
    for (double m : means[i]) p.arms.push_back(ArmModel{fam, m, sigmas.empty() ? 1.0 : sigmas[i]});
    phases.push_back(std::move(p));
  }
  return phases;
}

inline ExperimentConfig finish_preset(std::string name, EnvironmentSpec env, std::vector<std::string> policy_names,
                                      const PresetOverrides& o, std::vector<PolicySpec> extra = {}) {
  ExperimentConfig cfg;
  cfg.name = std::move(name);
  cfg.environment = std::move(env);
  cfg.replications = o.replications.value_or(2000);
  cfg.base_seed = o.seed.value_or(0);
  for (auto& n : policy_names) cfg.policies.push_back(resolve_policy(policy_named(n), cfg.environment));
  for (auto& p : extra) cfg.policies.push_back(resolve_policy(p, cfg.environment));
  return cfg;
}

// Breakpoints at 1/4, 1/2 and 3/4 of the horizon. The means are illustrative.
inline const std::vector<double> kQuarterBreaks{0.0, 0.25, 0.5, 0.75};
inline const std::vector<std::vector<double>> kBernoulliMeans{
    {0.6, 0.3, 0.1}, {0.6, 0.8, 0.1}, {0.3, 0.5, 0.7}, {0.3, 0.2, 0.7}};
inline const std::vector<std::vector<double>> kGaussianMeans{
    {0.8, 0.5, 0.2}, {0.3, 0.8, 0.5}, {0.6, 0.2, 0.9}, {0.2, 0.7, 0.4}};

}  // namespace detail

inline const std::vector<Preset>& presets() {
  using namespace detail;
  static const std::vector<Preset> all{
      {"fig3-bernoulli-stationary",
       "Stationary 2-arm Bernoulli (0.05, 0.15): LB-SDA, LB-SDA-LM (m_r = (ln r)^2 + 50), kl-UCB, TS",
       [](const PresetOverrides& o) {
         const std::size_t T = o.horizon.value_or(10000);
         auto env = EnvironmentSpec::stationary(T, {ArmModel{Family::Bernoulli, 0.05}, ArmModel{Family::Bernoulli, 0.15}});
         PolicySpec lm = policy_named("lbsda-lm");
         lm.schedule = MemorySchedule{MemorySchedule::Form::Additive, 50, 1.0};
         auto cfg = finish_preset("fig3-bernoulli-stationary", std::move(env), {"lbsda"}, o, {lm});
         for (auto n : {"klucb", "ts"}) cfg.policies.push_back(resolve_policy(policy_named(n), cfg.environment));
         return cfg;
       }},
      {"fig4-bernoulli-nonstationary",
       "3-arm Bernoulli, 3 breakpoints (illustrative means): SW-LB-SDA vs forgetting baselines and EXP3S",
       [](const PresetOverrides& o) {
         const std::size_t T = o.horizon.value_or(10000);
         EnvironmentSpec env(T, make_phases(T, Family::Bernoulli, kQuarterBreaks, kBernoulliMeans, {}));
         return finish_preset("fig4-bernoulli-nonstationary", std::move(env),
                              {"sw-lbsda", "sw-klucb", "d-klucb", "sw-ts", "dts", "exp3s"}, o);
       }},
      {"gauss-sigma-fixed",
       "3-arm Gaussian, sigma = 0.5, 3 breakpoints (illustrative means)",
       [](const PresetOverrides& o) {
         const std::size_t T = o.horizon.value_or(10000);
         EnvironmentSpec env(T, make_phases(T, Family::Gaussian, kQuarterBreaks, kGaussianMeans, {0.5, 0.5, 0.5, 0.5}));
         return finish_preset("gauss-sigma-fixed", std::move(env),
                              {"sw-lbsda", "sw-ucb", "d-ucb", "sw-klucb", "d-klucb", "sw-ts", "dts", "ucb1"}, o);
       }},
      {"gauss-sigma-varying",
       "3-arm Gaussian with per-phase sigma (0.5, 0.25, 1, 0.25); baselines are given sigma = 1",
       [](const PresetOverrides& o) {
         const std::size_t T = o.horizon.value_or(10000);
         EnvironmentSpec env(T, make_phases(T, Family::Gaussian, kQuarterBreaks, kGaussianMeans, {0.5, 0.25, 1.0, 0.25}));
         return finish_preset("gauss-sigma-varying", std::move(env),
                              {"sw-lbsda", "sw-ucb", "d-ucb", "sw-klucb", "d-klucb", "sw-ts", "dts", "ucb1"}, o);
       }},
  };
  return all;
}

inline const Preset* find_preset(std::string_view name) {
  for (const auto& p : presets())
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace lbsda
