#pragma once

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lbsda/lbsda.hpp"

namespace lbsda::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3, kInvariant = 4 };

inline constexpr const char* kOutDirEnv = "LBSDA_OUT_DIR";

inline std::string default_out_dir() {
  const char* v = std::getenv(kOutDirEnv);
  return v && *v ? std::string(v) : std::string("results");
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentSource {
  std::string config_path;
  std::string preset;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> replications;
  std::optional<std::uint64_t> seed;

  void add_options(CLI::App* app) {
    app->add_option("--config", config_path, "JSON experiment config");
    app->add_option("--preset", preset, "Named preset (see `presets`)");
    app->add_option("--horizon", horizon, "Horizon T (presets only)")->check(CLI::PositiveNumber);
    app->add_option("--replications", replications, "Number of replications")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Base seed; replication i uses seed + i");
  }

  ParsedConfig load() const {
    if (config_path.empty() == preset.empty()) throw UsageError("exactly one of --config or --preset is required");
    ParsedConfig out;
    if (!preset.empty()) {
      const Preset* p = find_preset(preset);
      if (!p) throw UsageError("unknown preset '" + preset + "' (run `lbsda presets`)");
      out.config = p->build(PresetOverrides{horizon, replications, seed});
      if (out.config.environment.num_breakpoints() == 0)
        for (const auto& spec : out.config.policies) resolve_policy(spec, out.config.environment, &out.warnings);
      return out;
    }
    if (horizon) throw UsageError("--horizon only applies to presets; edit the config instead");
    out = parse_config(config_path);
    if (replications) out.config.replications = *replications;
    if (seed) out.config.base_seed = *seed;
    return out;
  }
};

inline void print_summary(const AggregateResult& res, std::ostream& os) {
  std::size_t width = 6;
  for (const auto& p : res.policies) width = std::max(width, p.label.size());
  os << std::left << std::setw(static_cast<int>(width)) << "policy" << std::right << std::setw(14) << "mean_regret"
     << std::setw(12) << "q25" << std::setw(12) << "q75" << std::setw(12) << "violations" << std::setw(10) << "time_s"
     << '\n';
  os << std::fixed;
  for (const auto& p : res.policies) {
    os << std::left << std::setw(static_cast<int>(width)) << p.label << std::right << std::setprecision(2)
       << std::setw(14) << p.final_regret.mean << std::setw(12) << p.final_regret.q25 << std::setw(12)
       << p.final_regret.q75 << std::setw(12) << p.invariant_violations << std::setw(10) << std::setprecision(2)
       << p.wall_time << '\n';
  }
  os << std::defaultfloat;
}

inline int cmd_run(const ExperimentSource& src, const std::string& out_dir, const std::string& stem,
                   std::size_t workers, bool full_series, std::optional<std::size_t> checkpoints, bool invariant_checks,
                   bool quiet, std::ostream& out, std::ostream& err) {
  ParsedConfig parsed = src.load();
  ExperimentConfig& cfg = parsed.config;
  if (full_series) cfg.checkpoints.mode = CheckpointSpec::Mode::Full;
  if (checkpoints) {
    cfg.checkpoints.mode = CheckpointSpec::Mode::LogSpaced;
    cfg.checkpoints.count = *checkpoints;
  }
  if (invariant_checks) cfg.invariant_checks = true;
  for (const auto& w : parsed.warnings) err << "warning: " << w << '\n';
  const auto res = run_experiment(cfg, workers);
  const auto paths = persist_results(cfg, res, out_dir, stem.empty() ? cfg.name : stem, parsed.warnings);
  if (!quiet) {
    print_summary(res, out);
    out << "wrote " << paths.csv.string() << " and " << paths.manifest.string() << '\n';
  }
  if (res.invariant_violations() > 0) {
    for (const auto& p : res.policies)
      if (p.invariant_violations > 0)
        err << "invariant violation in '" << p.label << "' (seed " << p.violating_seeds.front()
            << "): " << p.first_violation << '\n';
    return kInvariant;
  }
  return kOk;
}

struct VerifyOptions {
  std::string check = "all";
  std::optional<std::size_t> runs;
  std::optional<std::size_t> horizon;
  std::uint64_t seed = 1;
  std::string schedule = "additive:50";
  std::size_t queries = 100;
  std::size_t samples = 1000000;
};

inline void report_campaign(const CampaignReport& r, std::ostream& out) {
  out << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.runs << " runs, " << r.checks << " checks, "
      << r.violations << " violations";
  if (!r.passed() && !r.failing_seeds.empty())
    out << " (first failing seed " << r.failing_seeds.front() << ": " << r.first_message << ")";
  out << std::fixed << std::setprecision(1) << " [" << r.wall_time << " s]" << std::defaultfloat << '\n';
}

inline int cmd_verify(const VerifyOptions& o, std::ostream& out) {
  static const std::vector<std::string> checks{"balance", "lemma-wt", "sw-leader", "storage"};
  if (o.check != "all" && std::find(checks.begin(), checks.end(), o.check) == checks.end())
    throw UsageError("unknown check '" + o.check + "' (balance, lemma-wt, sw-leader, storage, all)");
  const auto schedule = parse_schedule(o.schedule);
  if (!schedule) throw ConfigValidationError({"--schedule: expected additive:FLOOR[:C] or max:FLOOR[:C]"});
  bool ok = true;
  auto want = [&](const std::string& c) { return o.check == "all" || o.check == c; };
  if (want("lemma-wt")) {
    auto r = lemma_wt_campaign(o.runs.value_or(50), o.horizon.value_or(5000), o.seed);
    report_campaign(r, out);
    ok = ok && r.passed();
  }
  if (want("sw-leader")) {
    auto r = sw_leader_campaign(o.runs.value_or(50), o.horizon.value_or(10000), o.seed);
    report_campaign(r, out);
    ok = ok && r.passed();
  }
  if (want("storage")) {
    auto r = storage_campaign(o.runs.value_or(20), o.horizon.value_or(5000), o.seed, *schedule);
    report_campaign(r, out);
    ok = ok && r.passed();
  }
  if (want("balance")) {
    auto r = balance_campaign(o.queries, o.samples, o.seed);
    const bool pass = r.agreeing * 100 >= 99 * r.queries && r.bound_failures == 0;
    out << (pass ? "PASS " : "FAIL ") << "balance: " << r.agreeing << "/" << r.queries
        << " Monte Carlo estimates within 3 std errors (worst z = " << std::setprecision(3) << r.worst_z << "), "
        << r.bound_failures << " upper-bound failures" << std::fixed << std::setprecision(1) << " [" << r.wall_time
        << " s]" << std::defaultfloat << '\n';
    ok = ok && pass;
  }
  return ok ? kOk : kInvariant;
}

inline int cmd_presets(const std::string& show, const PresetOverrides& o, std::ostream& out) {
  if (!show.empty()) {
    const Preset* p = find_preset(show);
    if (!p) throw UsageError("unknown preset '" + show + "'");
    out << serialize_config(p->build(o));
    return kOk;
  }
  for (const auto& p : presets()) out << p.name << "\n    " << p.description << '\n';
  return kOk;
}

inline int cmd_export_traj(const ExperimentSource& src, const std::string& policy, std::optional<std::uint64_t> seed,
                           const std::string& out_path, std::ostream& out) {
  ParsedConfig parsed = src.load();
  const auto& cfg = parsed.config;
  const PolicySpec* spec = nullptr;
  for (const auto& p : cfg.policies)
    if (p.display_name() == policy || (policy.empty() && is_round_based(p.name))) {
      spec = &p;
      break;
    }
  if (!spec) throw UsageError(policy.empty() ? "config has no LB-SDA family policy" : "no policy labelled '" + policy + "'");
  if (!is_round_based(spec->name)) throw UsageError("trajectories are only recorded for lbsda, lbsda-lm and sw-lbsda");
  const auto rec = run_replication(cfg.environment, *spec, seed.value_or(cfg.base_seed), RunOptions{true, false});
  if (out_path.empty()) {
    write_trajectory_ndjson(*rec.trajectory, out);
    return kOk;
  }
  std::ofstream os(out_path);
  if (!os) throw IoError(out_path, "cannot open for writing");
  write_trajectory_ndjson(*rec.trajectory, os);
  if (!os) throw IoError(out_path, "write failed");
  return kOk;
}

/// Entry point shared by the executable and the tests.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Last-block subsampling dueling bandits: simulation and verification"};
  app.name("lbsda");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ExperimentSource run_src;
  std::string out_dir = default_out_dir(), stem;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  bool full_series = false, invariant_checks = false, quiet = false;
  std::optional<std::size_t> checkpoints;
  auto* run = app.add_subcommand("run", "Run an experiment and write CSV + manifest");
  run_src.add_options(run);
  run->add_option("--out-dir", out_dir, std::string("Output directory (default $") + kOutDirEnv + " or ./results)");
  run->add_option("--name", stem, "Output file stem (default: config name)");
  run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--full-series", full_series, "Record every time step instead of log-spaced checkpoints");
  run->add_option("--checkpoints", checkpoints, "Number of log-spaced checkpoints")->check(CLI::PositiveNumber);
  run->add_flag("--invariant-checks", invariant_checks, "Check round invariants on every replication");
  run->add_flag("--quiet", quiet, "Do not print the summary table");

  VerifyOptions vopt;
  auto* verify = app.add_subcommand("verify", "Run invariant and oracle checks");
  verify->add_option("check", vopt.check, "balance | lemma-wt | sw-leader | storage | all");
  verify->add_option("--runs", vopt.runs, "Seeded runs per invariant")->check(CLI::PositiveNumber);
  verify->add_option("--horizon", vopt.horizon, "Horizon per run")->check(CLI::PositiveNumber);
  verify->add_option("--seed", vopt.seed, "Base seed");
  verify->add_option("--schedule", vopt.schedule, "LB-SDA-LM schedule FORM:FLOOR[:C]");
  verify->add_option("--queries", vopt.queries, "Random balance queries")->check(CLI::PositiveNumber);
  verify->add_option("--samples", vopt.samples, "Monte Carlo samples per balance query")->check(CLI::Range(1000, 1 << 30));

  std::string show;
  PresetOverrides preset_o;
  auto* pre = app.add_subcommand("presets", "List presets, or print one as a config with --show");
  pre->add_option("--show", show, "Preset to expand");
  pre->add_option("--horizon", preset_o.horizon, "Horizon T")->check(CLI::PositiveNumber);
  pre->add_option("--replications", preset_o.replications, "Replications")->check(CLI::PositiveNumber);
  pre->add_option("--seed", preset_o.seed, "Base seed");

  ExperimentSource traj_src;
  std::string traj_policy, traj_out;
  std::optional<std::uint64_t> traj_seed;
  auto* traj = app.add_subcommand("export-traj", "Write one replication's round log as NDJSON");
  traj->add_option("--config", traj_src.config_path, "JSON experiment config");
  traj->add_option("--preset", traj_src.preset, "Named preset");
  traj->add_option("--horizon", traj_src.horizon, "Horizon T (presets only)")->check(CLI::PositiveNumber);
  traj->add_option("--policy", traj_policy, "Policy label (default: first LB-SDA family policy)");
  traj->add_option("--seed", traj_seed, "Replication seed (default: base seed)");
  traj->add_option("--out", traj_out, "Output path (default: stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_src, out_dir, stem, workers, full_series, checkpoints, invariant_checks, quiet, out, err);
    if (*verify) return cmd_verify(vopt, out);
    if (*pre) return cmd_presets(show, preset_o, out);
    if (*traj) return cmd_export_traj(traj_src, traj_policy, traj_seed, traj_out, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigValidationError& e) {
    err << e.what() << '\n';
    return kValidation;
  } catch (const ConfigError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace lbsda::cli
