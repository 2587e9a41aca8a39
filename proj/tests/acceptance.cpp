// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <thread>

#include "lbsda/lbsda.hpp"

using namespace lbsda;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ExperimentConfig keep_only(ExperimentConfig cfg, std::initializer_list<const char*> labels) {
  std::vector<PolicySpec> kept;
  for (const auto& p : cfg.policies)
    for (const char* l : labels)
      if (p.display_name() == l) kept.push_back(p);
  cfg.policies = std::move(kept);
  return cfg;
}

double value_at(const PolicyAggregate& p, TimeStep t) {
  const auto it = std::find(p.times.begin(), p.times.end(), t);
  return it == p.times.end() ? std::nan("") : p.mean[static_cast<std::size_t>(it - p.times.begin())];
}

void lemma_wt() {
  const auto r = lemma_wt_campaign(50, 5000, 1, {2, 5});
  report(1, r.passed() && r.wall_time < 30.0,
         fmt("%zu runs, %zu rounds checked, %zu violations, %.1f s", r.runs, r.checks, r.violations, r.wall_time));
}

void sw_leader() {
  const auto r = sw_leader_campaign(50, 10000, 1);
  report(2, r.passed() && r.wall_time < 120.0,
         fmt("%zu runs, %zu rounds checked, %zu violations, %.1f s", r.runs, r.checks, r.violations, r.wall_time));
}

void stationary_bernoulli() {
  PresetOverrides o;
  o.replications = 500;
  o.seed = 1;
  auto cfg = keep_only(find_preset("fig3-bernoulli-stationary")->build(o), {"lbsda", "lbsda-lm"});
  cfg.checkpoints.mode = CheckpointSpec::Mode::Explicit;
  cfg.checkpoints.times = {5000, 10000};
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = run_experiment(cfg, workers());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto& lb = *res.find("lbsda");
  const double half = value_at(lb, 5000), full = value_at(lb, 10000);
  report(3, full <= 55.0 && full - half < 0.8 * half,
         fmt("LB-SDA mean regret %.2f at T=1e4 (limit 55), growth %.2f vs 0.8*%.2f, %zu reps, %.1f s", full,
             full - half, half, cfg.replications, secs));

  const auto& lm = *res.find("lbsda-lm");
  const std::size_t high = *std::max_element(lm.storage_high_water.begin(), lm.storage_high_water.end());
  const double rel = std::abs(lm.final_regret.mean - lb.final_regret.mean) / lb.final_regret.mean;
  report(4, high <= 135 && rel <= 0.25,
         fmt("LB-SDA-LM storage high-water %zu (limit 135), mean regret %.2f vs %.2f (%.1f%%, limit 25%%)", high,
             lm.final_regret.mean, lb.final_regret.mean, 100.0 * rel));
}

void gaussian_nonstationary() {
  PresetOverrides o;
  o.replications = 200;
  o.seed = 1;
  auto cfg = keep_only(find_preset("gauss-sigma-fixed")->build(o), {"sw-lbsda", "ucb1", "sw-klucb"});
  cfg.checkpoints.mode = CheckpointSpec::Mode::Explicit;
  cfg.checkpoints.times = {10000};
  const auto res = run_experiment(cfg, workers());
  const double sw = res.find("sw-lbsda")->final_regret.mean;
  const double ucb = res.find("ucb1")->final_regret.mean;
  const double swkl = res.find("sw-klucb")->final_regret.mean;
  report(5, sw < 0.5 * ucb && sw <= 1.2 * swkl,
         fmt("SW-LB-SDA %.1f, UCB1 %.1f (ratio %.3f < 0.5), SW-kl-UCB %.1f (ratio %.3f <= 1.2)", sw, ucb, sw / ucb,
             swkl, sw / swkl));
}

void balance() {
  const auto r = balance_campaign(100, 1000000, 1);
  report(6, r.agreeing * 100 >= 99 * r.queries && r.bound_failures == 0,
         fmt("%zu/%zu queries within 3 std errors (worst z %.3g), %zu upper-bound failures, %.1f s", r.agreeing,
             r.queries, r.worst_z, r.bound_failures, r.wall_time));
}

void baseline_math() {
  const ArmModel b{Family::Bernoulli, 0.5, 1.0};
  const double kl = klucb_index_level(0.0, 1.0, 1.0, b);
  const bool kl_ok = std::abs(kl - (1.0 - std::exp(-1.0))) <= 1e-6;

  double worst_identity = 0.0;
  for (double gamma : {0.9, 0.99, tuned_discount(10000, 3)}) {
    DiscountedStats s(3, gamma);
    Rng rng = make_rng(3);
    for (int n = 1; n <= 10000; ++n) {
      s.update(uniform_index(rng, 3), uniform01(rng));
      const double expected = (1.0 - std::pow(gamma, n)) / (1.0 - gamma);
      worst_identity = std::max(worst_identity, std::abs(s.total_count() - expected));
    }
  }

  const std::size_t k = 3;
  const auto tuning = tuned_exp3s(10000, k, 3);
  Exp3sPolicy p(k, tuning.alpha, tuning.gamma);
  Rng rng = make_rng(12);
  const double means[] = {0.2, 0.5, 0.8};
  double min_prob = 1.0;
  for (int t = 0; t < 10000; ++t) {
    for (double q : p.probabilities()) min_prob = std::min(min_prob, q);
    const ArmIndex a = p.select(rng).front();
    p.observe(a, uniform01(rng) < means[a] ? 1.0 : 0.0);
  }
  const double floor = tuning.gamma / static_cast<double>(k);
  report(7, kl_ok && worst_identity <= 1e-9 && min_prob >= floor,
         fmt("kl-UCB(0,1,1) = %.10f, discounted identity error %.2e, EXP3S min prob %.6f >= %.6f", kl, worst_identity,
             min_prob, floor));
}

void determinism() {
  PresetOverrides o;
  o.horizon = 4000;
  o.replications = 24;
  o.seed = 77;
  const auto cfg = find_preset("fig4-bernoulli-nonstationary")->build(o);
  std::ostringstream one, eight;
  write_csv(csv_rows(run_experiment(cfg, 1)), one);
  write_csv(csv_rows(run_experiment(cfg, 8)), eight);
  report(8, one.str() == eight.str() && !one.str().empty(),
         fmt("CSV with 1 worker and 8 workers: %zu vs %zu bytes, %s", one.str().size(), eight.str().size(),
             one.str() == eight.str() ? "identical" : "different"));
}

}  // namespace

int main() {
  lemma_wt();
  sw_leader();
  stationary_bernoulli();
  gaussian_nonstationary();
  balance();
  baseline_math();
  determinism();
  return failures == 0 ? 0 : 1;
}
