#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lbsda/history_buffer.hpp"
#include "lbsda/memory_schedule.hpp"
#include "lbsda/policy.hpp"
#include "lbsda/rng.hpp"

namespace lbsda {

/// Mutable state shared by the subsampling duelling algorithms.
struct SdaRoundState {
  std::size_t round = 1;  // round currently being decided
  std::optional<ArmIndex> leader;
  std::vector<HistoryBuffer> histories;
  std::vector<double> total_sums;  // every reward ever observed, evicted or not

  // Sliding-window bookkeeping.
  std::vector<std::size_t> last_pulled;  // round of the last pull, 0 = never
  std::size_t leader_since = 0;          // first round the current leader ran duels
  std::vector<bool> diversity;           // D_k for the round being decided

  explicit SdaRoundState(std::size_t num_arms = 0)
      : histories(num_arms), total_sums(num_arms, 0.0), last_pulled(num_arms, 0),
        diversity(num_arms, false) {}

  std::size_t num_arms() const { return histories.size(); }
};

/// sqrt(ln x): the forced-exploration level at round r (or window tau).
inline double forced_exploration_level(std::size_t x) {
  return std::sqrt(std::log(static_cast<double>(std::max<std::size_t>(x, 1))));
}

/// Outcome of one duel. The challenger wins ties of the two block means
/// unless both arms have the same number of pulls.
inline bool challenger_wins(double challenger_mean, double leader_block_mean, bool equal_counts) {
  return equal_counts ? challenger_mean > leader_block_mean : challenger_mean >= leader_block_mean;
}

/// Arm with the most pulls; ties go to the larger reward sum, then uniformly
/// at random.
inline ArmIndex lbsda_leader(std::span<const std::size_t> counts, std::span<const double> sums, Rng& rng) {
  if (counts.empty() || counts.size() != sums.size())
    throw std::invalid_argument("lbsda_leader: counts and sums must be non-empty and equal-sized");
  std::vector<ArmIndex> best{0};
  for (ArmIndex k = 1; k < counts.size(); ++k) {
    const ArmIndex b = best.front();
    if (counts[k] > counts[b] || (counts[k] == counts[b] && sums[k] > sums[b])) {
      best.assign(1, k);
    } else if (counts[k] == counts[b] && sums[k] == sums[b]) {
      best.push_back(k);
    }
  }
  return best.size() == 1 ? best.front() : best[uniform_index(rng, best.size())];
}

namespace detail {

inline std::vector<ArmIndex> all_arms(std::size_t k) {
  std::vector<ArmIndex> a(k);
  for (ArmIndex i = 0; i < k; ++i) a[i] = i;
  return a;
}

}  // namespace detail

/// Pull set of LB-SDA for state.round (full histories).
inline std::vector<ArmIndex> lbsda_select(const SdaRoundState& s) {
  const std::size_t k_arms = s.num_arms();
  if (s.round <= 1 || !s.leader) return detail::all_arms(k_arms);
  const ArmIndex lead = *s.leader;
  const auto& lh = s.histories[lead];
  const double level = forced_exploration_level(s.round);

  std::vector<ArmIndex> chosen;
  for (ArmIndex k = 0; k < k_arms; ++k) {
    if (k == lead) continue;
    const auto& h = s.histories[k];
    const std::size_t n = h.total_pulls();
    if (static_cast<double>(n) <= level) {
      chosen.push_back(k);
      continue;
    }
    const std::size_t block = std::min(n, lh.size());
    if (challenger_wins(h.mean(), lh.tail_mean(block), n == lh.total_pulls())) chosen.push_back(k);
  }
  if (chosen.empty()) chosen.push_back(lead);
  return chosen;
}

/// Pull set of LB-SDA with limited memory: the challenger uses its stored
/// history, the leader its last min(stored_k, stored_leader) stored rewards.
inline std::vector<ArmIndex> lbsdalm_select(const SdaRoundState& s) {
  const std::size_t k_arms = s.num_arms();
  if (s.round <= 1 || !s.leader) return detail::all_arms(k_arms);
  const ArmIndex lead = *s.leader;
  const auto& lh = s.histories[lead];
  const double level = forced_exploration_level(s.round);

  std::vector<ArmIndex> chosen;
  for (ArmIndex k = 0; k < k_arms; ++k) {
    if (k == lead) continue;
    const auto& h = s.histories[k];
    if (static_cast<double>(h.total_pulls()) <= level) {
      chosen.push_back(k);
      continue;
    }
    const std::size_t block = std::min(h.size(), lh.size());
    if (challenger_wins(h.mean(), lh.tail_mean(block), h.total_pulls() == lh.total_pulls()))
      chosen.push_back(k);
  }
  if (chosen.empty()) chosen.push_back(lead);
  return chosen;
}

/// Pull set of SW-LB-SDA. Histories hold only in-window rewards.
inline std::vector<ArmIndex> swlbsda_select(const SdaRoundState& s, std::size_t window) {
  const std::size_t k_arms = s.num_arms();
  if (s.round <= 1 || !s.leader) return detail::all_arms(k_arms);
  const ArmIndex lead = *s.leader;
  const auto& lh = s.histories[lead];
  const double level = forced_exploration_level(window);

  std::vector<ArmIndex> chosen;
  for (ArmIndex k = 0; k < k_arms; ++k) {
    if (k == lead) continue;
    const auto& h = s.histories[k];
    const bool flagged = k < s.diversity.size() && s.diversity[k];
    if (static_cast<double>(h.size()) <= level || flagged) {
      chosen.push_back(k);
      continue;
    }
    const std::size_t block = std::min(h.size(), lh.size());
    if (block == 0 || h.mean() >= lh.tail_mean(block)) chosen.push_back(k);
  }
  if (chosen.empty()) chosen.push_back(lead);
  return chosen;
}

/// Sliding-window leader for the next round, given windowed counts and sums
/// after `completed_rounds` rounds and window expiry.
///
/// When the incumbent keeps at least min(r,tau)/(2K) windowed samples, only
/// arms pulled this round holding at least min(r,tau)/K windowed samples may
/// replace it; otherwise the argmax is unrestricted. Ties: larger windowed
/// sum, then the incumbent, then uniform.
inline ArmIndex sw_leader_update(std::span<const std::size_t> windowed_counts,
                                 std::span<const double> windowed_sums,
                                 std::optional<ArmIndex> incumbent,
                                 std::span<const ArmIndex> pulled_this_round,
                                 std::size_t completed_rounds, std::size_t window, Rng& rng) {
  const std::size_t k_arms = windowed_counts.size();
  const double span_rounds = static_cast<double>(std::min(completed_rounds, window));
  const double keep_threshold = span_rounds / (2.0 * static_cast<double>(k_arms));
  const double takeover_threshold = span_rounds / static_cast<double>(k_arms);

  std::vector<ArmIndex> candidates;
  if (!incumbent || static_cast<double>(windowed_counts[*incumbent]) < keep_threshold) {
    candidates = detail::all_arms(k_arms);
  } else {
    candidates.push_back(*incumbent);
    for (ArmIndex k : pulled_this_round)
      if (k != *incumbent && static_cast<double>(windowed_counts[k]) >= takeover_threshold)
        candidates.push_back(k);
  }

  std::vector<ArmIndex> best;
  for (ArmIndex k : candidates) {
    if (best.empty()) {
      best.push_back(k);
      continue;
    }
    const ArmIndex b = best.front();
    if (windowed_counts[k] > windowed_counts[b] ||
        (windowed_counts[k] == windowed_counts[b] && windowed_sums[k] > windowed_sums[b])) {
      best.assign(1, k);
    } else if (windowed_counts[k] == windowed_counts[b] && windowed_sums[k] == windowed_sums[b]) {
      best.push_back(k);
    }
  }
  if (best.size() == 1) return best.front();
  if (incumbent && std::find(best.begin(), best.end(), *incumbent) != best.end()) return *incumbent;
  return best[uniform_index(rng, best.size())];
}

/// Number of rounds W = ceil((K-1) (ln tau)^2) the diversity conditions must hold.
inline std::size_t diversity_window(std::size_t num_arms, std::size_t window) {
  const double lt = std::log(static_cast<double>(window));
  return static_cast<std::size_t>(std::ceil(static_cast<double>(num_arms - 1) * lt * lt));
}

/// Diversity flags for `decision_round` d: D_k = 1 iff over rounds
/// [d-W, d-1] the same arm `leader` (!= k) led, neither it nor k was pulled,
/// and k holds at most (ln tau)^2 windowed samples.
inline std::vector<bool> diversity_flag_update(std::size_t decision_round, ArmIndex leader,
                                               std::size_t leader_since,
                                               std::span<const std::size_t> last_pulled,
                                               std::span<const std::size_t> windowed_counts,
                                               std::size_t window) {
  const std::size_t k_arms = windowed_counts.size();
  std::vector<bool> flags(k_arms, false);
  const std::size_t w = diversity_window(k_arms, window);
  if (decision_round < w + 2) return flags;
  const std::size_t first = decision_round - w;
  if (leader_since > first) return flags;
  if (last_pulled[leader] >= first) return flags;
  const double lt = std::log(static_cast<double>(window));
  const double cap = lt * lt;
  for (ArmIndex k = 0; k < k_arms; ++k) {
    if (k == leader) continue;
    flags[k] = last_pulled[k] < first && static_cast<double>(windowed_counts[k]) <= cap;
  }
  return flags;
}

/// LB-SDA, optionally with a per-arm memory schedule (LB-SDA-LM).
class LbSdaPolicy : public Policy {
 public:
  explicit LbSdaPolicy(std::size_t num_arms, std::optional<MemorySchedule> schedule = std::nullopt)
      : state_(num_arms), schedule_(schedule) {
    if (num_arms < 2) throw std::invalid_argument("LB-SDA requires at least two arms");
  }

  std::vector<ArmIndex> select(Rng&) override {
    pulled_.clear();
    if (schedule_) capacity_ = schedule_->capacity(state_.round);
    return schedule_ ? lbsdalm_select(state_) : lbsda_select(state_);
  }

  void observe(ArmIndex arm, double reward) override {
    auto& h = state_.histories[arm];
    if (schedule_ && h.size() >= capacity_) h.evict_oldest();
    h.push(reward);
    state_.total_sums[arm] += reward;
    pulled_.push_back(arm);
  }

  void end_round(Rng& rng) override {
    std::vector<std::size_t> counts(state_.num_arms());
    for (ArmIndex k = 0; k < counts.size(); ++k) counts[k] = state_.histories[k].total_pulls();
    const auto previous = state_.leader;
    state_.leader = lbsda_leader(counts, state_.total_sums, rng);
    if (log_) {
      RoundLog entry;
      entry.round = state_.round;
      entry.leader_used = previous;
      entry.pulled = pulled_;
      entry.counts = counts;
      entry.stored.resize(counts.size());
      for (ArmIndex k = 0; k < counts.size(); ++k) entry.stored[k] = state_.histories[k].size();
      entry.capacity = schedule_ ? capacity_ : 0;
      entry.next_leader = state_.leader;
      traj_.rounds.push_back(std::move(entry));
    }
    ++state_.round;
  }

  std::vector<std::size_t> storage_high_water() const override {
    std::vector<std::size_t> out;
    for (const auto& h : state_.histories) out.push_back(h.high_water());
    return out;
  }

  bool enable_trajectory() override {
    log_ = true;
    traj_.kind = schedule_ ? TrajectoryKind::LbSdaLm : TrajectoryKind::LbSda;
    traj_.num_arms = state_.num_arms();
    return true;
  }
  const Trajectory* trajectory() const override { return log_ ? &traj_ : nullptr; }

  const SdaRoundState& state() const { return state_; }

 private:
  SdaRoundState state_;
  std::optional<MemorySchedule> schedule_;
  std::size_t capacity_ = 0;
  std::vector<ArmIndex> pulled_;
  bool log_ = false;
  Trajectory traj_;
};

/// SW-LB-SDA: duels restricted to the last `window` rounds, modified leader
/// rule and diversity flags.
class SwLbSdaPolicy : public Policy {
 public:
  SwLbSdaPolicy(std::size_t num_arms, std::size_t window) : state_(num_arms), window_(window) {
    if (num_arms < 2) throw std::invalid_argument("SW-LB-SDA requires at least two arms");
    if (window < num_arms) throw std::invalid_argument("SW-LB-SDA requires window >= num_arms");
  }

  std::vector<ArmIndex> select(Rng&) override {
    pulled_.clear();
    return swlbsda_select(state_, window_);
  }

  void observe(ArmIndex arm, double reward) override {
    state_.histories[arm].push(reward);
    state_.total_sums[arm] += reward;
    pulled_.push_back(arm);
  }

  void end_round(Rng& rng) override {
    const std::size_t r = state_.round;
    const std::size_t k_arms = state_.num_arms();
    rounds_.push_back(pulled_);
    for (ArmIndex k : pulled_) state_.last_pulled[k] = r;
    if (rounds_.size() > window_) {
      for (ArmIndex k : rounds_.front()) state_.histories[k].evict_oldest();
      rounds_.pop_front();
    }

    std::vector<std::size_t> counts(k_arms);
    std::vector<double> sums(k_arms);
    for (ArmIndex k = 0; k < k_arms; ++k) {
      counts[k] = state_.histories[k].size();
      sums[k] = state_.histories[k].sum();
    }
    const auto previous = state_.leader;
    const ArmIndex next = sw_leader_update(counts, sums, previous, pulled_, r, window_, rng);
    if (!previous || *previous != next) state_.leader_since = r + 1;
    state_.leader = next;
    state_.diversity = diversity_flag_update(r + 1, next, state_.leader_since, state_.last_pulled, counts, window_);

    if (log_) {
      RoundLog entry;
      entry.round = r;
      entry.leader_used = previous;
      entry.pulled = pulled_;
      entry.counts.resize(k_arms);
      for (ArmIndex k = 0; k < k_arms; ++k) entry.counts[k] = state_.histories[k].total_pulls();
      entry.stored = counts;
      entry.next_leader = next;
      traj_.rounds.push_back(std::move(entry));
    }
    ++state_.round;
  }

  std::vector<std::size_t> storage_high_water() const override {
    std::vector<std::size_t> out;
    for (const auto& h : state_.histories) out.push_back(h.high_water());
    return out;
  }

  bool enable_trajectory() override {
    log_ = true;
    traj_.kind = TrajectoryKind::SwLbSda;
    traj_.num_arms = state_.num_arms();
    traj_.window = window_;
    return true;
  }
  const Trajectory* trajectory() const override { return log_ ? &traj_ : nullptr; }

  const SdaRoundState& state() const { return state_; }
  std::size_t window() const { return window_; }

 private:
  SdaRoundState state_;
  std::size_t window_;
  std::deque<std::vector<ArmIndex>> rounds_;  // pulled sets of the in-window rounds
  std::vector<ArmIndex> pulled_;
  bool log_ = false;
  Trajectory traj_;
};

}  // namespace lbsda
