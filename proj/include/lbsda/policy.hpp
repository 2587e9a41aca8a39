#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lbsda/envs.hpp"
#include "lbsda/rng.hpp"

namespace lbsda {

/// Which algorithm produced a trajectory; checkers refuse logs whose
/// preconditions they cannot rely on.
enum class TrajectoryKind { LbSda, LbSdaLm, SwLbSda };

/// State of one completed round r.
struct RoundLog {
  std::size_t round = 0;
  std::optional<ArmIndex> leader_used;  // leader that ran the duels of round r (none in round 1)
  std::vector<ArmIndex> pulled;         // A_r, ascending
  std::vector<std::size_t> counts;      // N_k(r) after the round
  std::vector<std::size_t> stored;      // stored history length (windowed count for SW)
  std::size_t capacity = 0;             // m_r for LM runs, 0 otherwise
  std::optional<ArmIndex> next_leader;  // leader for round r+1
};

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::LbSda;
  std::size_t num_arms = 0;
  std::size_t window = 0;  // tau, SW only
  std::vector<RoundLog> rounds;
};

/// Common interface for round-based and step-based policies.
///
/// The driver calls select() to obtain the arms of the next round (a single
/// arm for step-based policies), pulls them in ascending order calling
/// observe() after each pull, then calls end_round(). A round truncated by the
/// horizon never receives end_round().
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::vector<ArmIndex> select(Rng& rng) = 0;
  virtual void observe(ArmIndex arm, double reward) = 0;
  virtual void end_round(Rng& rng) { (void)rng; }

  /// Largest number of stored rewards per arm so far (0 for policies that
  /// keep only sufficient statistics).
  virtual std::vector<std::size_t> storage_high_water() const { return {}; }

  /// Enables per-round logging; only subsampling policies support it.
  virtual bool enable_trajectory() { return false; }
  virtual const Trajectory* trajectory() const { return nullptr; }

  /// Number of rewards clamped into the policy's admissible range.
  virtual std::size_t clamp_warnings() const { return 0; }
};

}  // namespace lbsda
