#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dynperc/env.hpp"
#include "dynperc/model.hpp"
#include "dynperc/parallel.hpp"
#include "dynperc/rng.hpp"

namespace dynperc {

/// Thrown when a run exceeds its event guard. Never caught inside the library.
class CensoredError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EngineOptions {
  std::uint64_t max_events = 10'000'000;
};

/// Statistics of one regeneration block.
struct BlockStats {
  double tau = 0.0;
  Site displacement;
  std::int64_t right = 0;           // performed +e1 jumps (R)
  std::int64_t left = 0;            // performed -e1 jumps (L)
  std::int64_t right_attempts = 0;  // R_a
  std::int64_t left_attempts = 0;   // L_a
  std::int64_t jumps = 0;           // U
  std::int64_t attempts = 0;        // U_a

  std::int64_t x1() const noexcept { return right - left; }
  std::int64_t right_suppressed() const noexcept { return right_attempts - right; }
  std::int64_t left_suppressed() const noexcept { return left_attempts - left; }

  friend bool operator==(const BlockStats&, const BlockStats&) = default;
};

// Throws std::logic_error if the counters are inconsistent.
void check_block_invariants(const BlockStats& block);

/// Infected set of edge copies. Copies are keyed by environment slot; every
/// member carries its own Exp(mu) removal time, and the set pops them in
/// (time, insertion order) order.
class InfectedSet {
 public:
  struct Removal {
    double time;
    std::uint64_t seq;
    std::size_t slot;
    std::uint32_t copy;
  };

  // Adds the lowest-index copy of `slot` not present; returns its index (>= 1).
  std::uint32_t insert(std::size_t slot, double removal_time);
  const Removal& next() const { return heap_.front(); }
  Removal pop();

  bool contains(std::size_t slot, std::uint32_t copy) const;
  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }
  void clear();

 private:
  struct Copies {
    std::uint64_t low = 0;                // copies 1..64
    std::vector<std::uint32_t> overflow;  // copies >= 65, sorted
  };

  std::vector<Removal> heap_;
  std::vector<Copies> copies_;
  std::uint64_t seq_ = 0;
};

struct TrajectoryEvent {
  double time;
  Direction direction;
  bool performed;
};

struct Trajectory {
  double horizon = 0.0;
  std::vector<TrajectoryEvent> events;
  Site final_position;
};

// R(t), L(t), R_a(t), L_a(t), U(t), U_a(t) of a trajectory, in BlockStats form
// (tau holds the horizon).
BlockStats path_counts(const Trajectory& trajectory);

/// One regeneration block from a fresh environment, the walker at the origin
/// and an empty infected set. Returns when the infected set first empties.
BlockStats run_block(const ModelParams& params, Rng& rng, const EngineOptions& options = {});

/// Walk run to a fixed horizon without regeneration resets.
Trajectory run_trajectory(const ModelParams& params, double horizon, Rng& rng, const EngineOptions& options = {});

/// Counts of a fixed-horizon run without keeping the event log.
BlockStats run_horizon(const ModelParams& params, double horizon, Rng& rng, const EngineOptions& options = {});

/// n independent blocks; block i is simulated from stream (seed, blocks, i).
std::vector<BlockStats> block_sequence(const ModelParams& params, std::uint64_t n_blocks, std::uint64_t seed,
                                       const EngineOptions& options = {}, const RunControl& control = {});

/// n consecutive blocks of one long run: the environment is never reset and
/// blocks are cut at the regeneration times.
std::vector<BlockStats> run_blocks_continuous(const ModelParams& params, std::uint64_t n_blocks, Rng& rng,
                                              const EngineOptions& options = {});

}  // namespace dynperc
