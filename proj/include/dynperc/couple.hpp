#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dynperc/engine.hpp"
#include "dynperc/estimate.hpp"
#include "dynperc/model.hpp"
#include "dynperc/parallel.hpp"
#include "dynperc/rng.hpp"

namespace dynperc {

enum class PointColor { good, bad, very_bad };

/// Direction thresholds of the two-bias coupling between lambda (lower leg)
/// and lambda_hi > lambda (upper leg). lambda_hi may be +infinity, in which
/// case the upper leg only ever attempts +e1.
///
/// One uniform U per attempt falls into five consecutive regions:
///   1. [0, c1)   both legs move transversally (same direction)
///   2. [c1, c2)  lower leg transversal, upper leg +e1
///   3. [c2, c3)  both -e1
///   4. [c3, c4)  lower leg -e1, upper leg +e1
///   5. [c4, 1)   both +e1
/// Within regions 1 and 2 the transverse direction is picked by the relative
/// position of U inside the region, so it is uniform and, in region 1, shared.
class CouplingThresholds {
 public:
  CouplingThresholds(int d, double lambda, double lambda_hi);

  struct Decision {
    int region;  // 1..5
    Direction lo;
    Direction hi;
  };

  Decision operator()(double u) const noexcept;

  static PointColor color(int region) noexcept {
    return region == 5 ? PointColor::good : (region == 1 || region == 3) ? PointColor::bad : PointColor::very_bad;
  }

  double c1() const noexcept { return c1_; }
  double c2() const noexcept { return c2_; }
  double c3() const noexcept { return c3_; }
  double c4() const noexcept { return c4_; }

 private:
  int d_;
  double c1_, c2_, c3_, c4_;
};

struct CoupledBlock {
  double tau = 0.0;
  std::int64_t disp_lo = 0;  // e1 displacement of the lambda walk
  std::int64_t disp_hi = 0;  // e1 displacement of the lambda_hi walk
  std::optional<std::int64_t> first_very_bad_index;  // 0-based attempt index
  int first_very_bad_region = 0;                      // 2 or 4 when present
  std::int64_t u_a = 0;                               // attempts (shared clock)
  BlockStats lo;
  BlockStats hi;
};

/// One block of the coupled pair. Both legs share attempt times, the uniform
/// of each attempt, the environment uniforms of each examination and the
/// lifetime of each inserted copy, so their infected sets always have the
/// same size and they regenerate together. Until the first very-bad point the
/// legs are the same walk.
CoupledBlock run_coupled_block(const ModelParams& params, double lambda_hi, Rng& rng,
                               const EngineOptions& options = {});

std::vector<CoupledBlock> coupled_block_sequence(const ModelParams& params, double lambda_hi, std::uint64_t n_blocks,
                                                 std::uint64_t seed, StreamTag tag = StreamTag::coupled,
                                                 const EngineOptions& options = {}, const RunControl& control = {});

/// (v(lambda+eps) - v(lambda)) / eps from coupled blocks; eps in (0, 0.1].
Estimate estimate_derivative_coupled(const ModelParams& params, double eps, std::uint64_t n_blocks,
                                     std::uint64_t seed, const EngineOptions& options = {},
                                     const RunControl& control = {});

/// v(lambda) as the totally asymmetric speed plus the mean displacement gap
/// to a coupled walk that only attempts +e1 (lambda_hi = infinity).
Estimate estimate_speed_anchored(const ModelParams& params, std::uint64_t n_blocks, std::uint64_t seed,
                                 const EngineOptions& options = {}, const RunControl& control = {});

// ---------------------------------------------------------------------------
// One-dimensional monotone coupling

struct MonotonePair {
  double tau = 0.0;
  std::int64_t disp1 = 0;  // walk with bias lambda1
  std::int64_t disp2 = 0;  // walk with bias lambda2 > lambda1
};

/// Walks with biases lambda1 < lambda2 on one dynamical-percolation
/// environment of Z. While co-located they share one clock and a monotone
/// direction coupling; while apart they use independent rate-1 clocks. The
/// modified infected set receives one copy per examined edge when the walks
/// examine the same edge and one per walk otherwise, and its first return to
/// empty ends the block. Throws std::logic_error if disp1 > disp2.
MonotonePair run_monotone_pair_1d(double p, double mu, double lambda1, double lambda2, Rng& rng,
                                  const EngineOptions& options = {});

struct MonotoneSummary {
  std::uint64_t blocks = 0;
  std::uint64_t ordered = 0;         // disp1 <= disp2
  std::uint64_t strictly_ahead = 0;  // disp1 < disp2
  Estimate mean_gap;                 // mean(disp2 - disp1)
  double mean_tau = 0.0;
};

MonotoneSummary monotone_pairs_1d(double p, double mu, double lambda1, double lambda2, std::uint64_t n_blocks,
                                  std::uint64_t seed, const EngineOptions& options = {},
                                  const RunControl& control = {});

/// Lower bound on P(disp1 < disp2) from the co-location argument:
/// (a(lambda2) - a(lambda1)) (mu/(mu+1))^2 with a(l) = e^l / (e^l + e^-l).
double monotone_separation_bound(double mu, double lambda1, double lambda2);

}  // namespace dynperc
