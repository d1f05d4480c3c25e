#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "dynperc/engine.hpp"
#include "dynperc/model.hpp"
#include "dynperc/parallel.hpp"
#include "dynperc/stats.hpp"

namespace dynperc {

inline constexpr int kDefaultResamples = 200;

/// mean(R - L) / mean(tau), delta-method error.
Estimate estimate_speed_direct(std::span<const BlockStats> blocks);

/// Var(R - L) / mean(tau) with a bootstrap error.
Estimate estimate_sigma2(std::span<const BlockStats> blocks, std::uint64_t seed = 0,
                         int resamples = kDefaultResamples);

/// Importance weight of an unbiased block for bias `lambda`:
/// e^{lambda (R_a - L_a)} (2d / Z_lambda)^{U_a}.
double importance_weight(const BlockStats& block, const ModelParams& target);

/// Speed at target.lambda() from blocks simulated at lambda = 0. Reports the
/// effective sample size of the weights and warns when it is below 100 or
/// when lambda exceeds 1.5.
Estimate estimate_speed_importance(std::span<const BlockStats> unbiased, const ModelParams& target);

/// Mean importance weight; equals 1 in expectation.
Estimate importance_normalization(std::span<const BlockStats> unbiased, const ModelParams& target);

/// v'(lambda) = (E[X (R_a - L_a)] - Z'/Z E[X U_a]) / E[tau] with a bootstrap
/// error. A zero-mean control variate in U_a is subtracted to cut the variance.
Estimate estimate_derivative_formula(std::span<const BlockStats> blocks, const ModelParams& params,
                                     std::uint64_t seed = 0, int resamples = kDefaultResamples);

/// Empirical law of (R_a, L_a, R, L, U_a) over unbiased blocks.
class BlockHistogram {
 public:
  using Key = std::array<std::int64_t, 5>;

  void add(const BlockStats& block);
  void merge(const BlockHistogram& other);

  const std::map<Key, std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t total() const noexcept { return total_; }
  bool empty() const noexcept { return total_ == 0; }

 private:
  std::map<Key, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

BlockHistogram make_histogram(std::span<const BlockStats> blocks);

struct CurvePoint {
  double lambda;
  Estimate speed;
  Estimate derivative;
};

/// v and v' at each lambda from one unbiased histogram, by reweighting every
/// histogram cell. `mean_tau` carries its own error, which is propagated.
std::vector<CurvePoint> speed_curve_from_unbiased(const BlockHistogram& hist, const Estimate& mean_tau,
                                                  int d, double p, double mu, std::span<const double> lambdas);

/// Mean duration of the blocks.
Estimate mean_tau(std::span<const BlockStats> blocks);

/// R(t), L(t), ... of n independent fixed-horizon runs; run i uses stream
/// (seed, trajectories, i). `tau` of each entry holds the horizon.
std::vector<BlockStats> horizon_counts(const ModelParams& params, double horizon, std::uint64_t n,
                                       std::uint64_t seed, const EngineOptions& options = {},
                                       const RunControl& control = {});

/// Sample mean of e^{-2 lambda (R(t) - L(t))}. The effective sample size of
/// the summands is reported; a warning is attached when it falls below n/100,
/// in which case the sample mean is dominated by a few paths and its error
/// bar is not trustworthy.
Estimate check_martingale_identity(const ModelParams& params, double horizon, std::uint64_t n, std::uint64_t seed,
                                   const EngineOptions& options = {}, const RunControl& control = {});

/// Sample mean of (R(t) - L(t)) (R_supp(t) - L_supp(t)); lambda must be 0.
Estimate check_orthogonality(const ModelParams& params, double horizon, std::uint64_t n, std::uint64_t seed,
                             const EngineOptions& options = {}, const RunControl& control = {});

struct CltReport {
  std::uint64_t groups = 0;
  std::uint64_t group_size = 0;
  double ks_statistic = 0.0;
  double ks_p_value = 0.0;
  double skewness = 0.0;
  double skewness_error = 0.0;  // sqrt(6 / groups)
  double excess_kurtosis = 0.0;
  std::vector<double> standardized;
};

inline constexpr std::uint64_t kDefaultGroupSize = 200;
inline constexpr std::uint64_t kMinGroups = 50;

/// Standardized sums of consecutive groups of blocks,
/// (S_g - group_size * mean(X)) / sqrt(group_size * Var(X)), against N(0,1).
/// Needs at least kMinGroups groups.
CltReport check_clt(std::span<const BlockStats> blocks, std::uint64_t group_size = kDefaultGroupSize);

struct TailFit {
  double slope = 0.0;
  double std_error = 0.0;
  double lower = 0.0;  // slope -/+ 3 std_error
  double upper = 0.0;
  std::size_t points = 0;
  double x_min = 0.0;
  double x_max = 0.0;
};

/// Least-squares slope of log P(X >= x) against x over the values x whose
/// empirical survival lies in [0.01, 0.1]; bootstrap error. Needs 1e4 samples.
TailFit fit_tail_exponent(std::span<const double> samples, std::uint64_t seed = 0,
                          int resamples = kDefaultResamples);

}  // namespace dynperc
