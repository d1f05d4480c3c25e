#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dynperc/rng.hpp"

namespace dynperc {

enum class Method { direct, importance, derivative_formula, coupled_fd, identity };

std::string_view to_string(Method method);
std::optional<Method> method_from_string(std::string_view name);

/// Monte Carlo summary. `error_method` names how std_error was obtained
/// ("delta", "bootstrap", "sample", "exact").
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  Method method = Method::direct;
  std::string error_method = "delta";
  std::optional<double> ess;
  std::vector<std::string> warnings;

  double lower(double k = 3.0) const noexcept { return value - k * std_error; }
  double upper(double k = 3.0) const noexcept { return value + k * std_error; }
  // |value| > k * std_error.
  bool significant(double k = 3.0) const noexcept;
  bool contains(double x, double k = 3.0) const noexcept { return lower(k) <= x && x <= upper(k); }
};

// sqrt(a.se^2 + b.se^2)
double combined_error(const Estimate& a, const Estimate& b) noexcept;
// |a - b| <= k * combined_error(a, b)
bool agree(const Estimate& a, const Estimate& b, double k = 3.0) noexcept;

/// Compensated (Neumaier) sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  void merge(const CompensatedSum& other) noexcept {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double mean(std::span<const double> x);
// Unbiased sample variance (n - 1 denominator).
double sample_variance(std::span<const double> x);
double sample_skewness(std::span<const double> x);
// Excess kurtosis.
double sample_kurtosis(std::span<const double> x);

/// Mean with standard error sqrt(s^2 / n).
Estimate mean_estimate(std::span<const double> x, Method method);

/// mean(a) / mean(b) with the delta-method error sqrt(Var(a - r b) / n) / mean(b).
Estimate ratio_estimate(std::span<const double> a, std::span<const double> b, Method method);

/// Bootstrap standard deviation of statistic(indices) over `resamples`
/// resamples drawn from stream (seed, bootstrap, 0).
double bootstrap_error(std::size_t n, int resamples, std::uint64_t seed,
                       const std::function<double(std::span<const std::uint32_t>)>& statistic);

double normal_cdf(double x) noexcept;

/// Asymptotic Kolmogorov tail P(K > x) for the scaled statistic x.
double kolmogorov_tail(double x) noexcept;

struct KsResult {
  double statistic;
  double p_value;
};

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);
KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b);

struct ChiSquareResult {
  double statistic;
  double dof;
  double p_value;
};

double chi_square_tail(double statistic, double dof);

/// Goodness of fit of observed counts to cell probabilities; cells with zero
/// probability must have zero counts.
ChiSquareResult chi_square_test(std::span<const std::uint64_t> observed, std::span<const double> probabilities);

}  // namespace dynperc
