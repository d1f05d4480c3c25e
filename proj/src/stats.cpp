#include "dynperc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace dynperc {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::direct: return "direct";
    case Method::importance: return "importance";
    case Method::derivative_formula: return "derivative-formula";
    case Method::coupled_fd: return "coupled-fd";
    case Method::identity: return "identity";
  }
  return "unknown";
}

std::optional<Method> method_from_string(std::string_view name) {
  for (Method m : {Method::direct, Method::importance, Method::derivative_formula, Method::coupled_fd,
                   Method::identity}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

bool Estimate::significant(double k) const noexcept { return std::abs(value) > k * std_error; }

double combined_error(const Estimate& a, const Estimate& b) noexcept { return std::hypot(a.std_error, b.std_error); }

bool agree(const Estimate& a, const Estimate& b, double k) noexcept {
  return std::abs(a.value - b.value) <= k * combined_error(a, b);
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

namespace {

void require(std::size_t n, std::size_t at_least, const char* what) {
  if (n < at_least) throw std::invalid_argument(std::string(what) + ": not enough samples");
}

double central_moment(std::span<const double> x, double m, int k) {
  CompensatedSum s;
  for (double v : x) s.add(std::pow(v - m, k));
  return s.value() / static_cast<double>(x.size());
}

}  // namespace

double mean(std::span<const double> x) {
  require(x.size(), 1, "mean");
  CompensatedSum s;
  for (double v : x) s.add(v);
  return s.value() / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  require(x.size(), 2, "sample_variance");
  const double m = mean(x);
  CompensatedSum s;
  for (double v : x) s.add((v - m) * (v - m));
  return s.value() / static_cast<double>(x.size() - 1);
}

double sample_skewness(std::span<const double> x) {
  require(x.size(), 3, "sample_skewness");
  const double m = mean(x);
  const double m2 = central_moment(x, m, 2);
  return central_moment(x, m, 3) / std::pow(m2, 1.5);
}

double sample_kurtosis(std::span<const double> x) {
  require(x.size(), 4, "sample_kurtosis");
  const double m = mean(x);
  const double m2 = central_moment(x, m, 2);
  return central_moment(x, m, 4) / (m2 * m2) - 3.0;
}

Estimate mean_estimate(std::span<const double> x, Method method) {
  require(x.size(), 2, "mean_estimate");
  Estimate e;
  e.value = mean(x);
  e.std_error = std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
  e.n = x.size();
  e.method = method;
  e.error_method = "sample";
  return e;
}

Estimate ratio_estimate(std::span<const double> a, std::span<const double> b, Method method) {
  if (a.size() != b.size()) throw std::invalid_argument("ratio_estimate: length mismatch");
  require(a.size(), 2, "ratio_estimate");
  const double ma = mean(a);
  const double mb = mean(b);
  if (mb == 0.0) throw std::invalid_argument("ratio_estimate: zero denominator");
  const double r = ma / mb;
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double res = (a[i] - ma) - r * (b[i] - mb);
    s.add(res * res);
  }
  const double n = static_cast<double>(a.size());
  Estimate e;
  e.value = r;
  e.std_error = std::sqrt(s.value() / (n - 1.0) / n) / std::abs(mb);
  e.n = a.size();
  e.method = method;
  e.error_method = "delta";
  return e;
}

double bootstrap_error(std::size_t n, int resamples, std::uint64_t seed,
                       const std::function<double(std::span<const std::uint32_t>)>& statistic) {
  require(n, 2, "bootstrap_error");
  if (resamples < 2) throw std::invalid_argument("bootstrap_error: need >= 2 resamples");
  Rng rng = Rng::stream(seed, StreamTag::bootstrap, 0);
  std::vector<std::uint32_t> idx(n);
  std::vector<double> stats(static_cast<std::size_t>(resamples));
  for (auto& s : stats) {
    for (auto& i : idx) i = static_cast<std::uint32_t>(rng.uniform() * static_cast<double>(n));
    s = statistic(idx);
  }
  return std::sqrt(sample_variance(stats));
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_tail(double x) noexcept {
  if (x <= 0.0) return 1.0;
  if (x < 0.3) {
    // Small-x form: P(K <= x) = sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2)).
    constexpr double pi = 3.14159265358979323846;
    double s = 0.0;
    for (int k = 1; k <= 5; ++k) s += std::exp(-(2 * k - 1) * (2 * k - 1) * pi * pi / (8 * x * x));
    return 1.0 - std::sqrt(2 * pi) / x * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double n_eff) {
  const double sq = std::sqrt(n_eff);
  return kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d);
}

}  // namespace

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  require(sample.size(), 1, "ks_test");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n)};
}

KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b) {
  require(a.size(), 1, "ks_test_two_sample");
  require(b.size(), 1, "ks_test_two_sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  // Step through distinct values so ties are handled exactly.
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

double chi_square_tail(double statistic, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("chi_square_tail: dof must be positive");
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_test(std::span<const std::uint64_t> observed, std::span<const double> probabilities) {
  if (observed.size() != probabilities.size()) throw std::invalid_argument("chi_square_test: length mismatch");
  const double total = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::uint64_t{0}));
  if (total <= 0.0) throw std::invalid_argument("chi_square_test: no observations");
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = total * probabilities[i];
    if (expected <= 0.0) {
      if (observed[i] != 0) return {std::numeric_limits<double>::infinity(), 0.0, 0.0};
      continue;
    }
    const double diff = static_cast<double>(observed[i]) - expected;
    stat += diff * diff / expected;
    ++cells;
  }
  if (cells < 2) throw std::invalid_argument("chi_square_test: need two populated cells");
  const double dof = cells - 1;
  return {stat, dof, chi_square_tail(stat, dof)};
}

}  // namespace dynperc
