#include "dynperc/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dynperc {

namespace {

void require_blocks(std::size_t n, std::size_t at_least, const char* what) {
  if (n < at_least) throw std::invalid_argument(std::string(what) + ": needs at least " + std::to_string(at_least) +
                                                " blocks, got " + std::to_string(n));
}

// log Z_lambda and Z'_lambda / Z_lambda without overflow.
double log_z(int d, double l) { return l + std::log1p(std::exp(-2.0 * l) + (2.0 * d - 2.0) * std::exp(-l)); }

double dlog_z(int d, double l) {
  const double em = std::exp(-l);
  return (1.0 - em * em) / (1.0 + em * em + (2.0 * d - 2.0) * em);
}

double log_weight(std::int64_t drift, std::int64_t attempts, int d, double l) {
  if (l == 0.0) return 0.0;
  return l * static_cast<double>(drift) + static_cast<double>(attempts) * (std::log(2.0 * d) - log_z(d, l));
}

}  // namespace

Estimate estimate_speed_direct(std::span<const BlockStats> blocks) {
  require_blocks(blocks.size(), 2, "estimate_speed_direct");
  std::vector<double> x(blocks.size()), tau(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    x[i] = static_cast<double>(blocks[i].x1());
    tau[i] = blocks[i].tau;
  }
  return ratio_estimate(x, tau, Method::direct);
}

Estimate mean_tau(std::span<const BlockStats> blocks) {
  require_blocks(blocks.size(), 2, "mean_tau");
  std::vector<double> tau(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) tau[i] = blocks[i].tau;
  return mean_estimate(tau, Method::direct);
}

Estimate estimate_sigma2(std::span<const BlockStats> blocks, std::uint64_t seed, int resamples) {
  require_blocks(blocks.size(), 2, "estimate_sigma2");
  const std::size_t n = blocks.size();
  std::vector<double> x(n), tau(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(blocks[i].x1());
    tau[i] = blocks[i].tau;
  }
  auto stat = [&](auto&& index, std::size_t count) {
    CompensatedSum sx, sxx, st;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = index(k);
      sx.add(x[i]);
      sxx.add(x[i] * x[i]);
      st.add(tau[i]);
    }
    const double m = static_cast<double>(count);
    const double var = (sxx.value() - sx.value() * sx.value() / m) / (m - 1.0);
    return var / (st.value() / m);
  };
  Estimate e;
  e.value = stat([](std::size_t k) { return k; }, n);
  e.std_error = bootstrap_error(n, resamples, seed, [&](std::span<const std::uint32_t> idx) {
    return stat([&](std::size_t k) { return static_cast<std::size_t>(idx[k]); }, idx.size());
  });
  e.n = n;
  e.method = Method::direct;
  e.error_method = "bootstrap";
  return e;
}

double importance_weight(const BlockStats& block, const ModelParams& target) {
  return std::exp(log_weight(block.right_attempts - block.left_attempts, block.attempts, target.d(),
                             target.lambda()));
}

Estimate estimate_speed_importance(std::span<const BlockStats> unbiased, const ModelParams& target) {
  require_blocks(unbiased.size(), 2, "estimate_speed_importance");
  const std::size_t n = unbiased.size();
  std::vector<double> xw(n), tau(n);
  CompensatedSum sw, sww;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = importance_weight(unbiased[i], target);
    xw[i] = static_cast<double>(unbiased[i].x1()) * w;
    tau[i] = unbiased[i].tau;
    sw.add(w);
    sww.add(w * w);
  }
  Estimate e = ratio_estimate(xw, tau, Method::importance);
  e.ess = sw.value() * sw.value() / sww.value();
  if (*e.ess < 100.0) e.warnings.push_back("effective sample size below 100");
  if (target.lambda() > 1.5) e.warnings.push_back("importance sampling beyond lambda = 1.5 is unreliable");
  return e;
}

Estimate importance_normalization(std::span<const BlockStats> unbiased, const ModelParams& target) {
  require_blocks(unbiased.size(), 2, "importance_normalization");
  std::vector<double> w(unbiased.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = importance_weight(unbiased[i], target);
  Estimate e = mean_estimate(w, Method::identity);
  return e;
}

Estimate estimate_derivative_formula(std::span<const BlockStats> blocks, const ModelParams& params,
                                     std::uint64_t seed, int resamples) {
  require_blocks(blocks.size(), 2, "estimate_derivative_formula");
  const double c = dlog_z(params.d(), params.lambda());
  const std::size_t n = blocks.size();
  // Score S = (R_a - L_a) - c U_a has zero mean given (U_a, tau), so
  // E[(X - beta U_a) S] = E[X S] for any beta. beta is the least-squares fit
  // of X on U_a weighted by S^2, refit in every bootstrap resample.
  std::vector<double> x(n), s(n), u(n), tau(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = blocks[i];
    x[i] = static_cast<double>(b.x1());
    s[i] = static_cast<double>(b.right_attempts - b.left_attempts) - c * static_cast<double>(b.attempts);
    u[i] = static_cast<double>(b.attempts);
    tau[i] = b.tau;
  }
  auto stat = [&](auto&& index, std::size_t count) {
    CompensatedSum xus, uus;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = index(k);
      const double ss = s[i] * s[i];
      xus.add(x[i] * u[i] * ss);
      uus.add(u[i] * u[i] * ss);
    }
    const double beta = uus.value() > 0.0 ? xus.value() / uus.value() : 0.0;
    CompensatedSum num, den;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = index(k);
      num.add((x[i] - beta * u[i]) * s[i]);
      den.add(tau[i]);
    }
    return num.value() / den.value();
  };
  Estimate e;
  e.value = stat([](std::size_t k) { return k; }, n);
  e.std_error = bootstrap_error(n, resamples, seed, [&](std::span<const std::uint32_t> idx) {
    return stat([&](std::size_t k) { return static_cast<std::size_t>(idx[k]); }, idx.size());
  });
  e.n = n;
  e.method = Method::derivative_formula;
  e.error_method = "bootstrap";
  return e;
}

// ---------------------------------------------------------------------------
// Speed curve from unbiased blocks

void BlockHistogram::add(const BlockStats& b) {
  if (b.right > b.right_attempts || b.left > b.left_attempts || b.right_attempts + b.left_attempts > b.attempts) {
    throw std::invalid_argument("BlockHistogram: inconsistent block counters");
  }
  ++counts_[{b.right_attempts, b.left_attempts, b.right, b.left, b.attempts}];
  ++total_;
}

void BlockHistogram::merge(const BlockHistogram& other) {
  for (const auto& [key, count] : other.counts_) counts_[key] += count;
  total_ += other.total_;
}

BlockHistogram make_histogram(std::span<const BlockStats> blocks) {
  BlockHistogram h;
  for (const auto& b : blocks) h.add(b);
  return h;
}

std::vector<CurvePoint> speed_curve_from_unbiased(const BlockHistogram& hist, const Estimate& tau_bar, int d,
                                                  double p, double mu, std::span<const double> lambdas) {
  if (hist.total() < 2) throw std::invalid_argument("speed_curve_from_unbiased: empty histogram");
  if (!(tau_bar.value > 0.0)) throw std::invalid_argument("speed_curve_from_unbiased: mean tau must be positive");
  const double n = static_cast<double>(hist.total());
  const double t = tau_bar.value;

  auto finish = [&](double first, double second, Method method) {
    // first, second: sample moments of the per-block summand.
    const double f = first / n;
    const double var = std::max(0.0, (second / n - f * f) * n / (n - 1.0));
    const double se_f = std::sqrt(var / n);
    Estimate e;
    e.value = f / t;
    e.std_error = std::sqrt(se_f * se_f / (t * t) + f * f * tau_bar.std_error * tau_bar.std_error / (t * t * t * t));
    e.n = hist.total();
    e.method = method;
    e.error_method = "delta";
    return e;
  };

  std::vector<CurvePoint> out;
  out.reserve(lambdas.size());
  for (double l : lambdas) {
    const ModelParams params(d, p, mu, l);  // validates lambda
    const double c = dlog_z(d, l);
    CompensatedSum f1, f2, g1, g2;
    for (const auto& [key, count] : hist.counts()) {
      const auto [ra, la, r, lft, ua] = key;
      const double cnt = static_cast<double>(count);
      const double x = static_cast<double>(r - lft);
      const double w = std::exp(log_weight(ra - la, ua, d, l));
      const double y = x * w;
      const double z = y * (static_cast<double>(ra - la) - c * static_cast<double>(ua));
      f1.add(cnt * y);
      f2.add(cnt * y * y);
      g1.add(cnt * z);
      g2.add(cnt * z * z);
    }
    out.push_back({params.lambda(), finish(f1.value(), f2.value(), Method::importance),
                   finish(g1.value(), g2.value(), Method::derivative_formula)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fixed-horizon identities

std::vector<BlockStats> horizon_counts(const ModelParams& params, double horizon, std::uint64_t n, std::uint64_t seed,
                                       const EngineOptions& options, const RunControl& control) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be finite and >= 0");
  std::vector<BlockStats> out(n);
  parallel_for_chunks(n, 4096, control, [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng = Rng::stream(seed, StreamTag::trajectories, i);
      out[i] = run_horizon(params, horizon, rng, options);
    }
  });
  return out;
}

Estimate check_martingale_identity(const ModelParams& params, double horizon, std::uint64_t n, std::uint64_t seed,
                                   const EngineOptions& options, const RunControl& control) {
  require_blocks(n, 2, "check_martingale_identity");
  const auto runs = horizon_counts(params, horizon, n, seed, options, control);
  std::vector<double> w(n);
  CompensatedSum sw, sww;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(-2.0 * params.lambda() * static_cast<double>(runs[i].x1()));
    sw.add(w[i]);
    sww.add(w[i] * w[i]);
  }
  Estimate e = mean_estimate(w, Method::identity);
  e.ess = sw.value() * sw.value() / sww.value();
  if (*e.ess < static_cast<double>(n) / 100.0) {
    e.warnings.push_back("ill-conditioned: effective sample size below n/100, the error bar is unreliable");
  }
  return e;
}

Estimate check_orthogonality(const ModelParams& params, double horizon, std::uint64_t n, std::uint64_t seed,
                             const EngineOptions& options, const RunControl& control) {
  if (params.lambda() != 0.0) throw std::invalid_argument("check_orthogonality requires lambda = 0");
  require_blocks(n, 2, "check_orthogonality");
  const auto runs = horizon_counts(params, horizon, n, seed, options, control);
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = runs[i];
    prod[i] = static_cast<double>(r.x1()) * static_cast<double>(r.right_suppressed() - r.left_suppressed());
  }
  return mean_estimate(prod, Method::identity);
}

// ---------------------------------------------------------------------------
// CLT and tails

CltReport check_clt(std::span<const BlockStats> blocks, std::uint64_t group_size) {
  if (group_size < 1) throw std::invalid_argument("check_clt: group size must be >= 1");
  const std::uint64_t groups = blocks.size() / group_size;
  if (groups < kMinGroups) {
    throw std::invalid_argument("check_clt: needs at least " + std::to_string(kMinGroups) + " groups of " +
                                std::to_string(group_size) + " blocks");
  }
  const std::size_t used = groups * group_size;
  std::vector<double> x(used);
  for (std::size_t i = 0; i < used; ++i) x[i] = static_cast<double>(blocks[i].x1());
  const double m = mean(x);
  const double var = sample_variance(x);
  if (!(var > 0.0)) throw std::invalid_argument("check_clt: degenerate displacements");
  const double g = static_cast<double>(group_size);
  const double scale = std::sqrt(g * var);

  CltReport rep;
  rep.groups = groups;
  rep.group_size = group_size;
  rep.standardized.resize(groups);
  for (std::uint64_t k = 0; k < groups; ++k) {
    CompensatedSum s;
    for (std::uint64_t j = 0; j < group_size; ++j) s.add(x[k * group_size + j]);
    rep.standardized[k] = (s.value() - g * m) / scale;
  }
  const auto ks = ks_test(rep.standardized, normal_cdf);
  rep.ks_statistic = ks.statistic;
  rep.ks_p_value = ks.p_value;
  rep.skewness = sample_skewness(rep.standardized);
  rep.skewness_error = std::sqrt(6.0 / static_cast<double>(groups));
  rep.excess_kurtosis = sample_kurtosis(rep.standardized);
  return rep;
}

namespace {

struct Line {
  double slope;
  std::size_t points;
  double x_min, x_max;
};

std::optional<Line> survival_slope(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  // (value, P(X >= value)) at each distinct value.
  std::vector<std::pair<double, double>> surv;
  for (std::size_t i = 0; i < x.size();) {
    surv.emplace_back(x[i], static_cast<double>(x.size() - i) / n);
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    i = j;
  }
  auto fit = [&](double lo, double hi) -> std::optional<Line> {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t k = 0;
    double x_min = 0, x_max = 0;
    for (const auto& [v, s] : surv) {
      if (s < lo || s > hi) continue;
      const double y = std::log(s);
      if (k == 0) x_min = v;
      x_max = v;
      sx += v;
      sy += y;
      sxx += v * v;
      sxy += v * y;
      ++k;
    }
    if (k < 3) return std::nullopt;
    const double kk = static_cast<double>(k);
    const double den = kk * sxx - sx * sx;
    if (!(den > 0.0)) return std::nullopt;
    return Line{(kk * sxy - sx * sy) / den, k, x_min, x_max};
  };
  if (auto line = fit(0.01, 0.1)) return line;
  // Too few distinct values in the upper decade (small integer supports).
  return fit(10.0 / n, 0.5);
}

}  // namespace

TailFit fit_tail_exponent(std::span<const double> samples, std::uint64_t seed, int resamples) {
  if (samples.size() < 10000) throw std::invalid_argument("fit_tail_exponent: needs at least 1e4 samples");
  std::vector<double> x(samples.begin(), samples.end());
  const auto line = survival_slope(x);
  if (!line) throw std::invalid_argument("fit_tail_exponent: degenerate samples");
  TailFit out;
  out.slope = line->slope;
  out.points = line->points;
  out.x_min = line->x_min;
  out.x_max = line->x_max;
  std::vector<double> resample(x.size());
  out.std_error = bootstrap_error(x.size(), resamples, seed, [&](std::span<const std::uint32_t> idx) {
    for (std::size_t k = 0; k < idx.size(); ++k) resample[k] = x[idx[k]];
    const auto l = survival_slope(resample);
    if (!l) throw std::invalid_argument("fit_tail_exponent: degenerate bootstrap resample");
    return l->slope;
  });
  out.lower = out.slope - 3.0 * out.std_error;
  out.upper = out.slope + 3.0 * out.std_error;
  return out;
}

}  // namespace dynperc
