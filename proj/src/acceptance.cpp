#include "dynperc/acceptance.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "dynperc/analytic.hpp"
#include "dynperc/couple.hpp"
#include "dynperc/engine.hpp"
#include "dynperc/estimate.hpp"

namespace dynperc {

namespace {

constexpr std::array<std::string_view, kCriteria> kNames = {
    "regen", "tails", "limit-1d", "expansion", "regimes", "einstein",
    "identities", "triangle", "monotone", "positivity", "clt"};

std::string format(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

struct Context {
  std::uint64_t seed;
  RunControl control;
  // Distinct seed per sub-run of a criterion.
  std::uint64_t sub(int id, int k) const { return mix64(seed ^ (static_cast<std::uint64_t>(id) << 32)) + k; }
};

struct Outcome {
  bool ok;
  std::string detail;
};

std::string est(const Estimate& e) { return format("%.6g+-%.2g", e.value, e.std_error); }

// 1. Mean regeneration time e^{1/mu}.
Outcome regen(const Context& c) {
  bool ok = true;
  std::string detail;
  int k = 0;
  for (double mu : {0.5, 1.0, 2.0}) {
    const auto blocks = block_sequence(ModelParams(2, 0.5, mu, 1.0), 100000, c.sub(1, k++), {}, c.control);
    const Estimate t = mean_tau(blocks);
    const double exact = std::exp(1.0 / mu);
    const bool hit = t.contains(exact);
    ok = ok && hit;
    detail += format("mu=%g tau=%s exact=%.5f z=%.2f; ", mu, est(t).c_str(), exact, (t.value - exact) / t.std_error);
  }
  return {ok, detail};
}

// 2. Exponential tails of tau and U_a.
Outcome tails(const Context& c) {
  auto column = [](const std::vector<BlockStats>& blocks, bool attempts) {
    std::vector<double> x(blocks.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = attempts ? static_cast<double>(blocks[i].attempts) : blocks[i].tau;
    }
    return x;
  };
  const auto b1 = block_sequence(ModelParams(2, 0.5, 1.0, 1.0), 100000, c.sub(2, 0), {}, c.control);
  const auto b4 = block_sequence(ModelParams(2, 0.5, 4.0, 1.0), 100000, c.sub(2, 1), {}, c.control);
  const TailFit tau1 = fit_tail_exponent(column(b1, false), c.sub(2, 2));
  const TailFit ua1 = fit_tail_exponent(column(b1, true), c.sub(2, 3));
  const TailFit ua4 = fit_tail_exponent(column(b4, true), c.sub(2, 4));
  const bool negative = tau1.upper < 0.0 && ua1.upper < 0.0 && ua4.upper < 0.0;
  const bool steeper = ua4.slope + 3.0 * std::hypot(ua4.std_error, ua1.std_error) < ua1.slope;
  return {negative && steeper,
          format("tau slope(mu=1)=%.4f CI[%.4f,%.4f]; U_a slope mu=1 %.4f CI[%.4f,%.4f], mu=4 %.4f CI[%.4f,%.4f]",
                 tau1.slope, tau1.lower, tau1.upper, ua1.slope, ua1.lower, ua1.upper, ua4.slope, ua4.lower,
                 ua4.upper)};
}

// 3. d = 1, lambda = 20 speed equals the totally asymmetric one.
Outcome limit_1d(const Context& c) {
  const auto blocks = block_sequence(ModelParams(1, 0.5, 1.0, 20.0), 100000, c.sub(3, 0), {}, c.control);
  const Estimate v = estimate_speed_direct(blocks);
  const double target = speed_totally_asymmetric_1d(0.5, 1.0);
  const bool ok = std::abs(v.value - target) <= 3.0 * v.std_error + 1e-6;
  return {ok, format("v=%s target=%.6f", est(v).c_str(), target)};
}

// 4. Large-bias expansion and its sign.
Outcome expansion(const Context& c) {
  bool ok = true;
  std::string detail;
  int k = 0;
  for (double mu : {1.0, 0.3}) {
    const double base = speed_totally_asymmetric_1d(0.5, mu);
    const auto verdict = classify_regime(0.5, mu);
    double amp = 0.0;
    std::string onset = "none";
    for (double l : {4.0, 6.0, 8.0}) {
      const ModelParams params(2, 0.5, mu, l);
      const Estimate v = estimate_speed_anchored(params, 1000000, c.sub(4, k++), {}, c.control);
      const double dev = std::abs(v.value - asymptotic_speed(params));
      if (l == 4.0) amp = (dev + 3.0 * v.std_error) * std::exp(2.0 * l);
      const bool within = dev <= 3.0 * v.std_error + amp * std::exp(-2.0 * l);
      if (dev <= 3.0 * v.std_error && onset == "none") onset = format("%g", l);
      ok = ok && within;
      std::string sign_note;
      if (l >= 6.0) {
        const double gap = v.value - base;
        const double expected = -verdict.discriminant;
        const bool sign_ok = std::abs(gap) > 3.0 * v.std_error && (gap > 0) == (expected > 0);
        ok = ok && sign_ok;
        sign_note = format(" gap z=%.1f%s", gap / v.std_error, sign_ok ? "" : " WRONG-SIGN");
      }
      detail += format("mu=%g l=%g v=%s dev=%.2g%s%s; ", mu, l, est(v).c_str(), dev, within ? "" : " OUT", sign_note.c_str());
    }
    detail += format("A(mu=%g)=%.3g onset(l)=%s; ", mu, amp, onset.c_str());
  }
  return {ok, detail};
}

// 5. Regime signs from the coupled derivative.
Outcome regimes(const Context& c) {
  bool ok = true;
  std::string detail;
  int k = 0;
  for (double mu : {1.0, 0.3}) {
    const ModelParams params(2, 0.5, mu, 6.0);
    const Estimate dv = estimate_derivative_coupled(params, 0.05, 1000000, c.sub(5, k++), {}, c.control);
    const double ref = derivative_constant(2, 0.5, mu) * std::exp(-6.0);
    const bool sign_ok = dv.significant() && (dv.value > 0) == (ref > 0);
    const double ratio = dv.value / ref;
    const bool size_ok = ratio >= 0.5 && ratio <= 2.0;
    ok = ok && sign_ok && size_ok;
    detail += format("mu=%g dv=%s z=%.2f C e^-l=%.4g ratio=%.3f; ", mu, est(dv).c_str(), dv.value / dv.std_error, ref,
                     ratio);
  }
  return {ok, detail};
}

// 6. Einstein relation at lambda = 0.
Outcome einstein(const Context& c) {
  const ModelParams params(2, 0.5, 1.0, 0.0);
  const auto a = block_sequence(params, 100000, c.sub(6, 0), {}, c.control);
  const auto b = block_sequence(params, 100000, c.sub(6, 1), {}, c.control);
  const Estimate dv = estimate_derivative_formula(a, params, c.sub(6, 2));
  const Estimate s2 = estimate_sigma2(b, c.sub(6, 3));
  return {agree(dv, s2), format("v'(0)=%s sigma2=%s z=%.2f", est(dv).c_str(), est(s2).c_str(),
                                (dv.value - s2.value) / combined_error(dv, s2))};
}

// 7. Martingale and orthogonality identities over a parameter grid.
Outcome identities(const Context& c) {
  struct Cell {
    int d;
    double l, p, mu, t;
  };
  constexpr Cell martingale[] = {{1, 0.5, 0.5, 1, 10}, {2, 0.25, 0.5, 1, 10}, {2, 0.5, 0.5, 1, 5},
                                 {2, 1, 0.5, 1, 2},    {3, 0.5, 0.7, 2, 5},   {1, 1, 0.3, 0.5, 3},
                                 {2, 0.5, 0.3, 0.3, 10}, {3, 0.25, 0.5, 1, 20}};
  constexpr Cell orthogonal[] = {{2, 0, 0.5, 1, 20}, {1, 0, 0.3, 0.5, 10}, {3, 0, 0.7, 2, 5},  {2, 0, 0.3, 0.3, 10},
                                 {1, 0, 0.5, 1, 10}, {2, 0, 0.7, 0.5, 5},  {3, 0, 0.5, 1, 10}, {1, 0, 0.9, 2, 20}};
  bool ok = true;
  int k = 0, passed_m = 0, passed_o = 0;
  double worst_m = 0.0, worst_o = 0.0;
  std::string failures;
  for (const auto& cell : martingale) {
    const Estimate e = check_martingale_identity(ModelParams(cell.d, cell.p, cell.mu, cell.l), cell.t, 100000,
                                                 c.sub(7, k++), {}, c.control);
    const double z = (e.value - 1.0) / e.std_error;
    worst_m = std::max(worst_m, std::abs(z));
    if (e.contains(1.0)) {
      ++passed_m;
    } else {
      ok = false;
      failures += format(" M(d=%d,l=%g,t=%g) z=%.2f", cell.d, cell.l, cell.t, z);
    }
  }
  for (const auto& cell : orthogonal) {
    const Estimate e = check_orthogonality(ModelParams(cell.d, cell.p, cell.mu, 0.0), cell.t, 100000, c.sub(7, k++),
                                           {}, c.control);
    const double z = e.value / e.std_error;
    worst_o = std::max(worst_o, std::abs(z));
    if (e.contains(0.0)) {
      ++passed_o;
    } else {
      ok = false;
      failures += format(" O(d=%d,p=%g,mu=%g,t=%g) z=%.2f", cell.d, cell.p, cell.mu, cell.t, z);
    }
  }
  return {ok, format("martingale %d/8 (max|z|=%.2f), orthogonality %d/8 (max|z|=%.2f)%s", passed_m, worst_m, passed_o,
                     worst_o, failures.c_str())};
}

// 8. Direct, importance and curve estimates of v(0.5).
Outcome triangle(const Context& c) {
  const ModelParams target(2, 0.5, 1.0, 0.5);
  const ModelParams unbiased = target.with_lambda(0.0);
  const auto direct_blocks = block_sequence(target, 100000, c.sub(8, 0), {}, c.control);
  const auto is_blocks = block_sequence(unbiased, 100000, c.sub(8, 1), {}, c.control);
  const auto curve_blocks = block_sequence(unbiased, 100000, c.sub(8, 2), {}, c.control);
  const Estimate direct = estimate_speed_direct(direct_blocks);
  const Estimate importance = estimate_speed_importance(is_blocks, target);
  const double lambdas[] = {0.5};
  const Estimate curve =
      speed_curve_from_unbiased(make_histogram(curve_blocks), mean_tau(curve_blocks), 2, 0.5, 1.0, lambdas)[0].speed;
  const bool ok = agree(direct, importance) && agree(direct, curve) && agree(importance, curve);
  return {ok, format("direct=%s importance=%s (ESS %.0f) curve=%s", est(direct).c_str(), est(importance).c_str(),
                     importance.ess.value_or(0.0), est(curve).c_str())};
}

// 9. One-dimensional monotone coupling.
Outcome monotone(const Context& c) {
  const MonotoneSummary s = monotone_pairs_1d(0.5, 1.0, 0.5, 1.0, 1000000, c.sub(9, 0), {}, c.control);
  const bool ok = s.ordered == s.blocks && s.mean_gap.value > 3.0 * s.mean_gap.std_error;
  const double frac = static_cast<double>(s.strictly_ahead) / static_cast<double>(s.blocks);
  return {ok, format("ordered %llu/%llu, mean gap=%s z=%.1f, P(ahead)=%.4f (bound %.4f)",
                     static_cast<unsigned long long>(s.ordered), static_cast<unsigned long long>(s.blocks),
                     est(s.mean_gap).c_str(), s.mean_gap.value / s.mean_gap.std_error, frac,
                     monotone_separation_bound(1.0, 0.5, 1.0))};
}

// 10. Positive speed in the eventually decreasing regime.
Outcome positivity(const Context& c) {
  bool ok = true;
  std::string detail;
  int k = 0;
  for (double l : {0.25, 0.5, 1.0, 2.0}) {
    const auto blocks = block_sequence(ModelParams(2, 0.5, 0.3, l), 100000, c.sub(10, k++), {}, c.control);
    const Estimate v = estimate_speed_direct(blocks);
    const bool pos = v.value > 3.0 * v.std_error;
    ok = ok && pos;
    detail += format("l=%g v=%s z=%.1f; ", l, est(v).c_str(), v.value / v.std_error);
  }
  return {ok, detail};
}

// 11. Normality of standardized group sums.
Outcome clt(const Context& c) {
  const auto blocks = block_sequence(ModelParams(2, 0.5, 1.0, 1.0), 100000, c.sub(11, 0), {}, c.control);
  const CltReport r = check_clt(blocks, 200);
  return {r.ks_p_value > 0.01, format("groups=%llu KS D=%.4f p=%.3f skew=%.3f+-%.3f ex.kurt=%.3f",
                                      static_cast<unsigned long long>(r.groups), r.ks_statistic, r.ks_p_value,
                                      r.skewness, r.skewness_error, r.excess_kurtosis)};
}

}  // namespace

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

std::string_view criterion_name(int id) {
  if (id < 1 || id > kCriteria) throw std::invalid_argument("unknown criterion " + std::to_string(id));
  return kNames[static_cast<std::size_t>(id - 1)];
}

std::vector<int> select_criteria(std::string_view suite) {
  std::vector<int> out;
  if (suite == "all") {
    for (int i = 1; i <= kCriteria; ++i) out.push_back(i);
    return out;
  }
  std::stringstream ss{std::string(suite)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    int id = 0;
    for (int i = 1; i <= kCriteria; ++i) {
      if (kNames[static_cast<std::size_t>(i - 1)] == item) id = i;
    }
    if (id == 0) {
      try {
        std::size_t used = 0;
        id = std::stoi(item, &used);
        if (used != item.size()) id = 0;
      } catch (const std::exception&) {
        id = 0;
      }
    }
    if (id < 1 || id > kCriteria) throw std::invalid_argument("unknown suite '" + item + "'");
    out.push_back(id);
  }
  if (out.empty()) throw std::invalid_argument("empty suite");
  return out;
}

CriterionResult run_criterion(int id, const SuiteOptions& options) {
  CriterionResult result;
  result.id = id;
  result.name = std::string(criterion_name(id));
  Context ctx{options.seed, {}};
  ctx.control.threads = options.threads;
  const auto start = std::chrono::steady_clock::now();
  if (options.budget_seconds) {
    ctx.control.deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                       std::chrono::duration<double>(*options.budget_seconds));
  }
  using Fn = Outcome (*)(const Context&);
  constexpr Fn table[] = {regen, tails, limit_1d, expansion, regimes, einstein,
                          identities, triangle, monotone, positivity, clt};
  try {
    const Outcome o = table[id - 1](ctx);
    result.verdict = o.ok ? Verdict::pass : Verdict::fail;
    result.detail = o.detail;
  } catch (const BudgetExceeded&) {
    result.verdict = Verdict::inconclusive;
    result.detail = "compute budget exceeded";
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string format_result(const CriterionResult& r) {
  return format("%-12s %2d %-10s (%.1fs) ", std::string(to_string(r.verdict)).c_str(), r.id, r.name.c_str(),
                r.seconds) +
         r.detail;
}

}  // namespace dynperc
