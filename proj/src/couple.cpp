#include "dynperc/couple.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace dynperc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// e^l / Z_l, e^-l / Z_l and 1 / Z_l without overflow; l may be infinite.
struct Masses {
  double right, left, side;
};

Masses masses(int d, double l) {
  if (std::isinf(l)) return {1.0, 0.0, 0.0};
  const double em = std::exp(-l);
  const double right = 1.0 / (1.0 + em * em + (2.0 * d - 2.0) * em);
  return {right, em * em * right, em * right};
}

Direction transverse(int d, double fraction) {
  const int k = std::min(2 * d - 3, static_cast<int>(fraction * (2 * d - 2)));
  return Direction::from_index(2 + k);
}

void guard(std::uint64_t& events, const EngineOptions& options, const char* what) {
  if (++events > options.max_events) {
    throw CensoredError(std::string(what) + " exceeded " + std::to_string(options.max_events) + " events");
  }
}

}  // namespace

CouplingThresholds::CouplingThresholds(int d, double lambda, double lambda_hi) : d_(d) {
  if (!(lambda_hi > lambda)) throw std::invalid_argument("coupling needs lambda_hi > lambda");
  const Masses lo = masses(d, lambda);
  const Masses hi = masses(d, lambda_hi);
  const double side = 2.0 * d - 2.0;
  c1_ = side * hi.side;
  c2_ = side * lo.side;
  c3_ = c2_ + hi.left;
  c4_ = 1.0 - lo.right;
}

CouplingThresholds::Decision CouplingThresholds::operator()(double u) const noexcept {
  constexpr Direction right{0, +1}, left{0, -1};
  if (u < c1_) {
    const Direction t = transverse(d_, u / c1_);
    return {1, t, t};
  }
  if (u < c2_) return {2, transverse(d_, (u - c1_) / (c2_ - c1_)), right};
  if (u < c3_) return {3, left, left};
  if (u < c4_) return {4, left, right};
  return {5, right, right};
}

// ---------------------------------------------------------------------------
// Colored coupling

namespace {

struct Leg {
  explicit Leg(const ModelParams& params) : store(params.p(), params.mu()) {}

  void attempt(Direction dir, double t, EnvDraws draws, double removal_time) {
    const auto obs = store.examine(EdgeId::incident(pos, dir), t, draws);
    if (infected.insert(obs.slot, removal_time) == 1) store.mark_managed(obs.slot);
    ++counts.attempts;
    if (dir.axis == 0) ++(dir.sign > 0 ? counts.right_attempts : counts.left_attempts);
    if (obs.open) {
      pos = pos.step(dir);
      ++counts.jumps;
      if (dir.axis == 0) ++(dir.sign > 0 ? counts.right : counts.left);
    }
  }

  void remove() {
    const auto r = infected.pop();
    if (r.copy == 1) store.apply_forced_refresh(r.slot, r.time);
  }

  Site pos;
  EnvStore store;
  InfectedSet infected;
  BlockStats counts;
};

}  // namespace

CoupledBlock run_coupled_block(const ModelParams& params, double lambda_hi, Rng& rng, const EngineOptions& options) {
  const CouplingThresholds thresholds(params.d(), params.lambda(), lambda_hi);
  Leg lo(params), hi(params);
  CoupledBlock out;
  std::uint64_t events = 0;
  double next_attempt = rng.exponential(1.0);
  double time = 0.0;
  for (;;) {
    guard(events, options, "coupled block");
    if (!lo.infected.empty() && lo.infected.next().time <= next_attempt) {
      time = lo.infected.next().time;
      if (hi.infected.next().time != time) throw std::logic_error("coupled legs lost their shared removals");
      lo.remove();
      hi.remove();
      if (lo.infected.empty() != hi.infected.empty()) throw std::logic_error("coupled legs regenerate apart");
      if (lo.infected.empty()) break;
      continue;
    }
    time = next_attempt;
    const auto decision = thresholds(rng.uniform());
    const EnvDraws draws = EnvDraws::draw(rng);
    const double removal = time + rng.exponential(params.mu());
    if (CouplingThresholds::color(decision.region) == PointColor::very_bad && !out.first_very_bad_index) {
      out.first_very_bad_index = out.u_a;
      out.first_very_bad_region = decision.region;
    }
    lo.attempt(decision.lo, time, draws, removal);
    hi.attempt(decision.hi, time, draws, removal);
    ++out.u_a;
    next_attempt = time + rng.exponential(1.0);
  }
  out.tau = time;
  for (int a = 0; a < kMaxDim; ++a) {
    lo.counts.displacement[a] = lo.pos[a];
    hi.counts.displacement[a] = hi.pos[a];
  }
  lo.counts.tau = hi.counts.tau = time;
  out.lo = lo.counts;
  out.hi = hi.counts;
  out.disp_lo = lo.counts.x1();
  out.disp_hi = hi.counts.x1();
  if (!out.first_very_bad_index && (out.disp_lo != out.disp_hi || !(lo.pos == hi.pos))) {
    throw std::logic_error("coupled legs separated without a very-bad point");
  }
  return out;
}

std::vector<CoupledBlock> coupled_block_sequence(const ModelParams& params, double lambda_hi, std::uint64_t n_blocks,
                                                 std::uint64_t seed, StreamTag tag, const EngineOptions& options,
                                                 const RunControl& control) {
  if (n_blocks < 1) throw std::invalid_argument("coupled_block_sequence needs n_blocks >= 1");
  std::vector<CoupledBlock> out(n_blocks);
  parallel_for_chunks(n_blocks, 4096, control, [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng = Rng::stream(seed, tag, i);
      out[i] = run_coupled_block(params, lambda_hi, rng, options);
    }
  });
  return out;
}

namespace {

// mean(disp_hi - disp_lo) / mean(tau).
Estimate gap_ratio(std::span<const CoupledBlock> blocks) {
  std::vector<double> gap(blocks.size()), tau(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    gap[i] = static_cast<double>(blocks[i].disp_hi - blocks[i].disp_lo);
    tau[i] = blocks[i].tau;
  }
  return ratio_estimate(gap, tau, Method::coupled_fd);
}

}  // namespace

Estimate estimate_derivative_coupled(const ModelParams& params, double eps, std::uint64_t n_blocks,
                                     std::uint64_t seed, const EngineOptions& options, const RunControl& control) {
  if (!(eps > 0.0 && eps <= 0.1)) throw std::invalid_argument("eps must lie in (0, 0.1]");
  if (n_blocks < 2) throw std::invalid_argument("estimate_derivative_coupled needs >= 2 blocks");
  const auto blocks = coupled_block_sequence(params, params.lambda() + eps, n_blocks, seed, StreamTag::coupled,
                                             options, control);
  Estimate e = gap_ratio(blocks);
  e.value /= eps;
  e.std_error /= eps;
  return e;
}

Estimate estimate_speed_anchored(const ModelParams& params, std::uint64_t n_blocks, std::uint64_t seed,
                                 const EngineOptions& options, const RunControl& control) {
  if (n_blocks < 2) throw std::invalid_argument("estimate_speed_anchored needs >= 2 blocks");
  const auto blocks = coupled_block_sequence(params, kInf, n_blocks, seed, StreamTag::anchored, options, control);
  Estimate e = gap_ratio(blocks);
  const double mu = params.mu(), p = params.p();
  e.value = mu * p / (1.0 - p + mu) - e.value;
  e.method = Method::direct;
  return e;
}

// ---------------------------------------------------------------------------
// One-dimensional monotone coupling

double monotone_separation_bound(double mu, double lambda1, double lambda2) {
  auto a = [](double l) { return 1.0 / (1.0 + std::exp(-2.0 * l)); };
  const double r = mu / (mu + 1.0);
  return (a(lambda2) - a(lambda1)) * r * r;
}

MonotonePair run_monotone_pair_1d(double p, double mu, double lambda1, double lambda2, Rng& rng,
                                  const EngineOptions& options) {
  if (!(lambda1 > 0.0) || !(lambda2 > lambda1) || !std::isfinite(lambda2)) {
    throw std::invalid_argument("monotone coupling needs 0 < lambda1 < lambda2 < infinity");
  }
  const double a1 = 1.0 / (1.0 + std::exp(-2.0 * lambda1));
  const double a2 = 1.0 / (1.0 + std::exp(-2.0 * lambda2));
  EnvStore store(p, mu);
  InfectedSet infected;
  std::int32_t x1 = 0, x2 = 0;
  double time = 0.0;
  std::uint64_t events = 0;

  auto examine = [&](std::int32_t from, int sign, double t) {
    const Direction dir{0, sign};
    Site s;
    s[0] = from;
    const auto obs = store.examine(EdgeId::incident(s, dir), t, rng);
    if (infected.insert(obs.slot, t + rng.exponential(mu)) == 1) store.mark_managed(obs.slot);
    return obs.open;
  };

  // Co-located: one clock at rate 1. Apart: two independent rate-1 clocks,
  // i.e. one rate-2 clock with a fair choice of mover. The clock is redrawn
  // after every attempt, which memorylessness allows.
  auto draw_clock = [&](double now) { return now + rng.exponential(x1 == x2 ? 1.0 : 2.0); };
  double next_attempt = draw_clock(0.0);

  for (;;) {
    guard(events, options, "monotone pair");
    if (!infected.empty() && infected.next().time <= next_attempt) {
      const auto r = infected.pop();
      time = r.time;
      if (r.copy == 1) store.apply_forced_refresh(r.slot, r.time);
      if (infected.empty()) break;
      continue;
    }
    time = next_attempt;
    const bool together = x1 == x2;
    if (together) {
      const double u = rng.uniform();
      const int s1 = u < a1 ? +1 : -1;
      const int s2 = u < a2 ? +1 : -1;
      if (s1 == s2) {
        if (examine(x1, s1, time)) x1 = x2 = x1 + s1;
      } else {
        const bool open1 = examine(x1, s1, time);
        const bool open2 = examine(x2, s2, time);
        if (open1) x1 += s1;
        if (open2) x2 += s2;
      }
    } else if (rng.uniform() < 0.5) {
      const int s = rng.uniform() < a1 ? +1 : -1;
      if (examine(x1, s, time)) x1 += s;
    } else {
      const int s = rng.uniform() < a2 ? +1 : -1;
      if (examine(x2, s, time)) x2 += s;
    }
    if (x1 > x2) throw std::logic_error("monotone coupling violated: lower-bias walk overtook");
    next_attempt = draw_clock(time);
  }
  return {time, x1, x2};
}

MonotoneSummary monotone_pairs_1d(double p, double mu, double lambda1, double lambda2, std::uint64_t n_blocks,
                                  std::uint64_t seed, const EngineOptions& options, const RunControl& control) {
  if (n_blocks < 2) throw std::invalid_argument("monotone_pairs_1d needs >= 2 blocks");
  std::vector<MonotonePair> pairs(n_blocks);
  parallel_for_chunks(n_blocks, 4096, control, [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng = Rng::stream(seed, StreamTag::monotone, i);
      pairs[i] = run_monotone_pair_1d(p, mu, lambda1, lambda2, rng, options);
    }
  });
  MonotoneSummary s;
  s.blocks = n_blocks;
  std::vector<double> gap(n_blocks);
  CompensatedSum tau;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pr = pairs[i];
    if (pr.disp1 <= pr.disp2) ++s.ordered;
    if (pr.disp1 < pr.disp2) ++s.strictly_ahead;
    gap[i] = static_cast<double>(pr.disp2 - pr.disp1);
    tau.add(pr.tau);
  }
  s.mean_gap = mean_estimate(gap, Method::coupled_fd);
  s.mean_tau = tau.value() / static_cast<double>(n_blocks);
  return s;
}

}  // namespace dynperc
