#include "dynperc/engine.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace dynperc {

void check_block_invariants(const BlockStats& b) {
  const bool ok = b.right <= b.right_attempts && b.left <= b.left_attempts &&
                  b.right_attempts + b.left_attempts <= b.attempts && b.jumps <= b.attempts &&
                  b.right + b.left <= b.jumps && b.displacement[0] == b.x1() && b.tau >= 0.0;
  if (!ok) throw std::logic_error("block statistics violate their invariants");
}

// ---------------------------------------------------------------------------
// InfectedSet

namespace {

// Min-heap order on (time, seq).
struct LaterRemoval {
  bool operator()(const InfectedSet::Removal& a, const InfectedSet::Removal& b) const noexcept {
    return a.time > b.time || (a.time == b.time && a.seq > b.seq);
  }
};

}  // namespace

std::uint32_t InfectedSet::insert(std::size_t slot, double removal_time) {
  if (slot >= copies_.size()) copies_.resize(slot + 1);
  Copies& c = copies_[slot];
  std::uint32_t copy;
  if (c.low != ~std::uint64_t{0}) {
    const int bit = std::countr_one(c.low);
    c.low |= std::uint64_t{1} << bit;
    copy = static_cast<std::uint32_t>(bit) + 1;
  } else {
    copy = 65;
    auto it = c.overflow.begin();
    while (it != c.overflow.end() && *it == copy) {
      ++it;
      ++copy;
    }
    c.overflow.insert(it, copy);
  }
  heap_.push_back({removal_time, seq_++, slot, copy});
  std::push_heap(heap_.begin(), heap_.end(), LaterRemoval{});
  return copy;
}

InfectedSet::Removal InfectedSet::pop() {
  std::pop_heap(heap_.begin(), heap_.end(), LaterRemoval{});
  const Removal r = heap_.back();
  heap_.pop_back();
  Copies& c = copies_[r.slot];
  if (r.copy <= 64) {
    c.low &= ~(std::uint64_t{1} << (r.copy - 1));
  } else {
    c.overflow.erase(std::find(c.overflow.begin(), c.overflow.end(), r.copy));
  }
  return r;
}

bool InfectedSet::contains(std::size_t slot, std::uint32_t copy) const {
  if (slot >= copies_.size() || copy == 0) return false;
  const Copies& c = copies_[slot];
  if (copy <= 64) return (c.low >> (copy - 1)) & 1U;
  return std::find(c.overflow.begin(), c.overflow.end(), copy) != c.overflow.end();
}

void InfectedSet::clear() {
  heap_.clear();
  copies_.clear();
  seq_ = 0;
}

// ---------------------------------------------------------------------------
// Walk simulation

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Event { attempt, removal };

class Simulator {
 public:
  Simulator(const ModelParams& params, const EngineOptions& options)
      : params_(params), options_(options), sampler_(params), store_(params.p(), params.mu()) {}

  void start(Rng& rng) {
    store_.reset();
    infected_.clear();
    position_ = Site{};
    time_ = 0.0;
    events_ = 0;
    counts_ = BlockStats{};
    block_start_time_ = 0.0;
    block_start_ = Site{};
    next_attempt_ = rng.exponential(1.0);
  }

  double next_event_time() const noexcept {
    return infected_.empty() ? next_attempt_ : std::min(next_attempt_, infected_.next().time);
  }

  // Removals win ties with attempts.
  Event step(Rng& rng, std::vector<TrajectoryEvent>* log = nullptr) {
    if (++events_ > options_.max_events) {
      throw CensoredError("run exceeded " + std::to_string(options_.max_events) + " events (" + to_string(params_) + ")");
    }
    if (!infected_.empty() && infected_.next().time <= next_attempt_) {
      const auto removal = infected_.pop();
      time_ = removal.time;
      if (removal.copy == 1) store_.apply_forced_refresh(removal.slot, removal.time);
      return Event::removal;
    }
    time_ = next_attempt_;
    const Direction dir = sampler_(rng.uniform());
    const EdgeId edge = EdgeId::incident(position_, dir);
    const auto obs = store_.examine(edge, time_, EnvDraws::draw(rng));
    const double lifetime = rng.exponential(params_.mu());
    if (infected_.insert(obs.slot, time_ + lifetime) == 1) store_.mark_managed(obs.slot);

    ++counts_.attempts;
    if (dir.axis == 0) ++(dir.sign > 0 ? counts_.right_attempts : counts_.left_attempts);
    if (obs.open) {
      position_ = position_.step(dir);
      ++counts_.jumps;
      if (dir.axis == 0) ++(dir.sign > 0 ? counts_.right : counts_.left);
    }
    if (log) log->push_back({time_, dir, obs.open});
    next_attempt_ = time_ + rng.exponential(1.0);
    return Event::attempt;
  }

  bool regenerated(Event e) const noexcept { return e == Event::removal && infected_.empty(); }

  // Closes the current block at the present time and starts the next one.
  BlockStats cut_block() {
    BlockStats out = counts_;
    out.tau = time_ - block_start_time_;
    for (int a = 0; a < kMaxDim; ++a) out.displacement[a] = position_[a] - block_start_[a];
    counts_ = BlockStats{};
    events_ = 0;
    block_start_time_ = time_;
    block_start_ = position_;
    return out;
  }

  const Site& position() const noexcept { return position_; }

 private:
  ModelParams params_;
  EngineOptions options_;
  DirectionSampler sampler_;
  EnvStore store_;
  InfectedSet infected_;
  Site position_;
  double time_ = 0.0;
  double next_attempt_ = kInf;
  std::uint64_t events_ = 0;
  BlockStats counts_;
  double block_start_time_ = 0.0;
  Site block_start_;
};

}  // namespace

BlockStats path_counts(const Trajectory& trajectory) {
  BlockStats c;
  c.tau = trajectory.horizon;
  for (const auto& ev : trajectory.events) {
    ++c.attempts;
    if (ev.direction.axis == 0) ++(ev.direction.sign > 0 ? c.right_attempts : c.left_attempts);
    if (ev.performed) {
      ++c.jumps;
      c.displacement[ev.direction.axis] += ev.direction.sign;
      if (ev.direction.axis == 0) ++(ev.direction.sign > 0 ? c.right : c.left);
    }
  }
  return c;
}

BlockStats run_block(const ModelParams& params, Rng& rng, const EngineOptions& options) {
  Simulator sim(params, options);
  sim.start(rng);
  while (!sim.regenerated(sim.step(rng))) {
  }
  return sim.cut_block();
}

Trajectory run_trajectory(const ModelParams& params, double horizon, Rng& rng, const EngineOptions& options) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  Simulator sim(params, options);
  sim.start(rng);
  Trajectory out;
  out.horizon = horizon;
  while (sim.next_event_time() <= horizon) sim.step(rng, &out.events);
  out.final_position = sim.position();
  return out;
}

BlockStats run_horizon(const ModelParams& params, double horizon, Rng& rng, const EngineOptions& options) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  Simulator sim(params, options);
  sim.start(rng);
  while (sim.next_event_time() <= horizon) sim.step(rng);
  BlockStats out = sim.cut_block();
  out.tau = horizon;
  return out;
}

std::vector<BlockStats> block_sequence(const ModelParams& params, std::uint64_t n_blocks, std::uint64_t seed,
                                       const EngineOptions& options, const RunControl& control) {
  if (n_blocks < 1) throw std::invalid_argument("block_sequence needs n_blocks >= 1");
  std::vector<BlockStats> out(n_blocks);
  parallel_for_chunks(n_blocks, 4096, control, [&](std::uint64_t begin, std::uint64_t end) {
    Simulator sim(params, options);
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng = Rng::stream(seed, StreamTag::blocks, i);
      sim.start(rng);
      while (!sim.regenerated(sim.step(rng))) {
      }
      out[i] = sim.cut_block();
    }
  });
  return out;
}

std::vector<BlockStats> run_blocks_continuous(const ModelParams& params, std::uint64_t n_blocks, Rng& rng,
                                              const EngineOptions& options) {
  std::vector<BlockStats> out;
  out.reserve(n_blocks);
  Simulator sim(params, options);
  sim.start(rng);
  while (out.size() < n_blocks) {
    if (sim.regenerated(sim.step(rng))) out.push_back(sim.cut_block());
  }
  return out;
}

}  // namespace dynperc
