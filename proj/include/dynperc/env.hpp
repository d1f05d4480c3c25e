#pragma once

#include <cstddef>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dynperc/model.hpp"
#include "dynperc/rng.hpp"

namespace dynperc {

struct EdgeRecord {
  bool open = false;
  double determined_at = 0.0;
  // Copy 1 of this edge is in the infected set: free refreshes are suppressed.
  bool managed = false;
  // Time of a copy-1 removal not yet folded into `open`.
  std::optional<double> pending_forced_refresh_at;
};

// The two uniforms one examination may consume: `keep` decides whether a free
// refresh happened since the last observation, `state` is the Bernoulli(p)
// draw used when the state is resampled.
struct EnvDraws {
  double keep = 0.0;
  double state = 0.0;

  static EnvDraws draw(Rng& rng) noexcept {
    const double keep = rng.uniform();
    return {keep, rng.uniform()};
  }
};

/// Lazily determined dynamical-percolation environment.
///
/// Only edges the walker has examined are stored. The state of an unmanaged
/// edge between observations is resolved at the next examination from the
/// memoryless refresh clock; edges whose copy 1 is infected keep their state
/// until the matching removal forces a refresh. Misuse (time running
/// backwards, double management, removing an unmanaged edge) throws
/// std::logic_error.
class EnvStore {
 public:
  struct Observation {
    bool open;
    std::size_t slot;
  };

  EnvStore(double p, double mu);

  Observation examine(const EdgeId& edge, double t, EnvDraws draws);
  Observation examine(const EdgeId& edge, double t, Rng& rng) { return examine(edge, t, EnvDraws::draw(rng)); }

  void mark_managed(std::size_t slot);
  void mark_managed(const EdgeId& edge);
  void apply_forced_refresh(std::size_t slot, double r);
  void apply_forced_refresh(const EdgeId& edge, double r);

  void reset();

  std::optional<std::size_t> find(const EdgeId& edge) const;
  const EdgeRecord& record(std::size_t slot) const { return records_.at(slot); }
  const EdgeId& edge(std::size_t slot) const { return edges_.at(slot); }
  std::size_t size() const noexcept { return records_.size(); }
  double clock() const noexcept { return clock_; }
  double p() const noexcept { return p_; }
  double mu() const noexcept { return mu_; }

 private:
  std::size_t slot_or_throw(const EdgeId& edge) const;
  void advance_clock(double t);

  double p_;
  double mu_;
  double clock_ = 0.0;
  std::vector<EdgeRecord> records_;
  std::vector<EdgeId> edges_;
  std::unordered_map<EdgeId, std::size_t, EdgeIdHash> index_;
};

}  // namespace dynperc
