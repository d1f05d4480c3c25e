#include "dynperc/env.hpp"

#include <cmath>
#include <stdexcept>

namespace dynperc {

EnvStore::EnvStore(double p, double mu) : p_(p), mu_(mu) {
  if (!(p > 0.0 && p < 1.0) || !(mu > 0.0)) throw std::invalid_argument("EnvStore: invalid p or mu");
  index_.reserve(64);
}

void EnvStore::advance_clock(double t) {
  if (t < clock_) throw std::logic_error("EnvStore: time regression");
  clock_ = t;
}

EnvStore::Observation EnvStore::examine(const EdgeId& edge, double t, EnvDraws draws) {
  advance_clock(t);
  const auto [it, inserted] = index_.try_emplace(edge, records_.size());
  if (inserted) {
    // Never observed: stationary Bernoulli(p).
    records_.push_back(EdgeRecord{draws.state < p_, t, false, std::nullopt});
    edges_.push_back(edge);
    return {records_.back().open, it->second};
  }
  const std::size_t slot = it->second;
  EdgeRecord& rec = records_[slot];
  if (t < rec.determined_at) throw std::logic_error("EnvStore: examination before last determination");
  if (rec.managed) return {rec.open, slot};
  if (rec.pending_forced_refresh_at) {
    rec.open = draws.state < p_;
    rec.pending_forced_refresh_at.reset();
  } else if (draws.keep >= std::exp(-mu_ * (t - rec.determined_at))) {
    rec.open = draws.state < p_;
  }
  rec.determined_at = t;
  return {rec.open, slot};
}

void EnvStore::mark_managed(std::size_t slot) {
  EdgeRecord& rec = records_.at(slot);
  if (rec.managed) throw std::logic_error("EnvStore: edge already managed");
  if (rec.pending_forced_refresh_at) throw std::logic_error("EnvStore: managing an edge with an unresolved refresh");
  rec.managed = true;
}

void EnvStore::apply_forced_refresh(std::size_t slot, double r) {
  EdgeRecord& rec = records_.at(slot);
  if (!rec.managed) throw std::logic_error("EnvStore: forced refresh of an unmanaged edge");
  if (r < rec.determined_at) throw std::logic_error("EnvStore: refresh before last determination");
  advance_clock(r);
  rec.managed = false;
  rec.pending_forced_refresh_at = r;
}

std::optional<std::size_t> EnvStore::find(const EdgeId& edge) const {
  const auto it = index_.find(edge);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EnvStore::slot_or_throw(const EdgeId& edge) const {
  const auto slot = find(edge);
  if (!slot) throw std::logic_error("EnvStore: unknown edge");
  return *slot;
}

void EnvStore::mark_managed(const EdgeId& edge) { mark_managed(slot_or_throw(edge)); }

void EnvStore::apply_forced_refresh(const EdgeId& edge, double r) { apply_forced_refresh(slot_or_throw(edge), r); }

void EnvStore::reset() {
  records_.clear();
  edges_.clear();
  index_.clear();
  clock_ = 0.0;
}

}  // namespace dynperc
