#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace dynperc {

// Lattices up to this dimension are supported; coordinates live inline.
inline constexpr int kMaxDim = 8;

/// Parameters of a lambda-biased walk on dynamical percolation on Z^d.
///
/// d: dimension, p: open probability, mu: refresh rate, lambda: bias along e1.
/// Construction validates 1 <= d <= kMaxDim, 0 < p < 1, mu > 0, lambda >= 0
/// (all finite) and throws std::invalid_argument otherwise.
class ModelParams {
 public:
  ModelParams(int d, double p, double mu, double lambda);

  int d() const noexcept { return d_; }
  double p() const noexcept { return p_; }
  double mu() const noexcept { return mu_; }
  double lambda() const noexcept { return lambda_; }

  ModelParams with_lambda(double lambda) const { return {d_, p_, mu_, lambda}; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  int d_;
  double p_;
  double mu_;
  double lambda_;
};

std::string to_string(const ModelParams& params);

/// Unit step +-e_{axis+1}. Axes are 0-based internally: axis 0 is the bias axis.
struct Direction {
  int axis = 0;
  int sign = +1;

  // Position in the fixed CDF order (+e1, -e1, +e2, -e2, ...).
  int index() const noexcept { return 2 * axis + (sign < 0 ? 1 : 0); }
  static Direction from_index(int index) noexcept { return {index / 2, index % 2 == 0 ? +1 : -1}; }

  friend bool operator==(const Direction&, const Direction&) = default;
};

struct Site {
  // Coordinates beyond the lattice dimension stay zero.
  std::array<std::int32_t, kMaxDim> coords{};

  std::int32_t operator[](int axis) const noexcept { return coords[static_cast<std::size_t>(axis)]; }
  std::int32_t& operator[](int axis) noexcept { return coords[static_cast<std::size_t>(axis)]; }

  Site step(Direction dir) const noexcept {
    Site out = *this;
    out[dir.axis] += dir.sign;
    return out;
  }

  friend bool operator==(const Site&, const Site&) = default;
};

std::int64_t l1_distance(const Site& a, const Site& b) noexcept;

/// Undirected nearest-neighbour edge {base, base + e_axis}, keyed by its lower
/// endpoint along the axis.
struct EdgeId {
  Site base;
  int axis = 0;

  // Edge traversed when stepping from `from` in direction `dir`.
  static EdgeId incident(const Site& from, Direction dir) noexcept {
    EdgeId e{from, dir.axis};
    if (dir.sign < 0) e.base[dir.axis] -= 1;
    return e;
  }

  // Canonical edge between two sites at L1 distance one; throws otherwise.
  static EdgeId between(const Site& a, const Site& b);

  friend bool operator==(const EdgeId&, const EdgeId&) = default;
};

struct EdgeIdHash {
  std::size_t operator()(const EdgeId& e) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(e.axis) * 0x9E3779B97F4A7C15ULL;
    for (auto c : e.base.coords) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c)) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    }
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

/// e^lambda + e^-lambda + 2d - 2.
double z_lambda(const ModelParams& params) noexcept;
double z_lambda(int d, double lambda) noexcept;

/// Attempted-jump probabilities indexed by Direction::index().
std::vector<double> jump_probabilities(const ModelParams& params);

/// Inverse-CDF sampler over the direction order (+e1, -e1, +e2, -e2, ...).
class DirectionSampler {
 public:
  explicit DirectionSampler(const ModelParams& params);

  Direction operator()(double u) const noexcept;

  int dimension() const noexcept { return d_; }
  // Right end of the CDF interval of direction `index`.
  double cumulative(int index) const noexcept { return cdf_[static_cast<std::size_t>(index)]; }

 private:
  int d_;
  std::vector<double> cdf_;
};

Direction sample_direction(const ModelParams& params, double u);

}  // namespace dynperc
