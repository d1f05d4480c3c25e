#include "dynperc/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dynperc {

ModelParams::ModelParams(int d, double p, double mu, double lambda) : d_(d), p_(p), mu_(mu), lambda_(lambda) {
  if (d < 1 || d > kMaxDim) {
    throw std::invalid_argument("dimension must be in [1, " + std::to_string(kMaxDim) + "], got " + std::to_string(d));
  }
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0,1)");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be positive and finite");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
}

std::string to_string(const ModelParams& params) {
  std::ostringstream os;
  os << "d=" << params.d() << " p=" << params.p() << " mu=" << params.mu() << " lambda=" << params.lambda();
  return os.str();
}

std::int64_t l1_distance(const Site& a, const Site& b) noexcept {
  std::int64_t dist = 0;
  for (std::size_t i = 0; i < a.coords.size(); ++i) {
    dist += std::abs(static_cast<std::int64_t>(a.coords[i]) - b.coords[i]);
  }
  return dist;
}

EdgeId EdgeId::between(const Site& a, const Site& b) {
  if (l1_distance(a, b) != 1) throw std::invalid_argument("sites are not nearest neighbours");
  for (int axis = 0; axis < kMaxDim; ++axis) {
    if (a[axis] != b[axis]) return EdgeId{a[axis] < b[axis] ? a : b, axis};
  }
  throw std::logic_error("unreachable");
}

double z_lambda(int d, double lambda) noexcept {
  return std::exp(lambda) + std::exp(-lambda) + 2.0 * d - 2.0;
}

double z_lambda(const ModelParams& params) noexcept { return z_lambda(params.d(), params.lambda()); }

namespace {

// (+e1, -e1, each other direction) masses, written relative to e^lambda so
// that large biases do not overflow.
struct Masses {
  double right;
  double left;
  double side;
};

Masses masses(const ModelParams& params) {
  const double em = std::exp(-params.lambda());
  const double right = 1.0 / (1.0 + em * em + (2.0 * params.d() - 2.0) * em);
  return {right, em * em * right, em * right};
}

}  // namespace

std::vector<double> jump_probabilities(const ModelParams& params) {
  const auto m = masses(params);
  std::vector<double> probs(static_cast<std::size_t>(2 * params.d()), m.side);
  probs[0] = m.right;
  probs[1] = m.left;
  return probs;
}

DirectionSampler::DirectionSampler(const ModelParams& params) : d_(params.d()) {
  const auto probs = jump_probabilities(params);
  cdf_.resize(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
}

Direction DirectionSampler::operator()(double u) const noexcept {
  const int n = static_cast<int>(cdf_.size());
  for (int i = 0; i < n - 1; ++i) {
    if (u < cdf_[static_cast<std::size_t>(i)]) return Direction::from_index(i);
  }
  return Direction::from_index(n - 1);
}

Direction sample_direction(const ModelParams& params, double u) { return DirectionSampler(params)(u); }

}  // namespace dynperc
