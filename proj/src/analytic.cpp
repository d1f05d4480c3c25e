#include "dynperc/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace dynperc {

double speed_totally_asymmetric_1d(double p, double mu) { return mu * p / (1.0 - p + mu); }

double derivative_constant(int d, double p, double mu) {
  const double denom = 1.0 - p + mu;
  return (2.0 * d - 2.0) * p * (mu * mu - p * (1.0 - p)) / (denom * denom);
}

double asymptotic_speed(const ModelParams& params) {
  return speed_totally_asymmetric_1d(params.p(), params.mu()) -
         derivative_constant(params.d(), params.p(), params.mu()) / z_lambda(params);
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::eventually_increasing: return "eventually-increasing";
    case Regime::eventually_decreasing: return "eventually-decreasing";
    case Regime::critical: return "critical";
  }
  return "unknown";
}

RegimeVerdict classify_regime(double p, double mu) {
  if (!(p > 0.0 && p < 1.0) || !(mu > 0.0)) throw std::invalid_argument("classify_regime: invalid p or mu");
  const double disc = mu * mu - p * (1.0 - p);
  const Regime r = disc > 0.0 ? Regime::eventually_increasing
                   : disc < 0.0 ? Regime::eventually_decreasing
                                : Regime::critical;
  return {disc, r};
}

CouplingRates coupling_rates(const ModelParams& params, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("coupling_rates: eps must be > 0");
  const double l = params.lambda();
  const double z = z_lambda(params);
  const double z_eps = z_lambda(params.d(), l + eps);
  const double side = 2.0 * params.d() - 2.0;
  CouplingRates r;
  // e^l/Z_l written as 1/(1 + e^{-2l} + (2d-2)e^{-l}) to stay finite for large l.
  const double right = 1.0 / (1.0 + std::exp(-2.0 * l) + side * std::exp(-l));
  const double right_eps = 1.0 / (1.0 + std::exp(-2.0 * (l + eps)) + side * std::exp(-(l + eps)));
  r.good = right;
  r.bad = (side + std::exp(-l - eps)) / z_eps;
  r.very_bad = right_eps - right;
  r.residual = 1.0 - right - side / z - std::exp(-l - eps) / z_eps;
  if (!(r.very_bad > 0.0)) throw std::logic_error("coupling_rates: very-bad rate is not positive");
  if (r.good + r.bad + r.very_bad > 1.0 + 1e-12) throw std::logic_error("coupling_rates: rates exceed one");
  return r;
}

double speed_static_full_lattice(const ModelParams& params) {
  const double l = params.lambda();
  return -std::expm1(-2.0 * l) / (1.0 + std::exp(-2.0 * l) + (2.0 * params.d() - 2.0) * std::exp(-l));
}

}  // namespace dynperc
