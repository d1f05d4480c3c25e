#pragma once

#include <string_view>

#include "dynperc/model.hpp"

namespace dynperc {

/// Speed of the walk that only attempts +e1 jumps (rate 1) on dynamical
/// percolation: mu p / (1 - p + mu).
double speed_totally_asymmetric_1d(double p, double mu);

/// Large-bias expansion of v(lambda) without its O(e^{-2 lambda}) remainder:
/// mu p/(1-p+mu) - (2d-2) p/(1-p+mu)^2 * (mu^2 - p(1-p)) / Z_lambda.
double asymptotic_speed(const ModelParams& params);

/// Constant C in v'(lambda) ~ C e^{-lambda}: (2d-2) p (mu^2 - p(1-p)) / (1-p+mu)^2.
double derivative_constant(int d, double p, double mu);

enum class Regime { eventually_increasing, eventually_decreasing, critical };

std::string_view to_string(Regime regime);

struct RegimeVerdict {
  double discriminant;  // mu^2 - p(1-p)
  Regime verdict;
};

RegimeVerdict classify_regime(double p, double mu);

/// Colour intensities of the two-bias coupling between lambda and lambda+eps.
struct CouplingRates {
  double good;       // both walks attempt +e1
  double bad;        // both attempt the same non-+e1 direction
  double very_bad;   // walks attempt different directions
  // Part of `very_bad` where the lower walk attempts -e1 (the rest has it
  // attempt a transverse direction).
  double residual;
};

/// Throws std::invalid_argument for eps <= 0 and std::logic_error if the
/// very-bad rate is not positive or the rates do not form a sub-probability.
CouplingRates coupling_rates(const ModelParams& params, double eps);

/// Speed of the walk on the always-open lattice: (e^l - e^-l) / Z_l.
double speed_static_full_lattice(const ModelParams& params);

}  // namespace dynperc
