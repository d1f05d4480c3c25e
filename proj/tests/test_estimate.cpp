#include <doctest.h>

#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

#include "dynperc/analytic.hpp"
#include "dynperc/estimate.hpp"
#include "test_util.hpp"

using namespace dynperc;

namespace {

// Always-open lattice: every attempt succeeds, so a block is an M/M/inf cycle
// whose attempts are steps of the lazy simple random walk in Z^d.
struct OpenBlock {
  double tau;
  double x;
};

OpenBlock open_lattice_block(int d, double mu, Rng& rng) {
  double t = rng.exponential(1.0);
  std::priority_queue<double, std::vector<double>, std::greater<>> departures;
  double x = 0.0;
  auto attempt = [&] {
    const int dir = static_cast<int>(rng.uniform() * 2 * d);
    if (dir == 0) x += 1.0;
    if (dir == 1) x -= 1.0;
    departures.push(t + rng.exponential(mu));
  };
  attempt();
  double next_arrival = t + rng.exponential(1.0);
  while (!departures.empty()) {
    if (departures.top() <= next_arrival) {
      t = departures.top();
      departures.pop();
    } else {
      t = next_arrival;
      attempt();
      next_arrival = t + rng.exponential(1.0);
    }
  }
  return {t, x};
}

}  // namespace

TEST_CASE("direct speed near the large-bias expansion") {
  const ModelParams params(2, 0.5, 1.0, 6.0);
  const auto est = estimate_speed_direct(block_sequence(params, 100000, 50));
  CHECK(est.method == Method::direct);
  CHECK(est.error_method == "delta");
  CHECK(std::abs(est.value - asymptotic_speed(params)) <= 3.0 * est.std_error + 10.0 * std::exp(-12.0));
}

TEST_CASE("speed approaches the always-open lattice as p -> 1") {
  const ModelParams params(2, 0.999, 1.0, 1.0);
  const auto est = estimate_speed_direct(block_sequence(params, 100000, 51));
  CHECK(std::abs(est.value - speed_static_full_lattice(params)) <= 3.0 * est.std_error + 0.01);
}

TEST_CASE("diffusivity") {
  SUBCASE("p = 0.999 within 10% of an always-open oracle simulation") {
    for (int d : {1, 2}) {
      CAPTURE(d);
      auto r = testutil::rng(60 + d);
      std::vector<double> x(200000), tau(200000);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const auto b = open_lattice_block(d, 1.0, r);
        x[i] = b.x;
        tau[i] = b.tau;
      }
      const double oracle = sample_variance(x) / mean(tau);
      // The open lattice walk has diffusivity 1/d.
      CHECK(oracle == doctest::Approx(1.0 / d).epsilon(0.03));
      const auto est = estimate_sigma2(block_sequence(ModelParams(d, 0.999, 1.0, 0.0), 200000, 62 + d), 7);
      CHECK(est.error_method == "bootstrap");
      CHECK(std::abs(est.value / oracle - 1.0) < 0.1);
    }
  }
  SUBCASE("positive, seeded, and continuous in lambda") {
    const ModelParams params(2, 0.5, 1.0, 0.0);
    const auto blocks = block_sequence(params, 50000, 64);
    const auto a = estimate_sigma2(blocks, 1);
    CHECK(a.value > 0.0);
    CHECK(a.std_error > 0.0);
    CHECK(estimate_sigma2(blocks, 1).std_error == a.std_error);
    const auto b = estimate_sigma2(block_sequence(params.with_lambda(0.01), 50000, 65), 1);
    CHECK(std::abs(a.value - b.value) < 5.0 * combined_error(a, b));
  }
}

TEST_CASE("importance sampling from unbiased blocks") {
  const ModelParams unbiased(2, 0.5, 1.0, 0.0);
  const auto blocks = block_sequence(unbiased, 100000, 70);
  const auto target = unbiased.with_lambda(0.5);

  SUBCASE("weights") {
    for (std::size_t i = 0; i < 1000; ++i) {
      CHECK(importance_weight(blocks[i], target) > 0.0);
      CHECK(importance_weight(blocks[i], unbiased) == 1.0);
    }
    const auto norm = importance_normalization(blocks, target);
    CHECK(norm.contains(1.0));
  }
  SUBCASE("agrees with the direct estimate") {
    const auto is = estimate_speed_importance(blocks, target);
    const auto direct = estimate_speed_direct(block_sequence(target, 100000, 71));
    CHECK(is.method == Method::importance);
    REQUIRE(is.ess.has_value());
    CHECK(*is.ess > 100.0);
    CHECK(is.warnings.empty());
    CHECK(agree(is, direct));
  }
  SUBCASE("warnings far from lambda = 0") {
    const auto is = estimate_speed_importance(blocks, unbiased.with_lambda(2.0));
    CHECK_FALSE(is.warnings.empty());
  }
}

TEST_CASE("derivative formula") {
  SUBCASE("matches the diffusivity at lambda = 0") {
    const ModelParams params(2, 0.5, 1.0, 0.0);
    const auto dv = estimate_derivative_formula(block_sequence(params, 100000, 80), params, 1);
    const auto s2 = estimate_sigma2(block_sequence(params, 100000, 81), 2);
    CHECK(dv.method == Method::derivative_formula);
    CHECK(agree(dv, s2));
  }
  SUBCASE("sign at lambda = 6 follows the regime") {
    const ModelParams inc(2, 0.5, 1.0, 6.0);
    const auto up = estimate_derivative_formula(block_sequence(inc, 400000, 82), inc, 3);
    CHECK(up.value > 3.0 * up.std_error);
    const ModelParams dec(2, 0.5, 0.3, 6.0);
    const auto down = estimate_derivative_formula(block_sequence(dec, 400000, 83), dec, 4);
    CHECK(down.value < -3.0 * down.std_error);
  }
}

TEST_CASE("speed curve from one unbiased histogram") {
  const ModelParams unbiased(2, 0.5, 1.0, 0.0);
  const auto blocks = block_sequence(unbiased, 100000, 90);
  const auto hist = make_histogram(blocks);
  const auto tau = mean_tau(blocks);
  const std::vector<double> lambdas{0.0, 0.5};
  const auto curve = speed_curve_from_unbiased(hist, tau, 2, 0.5, 1.0, lambdas);
  REQUIRE(curve.size() == 2);

  SUBCASE("lambda = 0 has zero speed") { CHECK(curve[0].speed.contains(0.0)); }
  SUBCASE("same number as importance sampling on the same blocks") {
    const auto is = estimate_speed_importance(blocks, unbiased.with_lambda(0.5));
    CHECK(curve[1].speed.value == doctest::Approx(is.value).epsilon(1e-10));
    CHECK(curve[1].speed.std_error > 0.0);
  }
  SUBCASE("derivative at zero matches the diffusivity of independent blocks") {
    const auto s2 = estimate_sigma2(block_sequence(unbiased, 100000, 91), 5);
    CHECK(agree(curve[0].derivative, s2));
  }
  SUBCASE("derivative agrees with the control-variate formula on the same blocks") {
    CHECK(agree(curve[0].derivative, estimate_derivative_formula(blocks, unbiased, 1)));
  }
  SUBCASE("histograms merge losslessly") {
    const std::span<const BlockStats> all(blocks);
    auto left = make_histogram(all.subspan(0, 40000));
    left.merge(make_histogram(all.subspan(40000)));
    CHECK(left.total() == hist.total());
    CHECK(left.counts() == hist.counts());
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(speed_curve_from_unbiased(BlockHistogram{}, tau, 2, 0.5, 1.0, lambdas), std::invalid_argument);
    const std::vector<double> negative{-1.0};
    CHECK_THROWS_AS(speed_curve_from_unbiased(hist, tau, 2, 0.5, 1.0, negative), std::invalid_argument);
  }
}

TEST_CASE("exponential martingale at fixed times") {
  SUBCASE("lambda = 0 is exact") {
    const auto e = check_martingale_identity(ModelParams(2, 0.5, 1.0, 0.0), 5.0, 1000, 1);
    CHECK(e.value == 1.0);
    CHECK(e.std_error == 0.0);
  }
  SUBCASE("one dimension") {
    const auto e = check_martingale_identity(ModelParams(1, 0.5, 1.0, 0.5), 10.0, 100000, 2);
    CHECK(e.warnings.empty());
    CHECK(e.contains(1.0));
  }
  SUBCASE("two dimensions at lambda = 1, t = 20 is flagged as ill-conditioned") {
    const auto e = check_martingale_identity(ModelParams(2, 0.5, 1.0, 1.0), 20.0, 100000, 3);
    REQUIRE(e.ess.has_value());
    CHECK(*e.ess < 1000.0);
    CHECK_FALSE(e.warnings.empty());
  }
}

TEST_CASE("orthogonality of displacement and suppressed jumps") {
  CHECK(check_orthogonality(ModelParams(2, 0.5, 1.0, 0.0), 0.0, 100, 1).value == 0.0);
  CHECK(check_orthogonality(ModelParams(2, 0.5, 1.0, 0.0), 20.0, 100000, 2).contains(0.0));
  CHECK(check_orthogonality(ModelParams(1, 0.3, 0.5, 0.0), 10.0, 100000, 3).contains(0.0));
  CHECK_THROWS_AS(check_orthogonality(ModelParams(1, 0.3, 0.5, 0.1), 10.0, 100, 3), std::invalid_argument);
  CHECK_THROWS_AS(horizon_counts(ModelParams(1, 0.3, 0.5, 0.0), -1.0, 10, 3), std::invalid_argument);
}

TEST_CASE("central limit theorem for block sums") {
  SUBCASE("groups of 200") {
    const auto rep = check_clt(block_sequence(ModelParams(2, 0.5, 1.0, 1.0), 100000, 100));
    CHECK(rep.groups == 500);
    CHECK(rep.ks_p_value > 0.01);
    CHECK(std::abs(rep.skewness) < 3.0 * rep.skewness_error);
  }
  SUBCASE("single blocks are lattice valued") {
    const auto rep = check_clt(block_sequence(ModelParams(1, 0.5, 1.0, 0.0), 2000, 101), 1);
    CHECK(rep.groups == 2000);
    CHECK(rep.standardized.size() == 2000);
    MESSAGE("single-block KS p = " << rep.ks_p_value << ", skewness = " << rep.skewness);
  }
  SUBCASE("too few groups") {
    CHECK_THROWS_AS(check_clt(block_sequence(ModelParams(1, 0.5, 1.0, 0.0), 1000, 102)), std::invalid_argument);
  }
}

TEST_CASE("tail exponents") {
  SUBCASE("exponential samples") {
    auto r = testutil::rng(110);
    std::vector<double> x(100000);
    for (auto& v : x) v = r.exponential(1.0);
    const auto fit = fit_tail_exponent(x, 1);
    CHECK(fit.lower <= -1.0);
    CHECK(-1.0 <= fit.upper);
    CHECK(fit.points >= 3);
  }
  SUBCASE("block durations and attempt counts") {
    const auto b1 = block_sequence(ModelParams(2, 0.5, 1.0, 1.0), 100000, 111);
    const auto b4 = block_sequence(ModelParams(2, 0.5, 4.0, 1.0), 100000, 112);
    const auto tau = fit_tail_exponent(testutil::column(b1, [](const BlockStats& b) { return b.tau; }), 2);
    CHECK(tau.upper < 0.0);
    const auto u1 = fit_tail_exponent(testutil::column(b1, [](const BlockStats& b) { return b.attempts; }), 3);
    const auto u4 = fit_tail_exponent(testutil::column(b4, [](const BlockStats& b) { return b.attempts; }), 4);
    CHECK(u1.upper < 0.0);
    CHECK(u4.slope < u1.slope);
  }
  SUBCASE("needs 1e4 samples") {
    const std::vector<double> few(100, 1.0);
    CHECK_THROWS_AS(fit_tail_exponent(few), std::invalid_argument);
  }
}
