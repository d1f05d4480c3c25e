#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dynperc/analytic.hpp"
#include "dynperc/couple.hpp"
#include "test_util.hpp"

using namespace dynperc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> lo_column(const std::vector<CoupledBlock>& blocks, bool tau) {
  std::vector<double> out(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) out[i] = tau ? blocks[i].tau : static_cast<double>(blocks[i].disp_lo);
  return out;
}

std::vector<double> hi_disp(const std::vector<CoupledBlock>& blocks) {
  std::vector<double> out(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) out[i] = static_cast<double>(blocks[i].disp_hi);
  return out;
}

}  // namespace

TEST_CASE("coupling thresholds") {
  SUBCASE("lower leg agrees with the direction sampler at 1 - U") {
    auto r = testutil::rng(200);
    for (int d = 1; d <= 3; ++d) {
      for (double l : {0.0, 0.7, 3.0}) {
        const ModelParams params(d, 0.5, 1.0, l);
        const CouplingThresholds th(d, l, l + 0.3);
        for (int k = 0; k < 20000; ++k) {
          const double u = r.uniform();
          const Direction lo = th(u).lo;
          const Direction ref = sample_direction(params, 1.0 - u);
          // Same e1 class: +e1, -e1 or transverse.
          REQUIRE((lo.axis == 0 ? lo.sign : 0) == (ref.axis == 0 ? ref.sign : 0));
        }
      }
    }
  }
  SUBCASE("each leg has exactly its own jump law") {
    auto r = testutil::rng(201);
    for (int d : {1, 2, 3}) {
      for (double hi : {1.3, 4.0, kInf}) {
        const double lo = 1.0;
        CAPTURE(d);
        CAPTURE(hi);
        const CouplingThresholds th(d, lo, hi);
        std::vector<std::uint64_t> n_lo(2 * d, 0), n_hi(2 * d, 0);
        for (int k = 0; k < 1'000'000; ++k) {
          const auto dec = th(r.uniform());
          ++n_lo[dec.lo.index()];
          ++n_hi[dec.hi.index()];
        }
        CHECK(chi_square_test(n_lo, jump_probabilities(ModelParams(d, 0.5, 1.0, lo))).p_value > 0.001);
        if (std::isfinite(hi)) {
          CHECK(chi_square_test(n_hi, jump_probabilities(ModelParams(d, 0.5, 1.0, hi))).p_value > 0.001);
        } else {
          CHECK(n_hi[0] == 1'000'000);
        }
      }
    }
  }
  SUBCASE("one dimension has no transverse regions") {
    const CouplingThresholds th(1, 0.5, 0.6);
    CHECK(th.c1() == 0.0);
    CHECK(th.c2() == 0.0);
    auto r = testutil::rng(202);
    for (int k = 0; k < 10000; ++k) CHECK(th(r.uniform()).region >= 3);
  }
  SUBCASE("region widths are the colour rates") {
    for (int d = 1; d <= 3; ++d) {
      for (double l : {0.0, 1.0, 5.0}) {
        const ModelParams params(d, 0.5, 1.0, l);
        const double eps = 0.05;
        const CouplingThresholds th(d, l, l + eps);
        const auto q = coupling_rates(params, eps);
        CHECK(1.0 - th.c4() == doctest::Approx(q.good).epsilon(1e-12));
        CHECK(th.c1() + th.c3() - th.c2() == doctest::Approx(q.bad).epsilon(1e-12));
        CHECK(th.c4() - th.c3() == doctest::Approx(q.residual).epsilon(1e-9));
        CHECK((th.c2() - th.c1()) + (th.c4() - th.c3()) == doctest::Approx(q.very_bad).epsilon(1e-9));
      }
    }
  }
  SUBCASE("colour frequencies") {
    const ModelParams params(2, 0.5, 1.0, 1.0);
    const double eps = 0.05;
    const CouplingThresholds th(2, 1.0, 1.0 + eps);
    const auto q = coupling_rates(params, eps);
    std::vector<std::uint64_t> cells(4, 0);
    auto r = testutil::rng(203);
    for (int k = 0; k < 1'000'000; ++k) {
      const int region = th(r.uniform()).region;
      ++cells[region == 5 ? 0 : (region == 1 || region == 3) ? 1 : region == 2 ? 2 : 3];
    }
    const std::vector<double> probs{q.good, q.bad, q.very_bad - q.residual, q.residual};
    CHECK(chi_square_test(cells, probs).p_value > 0.001);
  }
  SUBCASE("colours and rejections") {
    CHECK(CouplingThresholds::color(5) == PointColor::good);
    CHECK(CouplingThresholds::color(1) == PointColor::bad);
    CHECK(CouplingThresholds::color(3) == PointColor::bad);
    CHECK(CouplingThresholds::color(2) == PointColor::very_bad);
    CHECK(CouplingThresholds::color(4) == PointColor::very_bad);
    CHECK_THROWS_AS(CouplingThresholds(2, 1.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("coupled blocks") {
  const ModelParams params(2, 0.5, 1.0, 1.0);
  const double eps = 0.05;
  const auto blocks = coupled_block_sequence(params, 1.0 + eps, 100000, 210);

  SUBCASE("legs coincide until the first very-bad point") {
    for (const auto& b : blocks) {
      if (!b.first_very_bad_index) {
        REQUIRE(b.disp_lo == b.disp_hi);
        REQUIRE(b.lo.displacement == b.hi.displacement);
      } else {
        REQUIRE(*b.first_very_bad_index < b.u_a);
        REQUIRE((b.first_very_bad_region == 2 || b.first_very_bad_region == 4));
      }
      REQUIRE(b.lo.attempts == b.u_a);
      REQUIRE(b.hi.attempts == b.u_a);
      REQUIRE(b.lo.tau == b.tau);
    }
  }
  SUBCASE("very-bad fraction matches the plug-in value from the attempt counts") {
    const double q = coupling_rates(params, eps).very_bad;
    std::vector<double> z(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const double hit = blocks[i].first_very_bad_index ? 1.0 : 0.0;
      z[i] = hit - (1.0 - std::pow(1.0 - q, static_cast<double>(blocks[i].u_a)));
    }
    CHECK(mean_estimate(z, Method::identity).contains(0.0));
  }
  SUBCASE("each leg alone is an exact walk") {
    const auto lo_ref = block_sequence(params, 100000, 211);
    const auto hi_ref = block_sequence(params.with_lambda(1.0 + eps), 100000, 212);
    const auto tau_ref = testutil::column(lo_ref, [](const BlockStats& b) { return b.tau; });
    CHECK(ks_test_two_sample(lo_column(blocks, true), tau_ref).p_value > 0.01);
    CHECK(ks_test_two_sample(lo_column(blocks, false), testutil::column(lo_ref, [](const BlockStats& b) {
                               return b.x1();
                             })).p_value > 0.01);
    CHECK(ks_test_two_sample(hi_disp(blocks), testutil::column(hi_ref, [](const BlockStats& b) {
                               return b.x1();
                             })).p_value > 0.01);
  }
  SUBCASE("reproducible across thread counts") {
    RunControl one, three;
    one.threads = 1;
    three.threads = 3;
    const auto a = coupled_block_sequence(params, 1.0 + eps, 9000, 213, StreamTag::coupled, {}, one);
    const auto b = coupled_block_sequence(params, 1.0 + eps, 9000, 213, StreamTag::coupled, {}, three);
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].lo == b[i].lo && a[i].hi == b[i].hi;
    CHECK(same);
  }
}

TEST_CASE("coupled derivative agrees with the derivative formula") {
  const ModelParams params(2, 0.5, 1.0, 1.0);
  const auto coupled = estimate_derivative_coupled(params, 0.05, 200000, 220);
  const auto formula = estimate_derivative_formula(block_sequence(params, 200000, 221), params, 1);
  CHECK(coupled.method == Method::coupled_fd);
  CHECK(agree(coupled, formula));
  CHECK_THROWS_AS(estimate_derivative_coupled(params, 0.0, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(estimate_derivative_coupled(params, 0.2, 10, 1), std::invalid_argument);
}

TEST_CASE("anchored speed agrees with the direct estimate") {
  for (double l : {1.0, 3.0}) {
    const ModelParams params(2, 0.5, 1.0, l);
    CAPTURE(l);
    const auto anchored = estimate_speed_anchored(params, 100000, 230);
    const auto direct = estimate_speed_direct(block_sequence(params, 100000, 231));
    CHECK(agree(anchored, direct));
  }
}

TEST_CASE("monotone coupling in one dimension") {
  auto r = testutil::rng(240);
  CHECK_THROWS_AS(run_monotone_pair_1d(0.5, 1.0, 1.0, 1.0, r), std::invalid_argument);
  CHECK_THROWS_AS(run_monotone_pair_1d(0.5, 1.0, 0.0, 1.0, r), std::invalid_argument);
  CHECK_THROWS_AS(run_monotone_pair_1d(0.5, 1.0, 0.5, kInf, r), std::invalid_argument);

  const auto s = monotone_pairs_1d(0.5, 1.0, 0.5, 1.0, 200000, 241);
  CHECK(s.ordered == s.blocks);
  CHECK(s.mean_gap.value > 3.0 * s.mean_gap.std_error);
  const double ahead = static_cast<double>(s.strictly_ahead) / static_cast<double>(s.blocks);
  CHECK(ahead >= monotone_separation_bound(1.0, 0.5, 1.0));
  CHECK(monotone_separation_bound(1.0, 0.5, 1.0) ==
        doctest::Approx((std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0)) -
                         std::exp(0.5) / (std::exp(0.5) + std::exp(-0.5))) *
                        0.25));

  SUBCASE("each walk has its own speed") {
    std::vector<double> x1(100000), x2(100000), tau(100000);
    for (std::size_t i = 0; i < tau.size(); ++i) {
      auto ri = testutil::rng(10000 + i);
      const auto pr = run_monotone_pair_1d(0.5, 1.0, 0.5, 1.0, ri);
      x1[i] = static_cast<double>(pr.disp1);
      x2[i] = static_cast<double>(pr.disp2);
      tau[i] = pr.tau;
    }
    const auto v1 = ratio_estimate(x1, tau, Method::direct);
    const auto v2 = ratio_estimate(x2, tau, Method::direct);
    CHECK(agree(v1, estimate_speed_direct(block_sequence(ModelParams(1, 0.5, 1.0, 0.5), 100000, 242))));
    CHECK(agree(v2, estimate_speed_direct(block_sequence(ModelParams(1, 0.5, 1.0, 1.0), 100000, 243))));
  }
}
