#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dynperc/stats.hpp"
#include "test_util.hpp"

using namespace dynperc;

TEST_CASE("method names round-trip") {
  for (Method m : {Method::direct, Method::importance, Method::derivative_formula, Method::coupled_fd,
                   Method::identity}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
  CHECK(to_string(Method::coupled_fd) == "coupled-fd");
  CHECK_FALSE(method_from_string("bogus").has_value());
}

TEST_CASE("estimate helpers") {
  Estimate a{1.0, 0.1};
  Estimate b{1.5, 0.2};
  CHECK(a.significant());
  CHECK_FALSE(Estimate{0.2, 0.1}.significant());
  CHECK(a.contains(1.3));
  CHECK_FALSE(a.contains(1.31));
  CHECK(combined_error(a, b) == doctest::Approx(std::sqrt(0.05)));
  CHECK(agree(a, b));
  CHECK_FALSE(agree(a, Estimate{2.0, 0.1}));
}

TEST_CASE("compensated summation") {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1.0);

  CompensatedSum t;
  for (int i = 0; i < 10'000'000; ++i) t.add(0.1);
  CHECK(std::abs(t.value() - 1e6) < 1e-8);

  CompensatedSum u, v;
  u.add(1e16);
  v.add(1.0);
  v.add(-1e16);
  u.merge(v);
  CHECK(u.value() == 1.0);
}

TEST_CASE("sample moments") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(mean(x) == 2.5);
  CHECK(sample_variance(x) == doctest::Approx(5.0 / 3.0));
  CHECK(sample_skewness(x) == doctest::Approx(0.0));
  CHECK(sample_kurtosis(x) == doctest::Approx(-1.36));
  const std::vector<double> skewed{0, 0, 0, 1};
  CHECK(sample_skewness(skewed) == doctest::Approx(2.0 / std::sqrt(3.0)));
  CHECK_THROWS_AS(mean(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(sample_variance(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("standard errors") {
  auto r = testutil::rng(40);
  SUBCASE("mean interval coverage") {
    int misses = 0;
    for (int k = 0; k < 400; ++k) {
      std::vector<double> x(500);
      for (auto& v : x) v = r.exponential(2.0);
      misses += !mean_estimate(x, Method::direct).contains(0.5);
    }
    // Expected about 1.1 misses at 3 standard errors.
    CHECK(misses <= 6);
  }
  SUBCASE("delta method against the bootstrap") {
    std::vector<double> a(20000), b(20000);
    for (std::size_t i = 0; i < a.size(); ++i) {
      b[i] = r.exponential(1.0);
      a[i] = 0.3 * b[i] + r.uniform() - 0.5;
    }
    const auto est = ratio_estimate(a, b, Method::direct);
    CHECK(est.contains(0.3));
    CHECK(est.error_method == "delta");
    const double boot = bootstrap_error(a.size(), 200, 5, [&](std::span<const std::uint32_t> idx) {
      double sa = 0, sb = 0;
      for (auto i : idx) {
        sa += a[i];
        sb += b[i];
      }
      return sa / sb;
    });
    CHECK(boot == doctest::Approx(est.std_error).epsilon(0.2));
  }
  SUBCASE("bootstrap of a mean") {
    std::vector<double> x(5000);
    for (auto& v : x) v = r.uniform();
    const auto est = mean_estimate(x, Method::direct);
    const auto stat = [&](std::span<const std::uint32_t> idx) {
      double s = 0;
      for (auto i : idx) s += x[i];
      return s / static_cast<double>(idx.size());
    };
    const double boot = bootstrap_error(x.size(), 200, 6, stat);
    CHECK(boot == doctest::Approx(est.std_error).epsilon(0.2));
    CHECK(bootstrap_error(x.size(), 200, 6, stat) == boot);
  }
  SUBCASE("errors") {
    const std::vector<double> a{1, 2, 3}, b{1, 2};
    CHECK_THROWS_AS(ratio_estimate(a, b, Method::direct), std::invalid_argument);
    CHECK_THROWS_AS(ratio_estimate(a, std::vector<double>{1, -1, 0}, Method::direct), std::invalid_argument);
    CHECK_THROWS_AS(bootstrap_error(10, 1, 0, [](auto) { return 0.0; }), std::invalid_argument);
  }
}

TEST_CASE("distribution tails") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(kolmogorov_tail(1.0) == doctest::Approx(0.2699996716773546).epsilon(1e-10));
  CHECK(kolmogorov_tail(1.3580986393225505) == doctest::Approx(0.05).epsilon(1e-8));
  CHECK(kolmogorov_tail(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
  CHECK(kolmogorov_tail(0.0) == 1.0);
  // The two series meet where the implementation switches.
  CHECK(kolmogorov_tail(0.3 - 1e-12) == doctest::Approx(kolmogorov_tail(0.3)).epsilon(1e-9));
  CHECK(chi_square_tail(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-10));
  for (double x : {0.5, 2.0, 10.0}) CHECK(chi_square_tail(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
  CHECK_THROWS_AS(chi_square_tail(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("kolmogorov-smirnov tests") {
  auto r = testutil::rng(41);
  const auto uniform_cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
  SUBCASE("p-values are uniform under the null") {
    int below = 0;
    for (int k = 0; k < 400; ++k) {
      std::vector<double> x(300);
      for (auto& v : x) v = r.uniform();
      below += ks_test(x, uniform_cdf).p_value < 0.05;
    }
    CHECK(std::abs(testutil::binomial_z(below, 400, 0.05)) < 3.0);
  }
  SUBCASE("power against a shifted law") {
    std::vector<double> x(2000);
    for (auto& v : x) v = std::sqrt(r.uniform());
    CHECK(ks_test(x, uniform_cdf).p_value < 1e-6);
  }
  SUBCASE("two samples with ties") {
    std::vector<double> a(3000), b(3000);
    for (auto& v : a) v = std::floor(r.uniform() * 5);
    for (auto& v : b) v = std::floor(r.uniform() * 5);
    CHECK(ks_test_two_sample(a, b).p_value > 0.001);
    const auto same = ks_test_two_sample(a, a);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);
    for (auto& v : b) v += 1.0;
    CHECK(ks_test_two_sample(a, b).statistic == doctest::Approx(0.2).epsilon(0.2));
  }
}

TEST_CASE("chi-square goodness of fit") {
  const std::vector<std::uint64_t> exact{25, 25, 50};
  const std::vector<double> probs{0.25, 0.25, 0.5};
  const auto fit = chi_square_test(exact, probs);
  CHECK(fit.statistic == 0.0);
  CHECK(fit.dof == 2.0);
  CHECK(fit.p_value == 1.0);
  const std::vector<std::uint64_t> off{40, 10, 50};
  CHECK(chi_square_test(off, probs).statistic == doctest::Approx(18.0));
  const std::vector<std::uint64_t> impossible{1, 50, 49};
  const std::vector<double> zero_first{0.0, 0.5, 0.5};
  CHECK(chi_square_test(impossible, zero_first).p_value == 0.0);
  CHECK_THROWS_AS(chi_square_test(exact, std::span<const double>(zero_first).subspan(0, 2)), std::invalid_argument);
}
