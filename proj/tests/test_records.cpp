#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dynperc/records.hpp"
#include "test_util.hpp"

using namespace dynperc;

namespace {

// Random record with awkward doubles (tiny, huge, non-terminating binary).
ResultRecord random_record(Rng& r) {
  ResultRecord rec;
  rec.cmd = "simulate";
  rec.d = 1 + static_cast<int>(r.uniform() * 3);
  rec.p = r.uniform();
  rec.mu = std::exp(10.0 * (r.uniform() - 0.5));
  rec.lambda = 0.1 * static_cast<int>(r.uniform() * 100);
  rec.seed = r();
  rec.version = std::string(version());
  rec.wall_time = r.uniform();
  rec.timestamp = utc_timestamp();
  rec.config = {{"blocks", 100000}, {"seed", rec.seed}};
  const int k = 1 + static_cast<int>(r.uniform() * 4);
  for (int i = 0; i < k; ++i) {
    NamedEstimate ne;
    ne.name = i == 0 ? "v" : "e" + std::to_string(i);
    ne.estimate.value = (r.uniform() - 0.5) * std::pow(10.0, 20.0 * (r.uniform() - 0.5));
    ne.estimate.std_error = r.uniform() * 1e-3;
    ne.estimate.n = r() >> 20;
    ne.estimate.method = static_cast<Method>(static_cast<int>(r.uniform() * 5));
    ne.estimate.error_method = r.uniform() < 0.5 ? "delta" : "bootstrap";
    if (r.uniform() < 0.5) ne.estimate.ess = r.uniform() * 1e5;
    if (r.uniform() < 0.3) ne.estimate.warnings = {"effective sample size below 100"};
    if (r.uniform() < 0.3) ne.lambda = r.uniform();
    rec.estimates.push_back(ne);
  }
  return rec;
}

void check_same(const ResultRecord& a, const ResultRecord& b) {
  CHECK(a.cmd == b.cmd);
  CHECK(a.d == b.d);
  CHECK(a.p == b.p);
  CHECK(a.mu == b.mu);
  CHECK(a.lambda == b.lambda);
  CHECK(a.seed == b.seed);
  CHECK(a.version == b.version);
  CHECK(a.status == b.status);
  CHECK(a.config == b.config);
  CHECK(a.wall_time == b.wall_time);
  CHECK(a.timestamp == b.timestamp);
  REQUIRE(a.estimates.size() == b.estimates.size());
  for (std::size_t i = 0; i < a.estimates.size(); ++i) {
    const auto& x = a.estimates[i];
    const auto& y = b.estimates[i];
    CHECK(x.name == y.name);
    CHECK(x.lambda == y.lambda);
    CHECK(x.estimate.value == y.estimate.value);
    CHECK(x.estimate.std_error == y.estimate.std_error);
    CHECK(x.estimate.n == y.estimate.n);
    CHECK(x.estimate.method == y.estimate.method);
    CHECK(x.estimate.error_method == y.estimate.error_method);
    CHECK(x.estimate.ess == y.estimate.ess);
    CHECK(x.estimate.warnings == y.estimate.warnings);
  }
}

}  // namespace

TEST_CASE("records round-trip through their serialized form") {
  auto r = testutil::rng(300);
  for (int k = 0; k < 200; ++k) {
    const auto rec = random_record(r);
    const std::string line = to_json(rec).dump();
    CHECK(line.find('\n') == std::string::npos);
    check_same(rec, record_from_json(nlohmann::json::parse(line)));
  }
}

TEST_CASE("stable field names") {
  auto r = testutil::rng(301);
  const auto j = to_json(random_record(r));
  for (const char* key : {"cmd", "params", "estimates", "seed", "version"}) CHECK(j.contains(key));
  for (const char* key : {"d", "p", "mu", "lambda"}) CHECK(j["params"].contains(key));
  for (const char* key : {"name", "value", "stderr", "n", "method"}) CHECK(j["estimates"][0].contains(key));
}

TEST_CASE("CSV carries the same numbers as JSON") {
  auto r = testutil::rng(302);
  CHECK(csv_header() == "d,p,mu,lambda,v,stderr,n");
  for (int k = 0; k < 200; ++k) {
    const auto rec = random_record(r);
    const auto row = csv_row(rec);
    REQUIRE(row.has_value());
    const auto j = to_json(rec);
    std::stringstream ss(*row);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 7);
    CHECK(std::stoi(cells[0]) == j["params"]["d"].get<int>());
    CHECK(std::strtod(cells[1].c_str(), nullptr) == j["params"]["p"].get<double>());
    CHECK(std::strtod(cells[2].c_str(), nullptr) == j["params"]["mu"].get<double>());
    CHECK(std::strtod(cells[3].c_str(), nullptr) == j["params"]["lambda"].get<double>());
    CHECK(std::strtod(cells[4].c_str(), nullptr) == j["estimates"][0]["value"].get<double>());
    CHECK(std::strtod(cells[5].c_str(), nullptr) == j["estimates"][0]["stderr"].get<double>());
    CHECK(std::stoull(cells[6]) == j["estimates"][0]["n"].get<std::uint64_t>());
  }
  ResultRecord empty;
  CHECK_FALSE(csv_row(empty).has_value());
}

TEST_CASE("non-finite values are rejected") {
  auto r = testutil::rng(303);
  auto rec = random_record(r);
  CHECK_NOTHROW(check_finite(rec));
  rec.estimates[0].estimate.std_error = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(check_finite(rec), std::invalid_argument);
  rec = random_record(r);
  rec.mu = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(check_finite(rec), std::invalid_argument);
}
