#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynperc/stats.hpp"

namespace dynperc {

std::string_view version() noexcept;

struct NamedEstimate {
  std::string name;
  Estimate estimate;
  std::optional<double> lambda;  // set for curve points
};

/// One output record. `params` holds d, p, mu, lambda of the run.
struct ResultRecord {
  std::string cmd;
  int d = 1;
  double p = 0.5;
  double mu = 1.0;
  double lambda = 0.0;
  std::vector<NamedEstimate> estimates;
  std::uint64_t seed = 0;
  std::string version;
  std::string status = "ok";
  std::string error;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();
  double wall_time = 0.0;
  std::string timestamp;
};

nlohmann::json to_json(const ResultRecord& record);
ResultRecord record_from_json(const nlohmann::json& j);

// Throws std::invalid_argument when a numeric field is not finite.
void check_finite(const ResultRecord& record);

/// CSV companion: columns d,p,mu,lambda,v,stderr,n with %.17g numbers.
/// `v` is the estimate named `estimate_name`; records without it are skipped.
std::string csv_header();
std::optional<std::string> csv_row(const ResultRecord& record, const std::string& estimate_name = "v");

std::string utc_timestamp();

}  // namespace dynperc
