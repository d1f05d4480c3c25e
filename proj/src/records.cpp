#include "dynperc/records.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <stdexcept>

namespace dynperc {

#ifndef DYNPERC_VERSION
#define DYNPERC_VERSION "0.0.0"
#endif

std::string_view version() noexcept { return DYNPERC_VERSION; }

nlohmann::json to_json(const ResultRecord& r) {
  nlohmann::json est = nlohmann::json::array();
  for (const auto& ne : r.estimates) {
    const Estimate& e = ne.estimate;
    nlohmann::json j = {{"name", ne.name},
                        {"value", e.value},
                        {"stderr", e.std_error},
                        {"n", e.n},
                        {"method", std::string(to_string(e.method))},
                        {"error_method", e.error_method}};
    if (ne.lambda) j["lambda"] = *ne.lambda;
    if (e.ess) j["ess"] = *e.ess;
    if (!e.warnings.empty()) j["warnings"] = e.warnings;
    est.push_back(std::move(j));
  }
  nlohmann::json j = {{"cmd", r.cmd},
                      {"params", {{"d", r.d}, {"p", r.p}, {"mu", r.mu}, {"lambda", r.lambda}}},
                      {"estimates", est},
                      {"seed", r.seed},
                      {"version", r.version},
                      {"status", r.status},
                      {"config", r.config},
                      {"wall_time", r.wall_time},
                      {"timestamp", r.timestamp}};
  if (!r.error.empty()) j["error"] = r.error;
  if (!r.extra.empty()) j["extra"] = r.extra;
  return j;
}

ResultRecord record_from_json(const nlohmann::json& j) {
  ResultRecord r;
  r.cmd = j.at("cmd").get<std::string>();
  const auto& params = j.at("params");
  r.d = params.at("d").get<int>();
  r.p = params.at("p").get<double>();
  r.mu = params.at("mu").get<double>();
  r.lambda = params.at("lambda").get<double>();
  for (const auto& e : j.at("estimates")) {
    NamedEstimate ne;
    ne.name = e.at("name").get<std::string>();
    ne.estimate.value = e.at("value").get<double>();
    ne.estimate.std_error = e.at("stderr").get<double>();
    ne.estimate.n = e.at("n").get<std::uint64_t>();
    const auto method = method_from_string(e.at("method").get<std::string>());
    if (!method) throw std::invalid_argument("unknown estimate method");
    ne.estimate.method = *method;
    ne.estimate.error_method = e.value("error_method", "delta");
    if (e.contains("lambda")) ne.lambda = e.at("lambda").get<double>();
    if (e.contains("ess")) ne.estimate.ess = e.at("ess").get<double>();
    if (e.contains("warnings")) ne.estimate.warnings = e.at("warnings").get<std::vector<std::string>>();
    r.estimates.push_back(std::move(ne));
  }
  r.seed = j.at("seed").get<std::uint64_t>();
  r.version = j.at("version").get<std::string>();
  r.status = j.value("status", "ok");
  r.error = j.value("error", "");
  r.config = j.value("config", nlohmann::json::object());
  r.extra = j.value("extra", nlohmann::json::object());
  r.wall_time = j.value("wall_time", 0.0);
  r.timestamp = j.value("timestamp", "");
  return r;
}

void check_finite(const ResultRecord& r) {
  auto finite = [](double x, const std::string& what) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite " + what);
  };
  finite(r.p, "p");
  finite(r.mu, "mu");
  finite(r.lambda, "lambda");
  finite(r.wall_time, "wall_time");
  for (const auto& ne : r.estimates) {
    finite(ne.estimate.value, ne.name + " value");
    finite(ne.estimate.std_error, ne.name + " stderr");
  }
}

std::string csv_header() { return "d,p,mu,lambda,v,stderr,n"; }

std::optional<std::string> csv_row(const ResultRecord& r, const std::string& estimate_name) {
  for (const auto& ne : r.estimates) {
    if (ne.name != estimate_name) continue;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%llu", r.d, r.p, r.mu, r.lambda,
                  ne.estimate.value, ne.estimate.std_error, static_cast<unsigned long long>(ne.estimate.n));
    return std::string(buf);
  }
  return std::nullopt;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace dynperc
