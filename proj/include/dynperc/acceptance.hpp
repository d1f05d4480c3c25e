#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dynperc/parallel.hpp"

namespace dynperc {

enum class Verdict { pass, fail, inconclusive };

std::string_view to_string(Verdict verdict);

struct CriterionResult {
  int id = 0;
  std::string name;
  Verdict verdict = Verdict::fail;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteOptions {
  std::uint64_t seed = 20260917;
  // Wall-clock budget per criterion; exceeding it gives an inconclusive verdict.
  std::optional<double> budget_seconds;
  int threads = 0;
};

inline constexpr int kCriteria = 11;

std::string_view criterion_name(int id);

/// Criterion ids selected by a suite name: "all", a criterion name such as
/// "identities", or a comma-separated list of ids. Throws
/// std::invalid_argument for unknown names.
std::vector<int> select_criteria(std::string_view suite);

CriterionResult run_criterion(int id, const SuiteOptions& options);

// One line: "PASS  7 identities  <detail>".
std::string format_result(const CriterionResult& result);

}  // namespace dynperc
