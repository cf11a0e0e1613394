#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace asep::acceptance {

/// fast: the acceptance scale; full: adds larger Monte Carlo samples and window re-checks.
enum class Suite { fast, full };
Suite parse_suite(const std::string& name);
const char* to_string(Suite suite);

/// One comparison. upper: passes when observed <= bound; otherwise when observed >= bound.
struct Check {
  std::string name;
  double observed = 0.0;
  double bound = 0.0;
  bool upper = true;
  bool passed = false;
  bool gating = true;
  std::string detail;

  nlohmann::json to_json() const;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double observed = 0.0;  // observed value of the check closest to (or furthest past) its bound
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
  std::vector<Check> checks;

  nlohmann::json to_json() const;
  /// One line: PASS/FAIL, id, name, observed against tolerance.
  std::string summary_line() const;
};

struct Report {
  Suite suite = Suite::fast;
  std::vector<CriterionResult> criteria;
  double seconds = 0.0;

  bool all_passed() const;
  nlohmann::json to_json() const;
};

inline constexpr int kCriteria = 12;
const char* criterion_name(int id);

/// Runs the selected criteria (all when `only` is empty) in order, writing each
/// summary line to `progress` when given.
Report run(Suite suite, const std::vector<int>& only = {}, std::ostream* progress = nullptr);

}  // namespace asep::acceptance
