#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace kslab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  std::vector<std::pair<std::string, double>> metrics;
};

struct SuiteReport {
  std::string suite;
  std::vector<CriterionResult> results;
  double seconds = 0.0;
  bool all_pass() const;
};

/// thm31, thm32, thm33, gradient, conservation, barriers, equilibrium, all.
const std::vector<std::string>& suite_names();
/// Criterion ids of a suite; throws Error(config) for an unknown name.
std::vector<int> suite_criteria(const std::string& suite);

/// Runs the pinned acceptance scenarios of a suite. Runs shared between
/// criteria are computed once per call.
SuiteReport run_suite(const std::string& suite,
                      const std::function<void(const CriterionResult&)>& on_result = {});

/// Same for an explicit list of criterion ids (1..15).
SuiteReport run_criteria(const std::vector<int>& ids,
                         const std::function<void(const CriterionResult&)>& on_result = {});

/// One line per criterion, "PASS"/"FAIL" first.
std::string format_result_line(const CriterionResult& r);

}  // namespace kslab
