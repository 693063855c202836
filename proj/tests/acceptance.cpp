// Runs the acceptance criteria and prints one PASS/FAIL line each.
// Arguments select criterion ids; none runs all fifteen.
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include "kslab/verify.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) ids = kslab::suite_criteria("all");
  try {
    const auto rep = kslab::run_criteria(ids, [](const kslab::CriterionResult& r) {
      std::printf("%s\n", kslab::format_result_line(r).c_str());
      std::fflush(stdout);
    });
    std::size_t passed = 0;
    for (const auto& r : rep.results) passed += r.pass;
    std::printf("%zu/%zu criteria passed in %.2f s\n", passed, rep.results.size(), rep.seconds);
    return rep.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 2;
  }
}
