#ifndef CCGEO_VERIFY_HPP
#define CCGEO_VERIFY_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ccgeo {

/// One verification criterion of the built-in acceptance matrix.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double measured = 0.0;   // headline figure (worst error, fitted constant, ...)
  std::string details;
  double seconds = 0.0;
};

struct SuiteResult {
  std::vector<CriterionResult> results;
  bool all_pass = false;
};

std::vector<std::pair<int, std::string>> criterion_catalog();

/// Runs a single criterion (1..12) at the stated tolerances.
CriterionResult run_criterion(int id, std::uint64_t seed);

/// Runs the whole matrix, or the criteria whose name contains `only`;
/// on_result streams each criterion as it finishes.
SuiteResult run_suite(std::uint64_t seed, const std::string& only = "",
                      const std::function<void(const CriterionResult&)>& on_result = {});

}  // namespace ccgeo

#endif  // CCGEO_VERIFY_HPP
