#ifndef CCGEO_RUNNER_HPP
#define CCGEO_RUNNER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ccgeo/common.hpp"
#include "ccgeo/verify.hpp"

namespace ccgeo {

inline constexpr const char* kVersion = "0.1.0";

/// One experiment invocation: subcommand plus the shared flag set.  Values
/// left at their defaults fall back to per-family or per-subcommand choices;
/// unknown configuration keys are rejected at parse time.
struct ExperimentConfig {
  std::string subcommand;
  std::string family;             // name, inline JSON, or file path
  std::vector<int> tuple;         // 1-based member indices
  std::vector<double> point;      // base point (empty -> family default)
  std::vector<double> target;     // distance target
  std::vector<double> arg;        // h / u / omega argument
  double radius = 0.0;
  double epsilon = 0.0;
  double time = 0.0;
  std::string metric = "cc";
  int samples = 0;
  std::uint64_t seed = 0;
  double enlarge = 3.0;
  std::string out_dir;
  std::string only;

  /// Parses a JSON object; throws ArgumentError on unknown keys.
  static ExperimentConfig from_json_text(const std::string& text);
  /// Applies defaults and validates guard relations for the subcommand.
  void validate() const;
};

struct RunResult {
  int exit_code = 0;            // 0 ok, 1 error, 2 falsified verdict
  std::string report_json;      // canonical serialization (sorted keys)
  std::string csv;              // bulk samples, when the subcommand emits them
};

/// Dispatches to the named subcommand and, when out_dir is set, writes
/// report.json (and data.csv when applicable).  For the suite subcommand
/// on_criterion streams per-criterion results as they finish.
RunResult run(const ExperimentConfig& cfg,
              const std::function<void(const CriterionResult&)>& on_criterion = {});

std::vector<std::string> known_subcommands();

}  // namespace ccgeo

#endif  // CCGEO_RUNNER_HPP
