#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pricelab/parallel.hpp"

namespace pricelab {

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;  // offending values on failure, a short summary otherwise
  double seconds;
};

// Deliberate corruptions used to confirm that the suite can fail.
enum class Fault {
  None,
  NegateCurvatureMin,  // C_down replaced by -C_down
};

struct VerifyOptions {
  bool fast = false;  // reduced grid densities and repetition counts
  Fault fault = Fault::None;
  Execution execution = Execution::Parallel;
};

std::vector<std::string> verification_check_names();

// Runs every check (or only those whose name starts with `filter`).
std::vector<CheckResult> run_verification(const VerifyOptions& options, const std::string& filter = "");

// One "[PASS] name  detail" line per check; returns true when all passed.
bool print_verification(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace pricelab
