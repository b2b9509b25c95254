#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pricelab/config.hpp"

namespace pricelab {

struct PairResult {
  std::string policy;
  ScenarioKind scenario;
  std::size_t horizon;
  Window window;
  std::vector<std::uint64_t> seeds;  // per repetition
  std::vector<RegretTrace> traces;
  AggregateStats stats;
  double seconds = 0.0;
  std::filesystem::path csv;
};

struct ExperimentResult {
  std::vector<PairResult> pairs;
  std::filesystem::path summary;
};

PolicyFactory make_policy_factory(const ExperimentConfig& config, const std::string& policy);
HorizonPolicyFactory make_exp4_factory(const ExperimentConfig& config);

// Runs one (policy, scenario) pair. EXP-4 runs a horizon sweep up to its
// cap, everything else a single horizon-T episode per repetition.
PairResult run_pair(const ExperimentConfig& config, const std::string& policy, ScenarioKind scenario,
                    Execution execution = Execution::Parallel);

// Long-format CSV: one row per (repetition, checkpoint). mean and
// wald_halfwidth repeat the aggregate at that checkpoint; wald_halfwidth is
// absent when there is a single repetition.
void write_trace_csv(std::ostream& out, const PairResult& pair);

std::string summary_json(const ExperimentConfig& config, const std::vector<PairResult>& pairs);

// Every pair in config order; writes <out>/<policy>_<scenario>.csv and
// <out>/summary.json. `log` receives one progress line per pair.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                std::ostream& log, Execution execution = Execution::Parallel);

}  // namespace pricelab
