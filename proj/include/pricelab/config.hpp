#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pricelab/environment.hpp"
#include "pricelab/harness.hpp"

namespace pricelab {

// Invalid experiment file. what() carries "source:line:column: message".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, int column, const std::string& message);

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct NoiseSpec {
  NoiseModel::Kind kind = NoiseModel::Kind::Gaussian;
  double scale = 0.25;  // sigma for Gaussian, s for logistic

  NoiseModel model() const;
};

struct EmlpSpec {
  double tolerance = 1e-9;
};

struct OnspSpec {
  // With `theory` set, gamma and epsilon come from onsp_default_hyperparams.
  bool theory = false;
  double gamma = 0.5;
  double epsilon = 1.0;
};

struct Exp4Spec {
  std::size_t horizon_cap = 4096;
  std::optional<double> exploration = std::nullopt;
};

struct PolicySpecs {
  std::optional<EmlpSpec> emlp;
  std::optional<OnspSpec> onsp;
  std::optional<Exp4Spec> exp4;
};

struct ExperimentConfig {
  int dimension = 2;
  double parameter_bound = 1.0;  // B1, radius of the orthant ball
  double feature_bound = 1.0;    // B2
  NoiseSpec noise;
  std::vector<double> theta_star;  // required
  double magnitude_lo = 0.5;
  double magnitude_hi = 1.0;

  std::size_t horizon = std::size_t{1} << 16;
  std::size_t repetitions = 5;
  std::uint64_t seed = 20190601;
  std::optional<Window> slope_window;

  std::vector<ScenarioKind> scenarios{ScenarioKind::StochasticIID, ScenarioKind::AdversarialAlternating};
  PolicySpecs policies{EmlpSpec{}, OnspSpec{}, Exp4Spec{}};
  std::string output = "results";

  PricingProblem problem() const;
  Scenario scenario(ScenarioKind kind) const;
  std::vector<std::string> policy_names() const;
};

// Parses YAML (or JSON) text. Unknown keys, wrong types and values that break
// the model assumptions throw ConfigError pointing at the offending node.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

// Fully resolved config in the same schema parse_config accepts.
std::string config_echo_json(const ExperimentConfig& config, int indent = 2);

}  // namespace pricelab
