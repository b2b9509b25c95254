#include <gtest/gtest.h>

#include <sstream>

#include "pricelab/config.hpp"
#include "pricelab/experiment.hpp"

using namespace pricelab;

namespace {

const std::string kMinimal = R"(problem:
  theta_star: [0.5, 0.5]
horizon: 64
repetitions: 1
)";

}  // namespace

TEST(Config, DefaultFileParses) {
  const auto c = load_config(std::string(PRICELAB_SOURCE_DIR) + "/configs/default.yaml");
  EXPECT_EQ(c.dimension, 2);
  EXPECT_EQ(c.theta_star, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(c.noise.kind, NoiseModel::Kind::Gaussian);
  EXPECT_DOUBLE_EQ(c.noise.scale, 0.25);
  EXPECT_EQ(c.horizon, 65536u);
  EXPECT_EQ(c.repetitions, 5u);
  EXPECT_EQ(c.seed, 20190601u);
  ASSERT_TRUE(c.slope_window);
  EXPECT_EQ(c.slope_window->lo, 1024u);
  EXPECT_EQ(c.policy_names(), (std::vector<std::string>{"emlp", "onsp", "exp4"}));
  EXPECT_EQ(c.scenarios.size(), 2u);
  EXPECT_EQ(c.policies.exp4->horizon_cap, 4096u);
}

TEST(Config, MinimalUsesDefaults) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.policy_names().size() * c.scenarios.size(), 6u);
  EXPECT_FALSE(c.slope_window);
  EXPECT_DOUBLE_EQ(c.policies.onsp->gamma, 0.5);
  EXPECT_FALSE(c.policies.onsp->theory);
  // horizon_cap is clamped to the horizon.
  EXPECT_EQ(c.policies.exp4->horizon_cap, 64u);
  EXPECT_TRUE(c.problem().region().contains(c.scenario(ScenarioKind::StochasticIID).theta_star));
}

TEST(Config, MissingThetaStarReportsLocation) {
  try {
    parse_config("problem:\n  dimension: 2\n", "cfg.yaml");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_GE(e.line(), 1);
    EXPECT_NE(std::string(e.what()).find("cfg.yaml:"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("theta_star"), std::string::npos);
  }
  EXPECT_THROW(parse_config("horizon: 10\n"), ConfigError);
}

TEST(Config, UnknownKeyLineNumber) {
  try {
    parse_config("problem:\n  theta_star: [0.5, 0.5]\n  colour: blue\n", "cfg.yaml");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
}

TEST(Config, RejectsModelViolations) {
  const auto bad = [](const std::string& text) { EXPECT_THROW(parse_config(text), ConfigError) << text; };
  bad("problem:\n  theta_star: [0.9, 0.9]\n");          // outside the ball
  bad("problem:\n  theta_star: [-0.1, 0.5]\n");         // outside the orthant
  bad("problem:\n  theta_star: [0.5]\n");               // wrong length
  bad("problem:\n  theta_star: [0.5, 0.5]\n  region: ball\n");
  bad("problem:\n  theta_star: [0.5, 0.5]\n  noise: {kind: gaussian, sigma: 0}\n");
  bad("problem:\n  theta_star: [0.5, 0.5]\nscenarios: [fixed_valuation]\n");
  bad("problem:\n  theta_star: [0.5, 0.5]\nhorizon: lots\n");
  bad("problem:\n  theta_star: [0.5, 0.5]\npolicies:\n  onsp: {hyperparameters: theory, gamma: 1}\n");
  bad("problem: [1, 2\n");
}

TEST(Config, EchoRoundTrips) {
  auto c = parse_config(R"(problem:
  theta_star: [0.3, 0.4]
  noise: {kind: logistic, scale: 0.5}
horizon: 2048
seed: 11
slope_window: [64, 2048]
scenarios: [adversarial]
policies:
  onsp: {hyperparameters: theory}
  exp4: {horizon_cap: 512, exploration: 0.1}
)");
  const std::string echo = config_echo_json(c);
  const auto again = parse_config(echo, "echo");
  EXPECT_EQ(config_echo_json(again), echo);
  EXPECT_EQ(again.noise.kind, NoiseModel::Kind::Logistic);
  EXPECT_TRUE(again.policies.onsp->theory);
  EXPECT_FALSE(again.policies.emlp);
  EXPECT_EQ(again.policies.exp4->exploration, 0.1);
  EXPECT_EQ(again.slope_window->lo, 64u);
}

TEST(Experiment, SingleRepetitionCsvHasNoHalfwidth) {
  auto c = parse_config(kMinimal);
  const auto pair = run_pair(c, "onsp", ScenarioKind::StochasticIID);
  std::ostringstream csv;
  write_trace_csv(csv, pair);
  std::istringstream in(csv.str());
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "t,rep,regret_cum,regret_over_logt,mean");
  EXPECT_EQ(first.substr(0, 4), "1,0,");
  std::size_t rows = 1;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, dyadic_checkpoints(64).size());
}

TEST(Experiment, CsvRowsPerRepetition) {
  auto c = parse_config(kMinimal);
  c.repetitions = 3;
  const auto pair = run_pair(c, "emlp", ScenarioKind::AdversarialAlternating);
  std::ostringstream csv;
  write_trace_csv(csv, pair);
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,rep,regret_cum,regret_over_logt,mean,wald_halfwidth");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 3 * dyadic_checkpoints(64).size());
  EXPECT_EQ(pair.seeds.size(), 3u);
  EXPECT_EQ(pair.seeds[1], derive_seed(c.seed, 1));
}
