#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "pricelab/errors.hpp"
#include "pricelab/harness.hpp"
#include "pricelab/policy.hpp"

using namespace pricelab;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

const PricingProblem kProblem(NoiseModel::gaussian(0.25), FeasibleRegion::orthant_ball(2, 1.0), 1.0);

}  // namespace

TEST(Policy, ProtocolMisuseThrows) {
  EmlpPolicy p(kProblem);
  EXPECT_THROW(p.feedback(true), std::logic_error);
  p.propose(vec({1, 0}));
  EXPECT_THROW(p.propose(vec({1, 0})), std::logic_error);
  p.feedback(false);
  p.propose(vec({1, 0}));
  p.reset(1);
  EXPECT_NO_THROW(p.propose(vec({1, 0})));
}

TEST(Emlp, BootstrapPriceIsUniformOnWindow) {
  EmlpPolicy p(kProblem);
  double lo = 1e9, hi = -1, sum = 0;
  const int n = 4000;
  for (int s = 0; s < n; ++s) {
    p.reset(static_cast<std::uint64_t>(s));
    const double v = p.propose(vec({1, 0}));
    p.feedback(true);
    lo = std::min(lo, v), hi = std::max(hi, v), sum += v;
  }
  const double vmax = kProblem.max_price();
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, vmax);
  EXPECT_NEAR(sum / n, vmax / 2, 4 * vmax / std::sqrt(12.0 * n));
}

TEST(Emlp, EpochLengthsDouble) {
  EmlpPolicy p(kProblem);
  p.reset(3);
  std::vector<std::size_t> lengths;
  p.set_epoch_observer([&](const EpochRecord& r) { lengths.push_back(r.batch.size()); });
  // Bootstrap round, then epochs of 1, 2, 4, 8 rounds.
  for (int t = 1; t <= 16; ++t) {
    const Vector before = p.estimate();
    const int epoch = p.epoch();
    p.propose(vec({0.6, 0.8}));
    p.feedback(t % 2 == 0);
    if (p.epoch() == epoch) {
      EXPECT_EQ(p.estimate(), before) << "estimate moved mid-epoch at t=" << t;
    }
  }
  EXPECT_EQ(lengths, (std::vector<std::size_t>{1, 2, 4, 8}));
  EXPECT_EQ(p.switches(), 5);
  EXPECT_EQ(p.epoch(), 5);
  EXPECT_EQ(p.epoch_length(), 16u);
}

TEST(Emlp, ZeroFeaturePricesAtGreedyZero) {
  EmlpPolicy p(kProblem);
  p.propose(vec({1, 0}));
  p.feedback(true);
  EXPECT_NEAR(p.propose(Vector::Zero(2)), kProblem.greedy_at_zero(), 1e-15);
}

TEST(Emlp, ResetIsDeterministic) {
  EmlpPolicy a(kProblem), b(kProblem);
  a.reset(9), b.reset(9);
  for (int t = 1; t <= 40; ++t) {
    const Vector x = vec({std::cos(t), std::abs(std::sin(t))}).normalized();
    ASSERT_EQ(a.propose(x), b.propose(x));
    a.feedback(t % 3 == 0), b.feedback(t % 3 == 0);
  }
  EXPECT_EQ(a.snapshot(), b.snapshot());
}

TEST(Onsp, ScalarUpdateExample) {
  const PricingProblem wide(NoiseModel::gaussian(1.0), FeasibleRegion::ball(Vector::Zero(1), 10.0), 1.0);
  OnspPolicy p(wide, {1.0, 1.0});
  for (double g : {0.5, -2.0, 3.0}) {
    p.reset(0);
    p.newton_step(vec({g}));
    EXPECT_NEAR(p.theta()(0), -g / (1 + g * g), 1e-15);
    EXPECT_NEAR(p.gram()(0, 0), 1 + g * g, 1e-15);
    EXPECT_NEAR(p.gram_inverse()(0, 0), 1 / (1 + g * g), 1e-15);
  }
}

TEST(Onsp, ProjectionAfterStep) {
  // Stepping out of H lands on the weighted projection of the Newton target.
  OnspPolicy p(kProblem, {0.5, 1.0});
  const Vector g = vec({-3.0, 1.0});
  const Vector start = p.theta();
  p.newton_step(g);
  const Matrix A = Matrix::Identity(2, 2) + g * g.transpose();
  const Vector target = start - 2.0 * A.inverse() * g;
  EXPECT_LT((p.theta() - kProblem.region().project_weighted(target, A)).norm(), 1e-12);
  EXPECT_TRUE(kProblem.region().contains(p.theta()));
}

TEST(Onsp, ZeroGradientIsNoOp) {
  OnspPolicy p(kProblem, {0.5, 1.0});
  const Vector theta = p.theta();
  const Matrix A = p.gram();
  p.newton_step(Vector::Zero(2));
  EXPECT_EQ(p.theta(), theta);
  EXPECT_EQ(p.gram(), A);
}

TEST(Onsp, InverseTracksGram) {
  OnspPolicy p(kProblem, {0.5, 1.0});
  for (int t = 1; t <= 500; ++t) {
    p.propose(vec({std::abs(std::cos(t)), std::abs(std::sin(t))}).normalized());
    p.feedback(t % 2 == 0);
  }
  const Matrix I = Matrix::Identity(2, 2);
  EXPECT_LT((p.gram() * p.gram_inverse() - I).norm(), 1e-9);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(p.gram());
  EXPECT_GE(eig.eigenvalues().minCoeff(), 1.0 - 1e-12);
}

TEST(Onsp, RejectsBadParameters) {
  EXPECT_THROW(OnspPolicy(kProblem, {0.0, 1.0}), DomainError);
  EXPECT_THROW(OnspPolicy(kProblem, {1.0, -1.0}), DomainError);
  EXPECT_THROW(OnspPolicy(kProblem, {1.0, 1.0}, vec({2, 0})), DomainError);
}

TEST(Onsp, DefaultHyperparamsBranches) {
  AnalysisConstants c{};
  // Curvature-limited: alpha < 1 / (4GD).
  c.gradient_sq_max = 1.0;
  c.exp_concavity = 0.01;
  auto p = onsp_default_hyperparams(c, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(p.gamma, 0.005);
  EXPECT_DOUBLE_EQ(p.epsilon, 1.0 / (0.005 * 0.005 * 4.0));
  // Gradient-limited: 1 / (4GD) = 1 / 16 < alpha.
  c.gradient_sq_max = 4.0;
  c.exp_concavity = 0.5;
  p = onsp_default_hyperparams(c, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(p.gamma, 1.0 / 32.0);
  EXPECT_DOUBLE_EQ(p.epsilon, 1.0 / (p.gamma * p.gamma * 4.0));
}

TEST(Exp4, GridSpacing) {
  const auto grid = exp4_grid(kProblem, 4096);
  // Spacing T^{-1/3} = 1/16 on both grids.
  EXPECT_NEAR(grid.arms[1] - grid.arms[0], kProblem.max_price() / 16, 1e-15);
  EXPECT_EQ(grid.arms.size(), 17u);
  EXPECT_DOUBLE_EQ(grid.arms.back(), kProblem.max_price());
  std::size_t count = 0;
  for (int i = 0; i <= 16; ++i)
    for (int j = 0; j <= 16; ++j) count += (i * i + j * j <= 256);
  EXPECT_EQ(grid.experts.size(), count);
  for (const auto& e : grid.experts) EXPECT_TRUE(kProblem.region().contains(e));
}

TEST(Exp4, ProbabilitiesFormADistribution) {
  Exp4Policy p(kProblem, Exp4Options{.horizon = 4096});
  const auto probs = p.arm_probabilities(vec({0.6, 0.8}));
  EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-12);
  for (double q : probs) EXPECT_GE(q, p.exploration() / probs.size() - 1e-15);
  const double K = 17, N = static_cast<double>(p.grid().experts.size()), T = 4096;
  EXPECT_NEAR(p.exploration(), std::min(1.0, std::sqrt(K * std::log(N) / ((std::numbers::e - 1) * T))), 1e-15);
  EXPECT_NEAR(p.learning_rate(), std::sqrt(2 * std::log(N) / (T * K)), 1e-15);
}

TEST(Exp4, SingleExpertMixture) {
  Exp4Grid grid{{vec({0.5, 0.5})}, {0.0, 0.4, 0.8, 1.2}};
  Exp4Policy p(kProblem, grid, {.horizon = 100, .exploration = 0.2});
  std::vector<int> advice;
  exp4_advice(kProblem, grid, vec({1, 0}), advice, Execution::Serial);
  const auto probs = p.arm_probabilities(vec({1, 0}));
  for (std::size_t a = 0; a < 4; ++a) {
    const double expected = 0.2 / 4 + (static_cast<int>(a) == advice[0] ? 0.8 : 0.0);
    EXPECT_NEAR(probs[a], expected, 1e-15);
  }
}

TEST(Exp4, AdviceIsNearestArm) {
  const auto grid = exp4_grid(kProblem, 512);
  std::vector<int> advice, serial;
  const Vector x = vec({0.3, 0.9}).normalized();
  exp4_advice(kProblem, grid, x, advice, Execution::Parallel);
  exp4_advice(kProblem, grid, x, serial, Execution::Serial);
  EXPECT_EQ(advice, serial);
  for (std::size_t e = 0; e < grid.experts.size(); ++e) {
    const double price = kProblem.greedy_price_clamped(x.dot(grid.experts[e]));
    double best = 1e9;
    for (double a : grid.arms) best = std::min(best, std::abs(a - price));
    EXPECT_NEAR(std::abs(grid.arms[static_cast<std::size_t>(advice[e])] - price), best, 1e-15);
  }
}

TEST(Exp4, AgreeingExpertsKeepEqualWeights) {
  // Both experts recommend the same arm for x = e_1, so updates never separate them.
  Exp4Grid grid{{vec({0.5, 0.0}), vec({0.5, 0.7})}, {0.0, 0.5, 1.0, 1.5}};
  Exp4Policy p(kProblem, grid, {.horizon = 200, .exploration = 0.3});
  p.reset(4);
  for (int t = 0; t < 200; ++t) {
    p.propose(vec({1, 0}));
    p.feedback(t % 2 == 0);
  }
  EXPECT_NEAR(p.weights()[0], 0.5, 1e-15);
  EXPECT_NEAR(p.weights()[1], 0.5, 1e-15);
}

TEST(Exp4, ZeroRewardLeavesWeightsUnchanged) {
  Exp4Policy p(kProblem, Exp4Options{.horizon = 64});
  p.reset(2);
  const auto before = p.weights();
  for (int t = 0; t < 20; ++t) {
    p.propose(vec({0.6, 0.8}));
    p.feedback(false);
  }
  EXPECT_EQ(p.weights(), before);
}

TEST(Exp4, SingleArm) {
  Exp4Grid grid{{vec({0.5, 0.5}), vec({0.1, 0.1})}, {0.7}};
  Exp4Policy p(kProblem, grid, {.horizon = 10});
  for (int t = 0; t < 10; ++t) {
    EXPECT_EQ(p.propose(vec({1, 0})), 0.7);
    p.feedback(true);
  }
}

TEST(Exp4, ConcentratesOnBestExpert) {
  // Fixed valuation with noise-free-like sigma: the expert matching theta*
  // earns the most.
  const PricingProblem sharp(NoiseModel::gaussian(0.05), FeasibleRegion::orthant_ball(2, 1.0), 1.0);
  const Vector theta_star = vec({0.6, 0.0});
  Exp4Grid grid{{vec({0.6, 0.0}), vec({0.2, 0.0}), vec({0.95, 0.0}), vec({0.0, 0.0})}, {}};
  for (int k = 0; k <= 40; ++k) grid.arms.push_back(k * sharp.max_price() / 40);
  const std::size_t T = 10000;
  Exp4Policy p(sharp, grid, {.horizon = T});
  Scenario s{.kind = ScenarioKind::FixedValuation, .problem = sharp, .theta_star = theta_star};
  s.fixed_feature = vec({1, 0});
  run_episode(p, s, T, 5, {.record_transcript = false});
  EXPECT_GE(p.weights()[0], 0.9);
}

TEST(Exp4, RejectsBadInput) {
  EXPECT_THROW(exp4_grid(kProblem, 0), DomainError);
  EXPECT_THROW(Exp4Policy(kProblem, Exp4Grid{{}, {0.1}}, {.horizon = 4}), DomainError);
  EXPECT_THROW(Exp4Policy(kProblem, Exp4Grid{{vec({0, 0})}, {0.5, 0.1}}, {.horizon = 4}), DomainError);
  EXPECT_THROW(Exp4Policy(kProblem, Exp4Grid{{vec({0, 0})}, {0.1}}, {.horizon = 4, .exploration = 1.5}),
               DomainError);
}

TEST(Oracle, PricesAtGreedyOfTrueValuation) {
  const PricingProblem unit(NoiseModel::gaussian(1.0), FeasibleRegion::orthant_ball(1, 2.0), 1.0);
  const double u = std::sqrt(std::numbers::pi / 2);
  OraclePolicy p(unit, vec({u}));
  EXPECT_NEAR(p.propose(vec({1.0})), u, 1e-10);
  EXPECT_THROW(OraclePolicy(unit, vec({1, 1})), DomainError);
}
