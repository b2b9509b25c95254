#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pricelab/environment.hpp"
#include "pricelab/errors.hpp"
#include "pricelab/loss.hpp"

using namespace pricelab;

namespace {

constexpr double kNegLogSf2 = 3.7831843336820319488;

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Rounds from a stochastic scenario, priced uniformly on [0, B + J(0)].
std::vector<LossPoint> simulate(const PricingProblem& problem, const Vector& theta_star, std::size_t n,
                                std::uint64_t seed) {
  Scenario s{.kind = ScenarioKind::StochasticIID, .problem = problem, .theta_star = theta_star};
  Environment env(s, seed);
  Rng rng(derive_seed(seed, 9));
  std::uniform_real_distribution<double> price(0.0, problem.max_price());
  std::vector<LossPoint> out;
  for (std::size_t t = 1; t <= n; ++t) {
    const Vector x = env.next_feature(t);
    const double v = price(rng);
    out.push_back({x, v, env.resolve_sale(x.dot(theta_star), v).sold});
  }
  return out;
}

const PricingProblem kProblem(NoiseModel::gaussian(0.25), FeasibleRegion::orthant_ball(2, 1.0), 1.0);

}  // namespace

TEST(Loss, Examples) {
  const auto unit = NoiseModel::gaussian(1.0);
  const Vector x = vec({1.0, 0.0}), zero = Vector::Zero(2);
  EXPECT_NEAR(loss({x, 0.0, true}, zero, unit), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss({x, 0.0, false}, zero, unit), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss({x, 2.0, true}, zero, unit), kNegLogSf2, 1e-13);
  EXPECT_NEAR(loss_gradient({x, 0.0, true}, zero, unit)(0), -0.797885, 1e-6);
  EXPECT_NEAR(loss_gradient({x, 0.0, false}, zero, unit)(0), 0.797885, 1e-6);
}

TEST(Loss, ZeroFeatureHasNoGradient) {
  const auto m = NoiseModel::gaussian(0.25);
  const LossPoint p{Vector::Zero(3), 0.4, true};
  const Vector theta = vec({0.3, 0.1, 0.2});
  EXPECT_EQ(loss_gradient(p, theta, m).norm(), 0.0);
  EXPECT_EQ(loss_hessian(p, theta, m).norm(), 0.0);
  EXPECT_NEAR(loss(p, theta, m), -m.log_sf(0.4), 0.0);
}

TEST(Loss, FiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& m : {NoiseModel::gaussian(0.25), NoiseModel::logistic(0.3)}) {
    for (int k = 0; k < 50; ++k) {
      const LossPoint p{vec({u(rng), u(rng)}), 1.5 * u(rng), k % 2 == 0};
      const Vector theta = vec({u(rng), u(rng)}) * 0.7;
      const Vector g = loss_gradient(p, theta, m);
      const Matrix H = loss_hessian(p, theta, m);
      const double h = 1e-6;
      for (int i = 0; i < 2; ++i) {
        Vector e = Vector::Zero(2);
        e(i) = h;
        const double fd = (loss(p, theta + e, m) - loss(p, theta - e, m)) / (2 * h);
        EXPECT_NEAR(g(i), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        const Vector gd = (loss_gradient(p, theta + e, m) - loss_gradient(p, theta - e, m)) / (2 * h);
        EXPECT_LT((H.col(i) - gd).norm(), 1e-5 * std::max(1.0, gd.norm()));
      }
      const auto terms = loss_terms(p, theta, m);
      EXPECT_EQ(terms.value, loss(p, theta, m));
      EXPECT_GE(terms.curvature, 0.0);
    }
  }
}

TEST(BatchObjective, AverageOfPointLosses) {
  const auto pts = simulate(kProblem, vec({0.5, 0.5}), 100, 3);
  const BatchObjective batch(pts, kProblem.noise(), Execution::Serial);
  const Vector theta = vec({0.3, 0.6});
  double v = 0;
  Vector g = Vector::Zero(2);
  Matrix H = Matrix::Zero(2, 2);
  for (const auto& p : pts) {
    v += loss(p, theta, kProblem.noise());
    g += loss_gradient(p, theta, kProblem.noise());
    H += loss_hessian(p, theta, kProblem.noise());
  }
  EXPECT_NEAR(batch.value(theta), v / 100, 1e-13);
  EXPECT_LT((batch.gradient(theta) - g / 100).norm(), 1e-12);
  EXPECT_LT((batch.hessian(theta) - H / 100).norm(), 1e-10);
  EXPECT_TRUE(batch.hessian(theta).isApprox(batch.hessian(theta).transpose(), 0.0));
}

TEST(BatchObjective, SerialAndParallelAgree) {
  const auto pts = simulate(kProblem, vec({0.5, 0.5}), 5000, 4);
  const BatchObjective serial(pts, kProblem.noise(), Execution::Serial);
  const BatchObjective parallel(pts, kProblem.noise(), Execution::Parallel);
  const Vector theta = vec({0.2, 0.7});
  const auto a = serial.evaluate(theta), b = parallel.evaluate(theta);
  EXPECT_NEAR(a.value, b.value, 1e-12 * std::abs(a.value));
  EXPECT_LT((a.gradient - b.gradient).norm(), 1e-12);
  EXPECT_LT((a.hessian - b.hessian).norm(), 1e-10);
  // The parallel path is bitwise reproducible.
  const auto c = parallel.evaluate(theta);
  EXPECT_EQ(b.value, c.value);
  EXPECT_EQ(b.gradient, c.gradient);
}

TEST(BatchObjective, RejectsBadBatches) {
  EXPECT_THROW(BatchObjective({}, kProblem.noise()), DomainError);
  std::vector<LossPoint> mixed{{vec({1, 0}), 0.1, true}, {vec({1, 0, 0}), 0.1, true}};
  EXPECT_THROW(BatchObjective(mixed, kProblem.noise()), DomainError);
}

TEST(Mle, ZeroFeaturesReturnInitialPoint) {
  const BatchObjective batch({{Vector::Zero(2), 0.3, true}}, kProblem.noise());
  const Vector init = vec({0.2, 0.1});
  const auto fit = solve_mle(batch, kProblem.region(), init);
  EXPECT_TRUE(fit.converged);
  EXPECT_EQ(fit.theta, init);
}

TEST(Mle, ConsistentOnLargeSample) {
  const Vector theta_star = vec({0.5, 0.5});
  const BatchObjective batch(simulate(kProblem, theta_star, 4096, 5), kProblem.noise());
  const auto fit = solve_mle(batch, kProblem.region(), kProblem.region().initial_point());
  EXPECT_TRUE(fit.converged);
  EXPECT_LE(fit.stationarity, 1e-9);
  EXPECT_LE((fit.theta - theta_star).norm(), 0.1);
  EXPECT_TRUE(kProblem.region().contains(fit.theta));
}

TEST(Mle, SingleDirectionLeavesOrthogonalCoordinate) {
  // Every feature is e_1: the objective ignores theta_2, so it keeps its start.
  std::vector<LossPoint> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({vec({1, 0}), 0.05 * i, i % 3 != 0});
  const BatchObjective batch(pts, kProblem.noise());
  const Vector init = vec({0.3, 0.25});
  const auto fit = solve_mle(batch, kProblem.region(), init);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.theta(1), 0.25, 1e-12);
}

TEST(Mle, NewtonAndGradientAgree) {
  const BatchObjective batch(simulate(kProblem, vec({0.7, 0.2}), 512, 6), kProblem.noise());
  MleOptions pg;
  pg.method = MleMethod::ProjectedGradient;
  pg.tolerance = 1e-7;
  const auto a = solve_mle(batch, kProblem.region(), kProblem.region().initial_point());
  const auto b = solve_mle(batch, kProblem.region(), kProblem.region().initial_point(), pg);
  EXPECT_TRUE(a.converged);
  EXPECT_TRUE(b.converged);
  EXPECT_LT((a.theta - b.theta).norm(), 1e-4);
  EXPECT_LE(a.value, b.value + 1e-12);
  EXPECT_LT(a.iterations, b.iterations);
}

TEST(Mle, MatchesGridMinimum) {
  const BatchObjective batch(simulate(kProblem, vec({0.4, 0.6}), 256, 7), kProblem.noise());
  const auto fit = solve_mle(batch, kProblem.region(), kProblem.region().initial_point());
  double best = 1e300;
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 400; ++j) {
      const Vector t = vec({i / 400.0, j / 400.0});
      if (!kProblem.region().contains(t)) continue;
      best = std::min(best, batch.value(t));
    }
  }
  EXPECT_LE(fit.value, best + 1e-12);
  EXPECT_GT(fit.value, best - 1e-3);
}

TEST(Mle, ConstrainedOptimumOnBoundary) {
  // Always sold at high prices pushes the estimate out to the sphere.
  std::vector<LossPoint> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({vec({0.6, 0.8}), 2.0, true});
  const BatchObjective batch(pts, kProblem.noise());
  const auto fit = solve_mle(batch, kProblem.region(), kProblem.region().initial_point());
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.theta.norm(), 1.0, 1e-9);
  EXPECT_LT((fit.theta - vec({0.6, 0.8})).norm(), 1e-6);
  EXPECT_LE(gradient_mapping_norm(batch, kProblem.region(), fit.theta, 1.0 / fit.lipschitz), 1e-9);
}

TEST(Mle, LipschitzBound) {
  const BatchObjective batch({{vec({0.6, 0.8}), 0.1, true}, {vec({0.3, 0.0}), 0.2, false}}, kProblem.noise());
  EXPECT_DOUBLE_EQ(batch.lipschitz_bound(), kProblem.noise().curvature_bound() * 1.0);
}
