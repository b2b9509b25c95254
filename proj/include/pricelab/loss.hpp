#pragma once

#include <vector>

#include "pricelab/noise.hpp"
#include "pricelab/parallel.hpp"
#include "pricelab/region.hpp"

namespace pricelab {

// One observed round: features, posted price, and whether the sale happened.
struct LossPoint {
  Vector x;
  double price;
  bool sold;
};

// Scalar parts of the per-round negative log-likelihood along x:
//   l = value, grad l = slope * x, hess l = curvature * x x^T.
struct LossTerms {
  double value;
  double slope;
  double curvature;
};

LossTerms loss_terms(const LossPoint& point, const Vector& theta, const NoiseModel& model);

double loss(const LossPoint& point, const Vector& theta, const NoiseModel& model);
Vector loss_gradient(const LossPoint& point, const Vector& theta, const NoiseModel& model);
Matrix loss_hessian(const LossPoint& point, const Vector& theta, const NoiseModel& model);

// Average negative log-likelihood over a batch of rounds.
class BatchObjective {
 public:
  BatchObjective(std::vector<LossPoint> points, NoiseModel model,
                 Execution execution = Execution::Parallel);

  const std::vector<LossPoint>& points() const { return points_; }
  const NoiseModel& model() const { return model_; }
  std::size_t size() const { return points_.size(); }
  int dimension() const;

  double value(const Vector& theta) const;
  Vector gradient(const Vector& theta) const;
  Matrix hessian(const Vector& theta) const;
  // value, gradient and Hessian in one pass.
  struct Evaluation {
    double value;
    Vector gradient;
    Matrix hessian;
  };
  Evaluation evaluate(const Vector& theta) const;

  // Gradient Lipschitz bound: model curvature bound times max ||x||^2.
  double lipschitz_bound() const;

 private:
  std::vector<LossPoint> points_;
  NoiseModel model_;
  Execution execution_;
  double max_norm_sq_ = 0.0;
};

enum class MleMethod {
  // Proximal Newton: weighted projection in the Hessian metric, Armijo backtracking.
  ProjectedNewton,
  // Projected gradient with step 1/L and Armijo backtracking.
  ProjectedGradient,
};

struct MleOptions {
  double tolerance = 1e-9;
  int max_iterations = 100000;
  MleMethod method = MleMethod::ProjectedNewton;
};

struct MleResult {
  Vector theta;
  double value;
  // ||theta - P(theta - s grad)|| / s at the returned point, s = 1 / lipschitz.
  double stationarity;
  double lipschitz;
  int iterations;
  bool converged;
};

// ||theta - P_H(theta - s grad)|| / s.
double gradient_mapping_norm(const BatchObjective& batch, const FeasibleRegion& region,
                             const Vector& theta, double step);

// argmin over the region of the batch objective, started at theta_init.
// Directions outside the span of the batch features keep their initial value.
MleResult solve_mle(const BatchObjective& batch, const FeasibleRegion& region, const Vector& theta_init,
                    const MleOptions& options = {});

}  // namespace pricelab
