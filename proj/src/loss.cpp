#include "pricelab/loss.hpp"

#include <cmath>

#include "pricelab/errors.hpp"

namespace pricelab {

LossTerms loss_terms(const LossPoint& point, const Vector& theta, const NoiseModel& model) {
  const double w = point.price - point.x.dot(theta);
  if (point.sold) return {-model.log_sf(w), -model.hazard(w), model.curvature_sf(w)};
  return {-model.log_cdf(w), model.reverse_hazard(w), model.curvature_cdf(w)};
}

double loss(const LossPoint& point, const Vector& theta, const NoiseModel& model) {
  const double w = point.price - point.x.dot(theta);
  return point.sold ? -model.log_sf(w) : -model.log_cdf(w);
}

Vector loss_gradient(const LossPoint& point, const Vector& theta, const NoiseModel& model) {
  const double w = point.price - point.x.dot(theta);
  const double slope = point.sold ? -model.hazard(w) : model.reverse_hazard(w);
  return slope * point.x;
}

Matrix loss_hessian(const LossPoint& point, const Vector& theta, const NoiseModel& model) {
  const double w = point.price - point.x.dot(theta);
  const double curvature = point.sold ? model.curvature_sf(w) : model.curvature_cdf(w);
  return curvature * point.x * point.x.transpose();
}

namespace {

struct Accumulator {
  double value;
  Vector gradient;
  Matrix hessian;

  Accumulator& operator+=(const Accumulator& other) {
    value += other.value;
    gradient += other.gradient;
    hessian += other.hessian;
    return *this;
  }
};

}  // namespace

BatchObjective::BatchObjective(std::vector<LossPoint> points, NoiseModel model, Execution execution)
    : points_(std::move(points)), model_(model), execution_(execution) {
  if (points_.empty()) throw DomainError("BatchObjective: empty batch");
  const auto d = points_.front().x.size();
  for (const auto& p : points_) {
    if (p.x.size() != d) throw DomainError("BatchObjective: inconsistent feature dimension");
    max_norm_sq_ = std::max(max_norm_sq_, p.x.squaredNorm());
  }
}

int BatchObjective::dimension() const { return static_cast<int>(points_.front().x.size()); }

double BatchObjective::value(const Vector& theta) const {
  const double total = block_sum(
      points_.size(), 0.0, [&](std::size_t i) { return loss(points_[i], theta, model_); }, execution_);
  return total / static_cast<double>(points_.size());
}

Vector BatchObjective::gradient(const Vector& theta) const { return evaluate(theta).gradient; }

Matrix BatchObjective::hessian(const Vector& theta) const { return evaluate(theta).hessian; }

BatchObjective::Evaluation BatchObjective::evaluate(const Vector& theta) const {
  const int d = dimension();
  const Accumulator zero{0.0, Vector::Zero(d), Matrix::Zero(d, d)};
  Accumulator total = block_reduce(
      points_.size(), zero,
      [&](Accumulator& acc, std::size_t i) {
        const LossPoint& p = points_[i];
        const LossTerms t = loss_terms(p, theta, model_);
        acc.value += t.value;
        acc.gradient.noalias() += t.slope * p.x;
        acc.hessian.selfadjointView<Eigen::Lower>().rankUpdate(p.x, t.curvature);
      },
      execution_);
  const double inv_n = 1.0 / static_cast<double>(points_.size());
  Matrix hessian = total.hessian.selfadjointView<Eigen::Lower>();
  return {total.value * inv_n, total.gradient * inv_n, hessian * inv_n};
}

double BatchObjective::lipschitz_bound() const { return model_.curvature_bound() * max_norm_sq_; }

double gradient_mapping_norm(const BatchObjective& batch, const FeasibleRegion& region,
                             const Vector& theta, double step) {
  const Vector g = batch.gradient(theta);
  return (theta - region.project(theta - step * g)).norm() / step;
}

namespace {

constexpr double kArmijo = 1e-4;

// Armijo test with slack for rounding: near the optimum the decrease falls
// below the resolution of the objective value.
bool sufficient_decrease(double trial, double current, double t, double slope) {
  return trial <= current + kArmijo * t * slope + 1e-14 * (1.0 + std::abs(current));
}

}  // namespace

MleResult solve_mle(const BatchObjective& batch, const FeasibleRegion& region, const Vector& theta_init,
                    const MleOptions& options) {
  if (theta_init.size() != batch.dimension() || region.dimension() != batch.dimension()) {
    throw DomainError("solve_mle: dimension mismatch");
  }
  MleResult result{region.project(theta_init), 0.0, 0.0, batch.lipschitz_bound(), 0, false};
  Vector& theta = result.theta;
  const int d = batch.dimension();

  if (result.lipschitz == 0.0) {
    // Every feature vector is zero: the objective is constant.
    result.value = batch.value(theta);
    result.converged = true;
    return result;
  }
  const double step = 1.0 / result.lipschitz;

  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it;
    const auto ev = batch.evaluate(theta);
    result.value = ev.value;
    const Vector pg_point = region.project(theta - step * ev.gradient);
    result.stationarity = (theta - pg_point).norm() / step;
    if (result.stationarity <= options.tolerance) {
      result.converged = true;
      return result;
    }

    Vector direction = pg_point - theta;
    if (options.method == MleMethod::ProjectedNewton) {
      const double shift = 1e-10 * std::max(ev.hessian.trace(), 1e-6 * result.lipschitz);
      const Matrix metric = ev.hessian + shift * Matrix::Identity(d, d);
      const Vector newton_target = theta - metric.ldlt().solve(ev.gradient);
      const Vector newton_dir = region.project_weighted(newton_target, metric) - theta;
      if (ev.gradient.dot(newton_dir) < 0.0) direction = newton_dir;
    }

    const double slope = ev.gradient.dot(direction);
    if (!(slope < 0.0)) break;
    double t = 1.0;
    double trial_value = batch.value(theta + direction);
    while (!sufficient_decrease(trial_value, ev.value, t, slope)) {
      t *= 0.5;
      if (t < 1e-20) break;
      trial_value = batch.value(theta + t * direction);
    }
    if (t < 1e-20) break;
    theta += t * direction;
  }
  const auto ev = batch.evaluate(theta);
  result.value = ev.value;
  result.stationarity = (theta - region.project(theta - step * ev.gradient)).norm() / step;
  result.converged = result.stationarity <= options.tolerance;
  return result;
}

}  // namespace pricelab
