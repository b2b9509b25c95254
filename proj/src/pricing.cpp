#include "pricelab/pricing.hpp"

#include <algorithm>
#include <cmath>

#include "pricelab/errors.hpp"

namespace pricelab {

namespace {
// Standardized distance above which g is evaluated in log space.
constexpr double kLogSpaceThreshold = 8.0;
constexpr double kInverseTolerance = 1e-12;
}  // namespace

double expected_reward(const NoiseModel& model, double price, double valuation) {
  if (!(price >= 0.0) || !std::isfinite(price)) throw DomainError("expected_reward: price must be >= 0");
  if (!std::isfinite(valuation)) throw DomainError("expected_reward: non-finite valuation");
  if (price == 0.0) return 0.0;
  const double w = price - valuation;
  if (w / model.scale() > kLogSpaceThreshold) return std::exp(std::log(price) + model.log_sf(w));
  return price * model.sf(w);
}

double virtual_valuation(const NoiseModel& model, double w) { return 1.0 / model.hazard(w) - w; }

double virtual_valuation_inverse(const NoiseModel& model, double y) {
  if (!std::isfinite(y)) throw DomainError("virtual_valuation_inverse: non-finite target");
  const double width = std::abs(y) + 10.0 * model.scale();
  double lo = -width;
  double hi = width;
  for (int i = 0; virtual_valuation(model, lo) <= y; ++i) {
    if (i == 200) throw InvariantViolation("virtual_valuation_inverse: failed to bracket from below");
    lo *= 2.0;
  }
  for (int i = 0; virtual_valuation(model, hi) >= y; ++i) {
    if (i == 200) throw InvariantViolation("virtual_valuation_inverse: failed to bracket from above");
    hi *= 2.0;
  }
  while (hi - lo > kInverseTolerance) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (virtual_valuation(model, mid) > y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double greedy_price(const NoiseModel& model, double valuation) {
  if (!(valuation >= 0.0) || !std::isfinite(valuation)) {
    throw DomainError("greedy_price: valuation must be finite and >= 0");
  }
  return valuation + virtual_valuation_inverse(model, valuation);
}

double first_order_residual(const NoiseModel& model, double price, double valuation) {
  const double w = price - valuation;
  return model.sf(w) - price * model.pdf(w);
}

AnalysisConstants compute_constants(const NoiseModel& model, double bound,
                                    const ConstantsOptions& options) {
  if (!(bound > 0.0) || !std::isfinite(bound)) throw DomainError("compute_constants: B must be positive");
  if (options.grid_points < 2) throw DomainError("compute_constants: need at least two grid points");
  AnalysisConstants c{};
  c.bound = bound;
  c.pdf_sup = model.pdf_sup();
  c.pdf_derivative_sup = model.pdf_derivative_sup();
  c.greedy_at_zero = greedy_price(model, 0.0);
  c.window_lo = -bound;
  c.window_hi = bound + c.greedy_at_zero;
  c.quadratic_regret = 2.0 * c.pdf_sup + (bound + c.greedy_at_zero) * c.pdf_derivative_sup;

  const std::size_t n = options.grid_points;
  const double lo = c.window_lo;
  const double step = (c.window_hi - c.window_lo) / static_cast<double>(n - 1);
  auto at = [&](std::size_t i) { return i + 1 == n ? c.window_hi : lo + step * static_cast<double>(i); };

  const Extrema curvature = grid_extrema(
      n, [&](std::size_t i) { return std::min(model.curvature_sf(at(i)), model.curvature_cdf(at(i))); },
      options.execution);
  const Extrema gradient_sq = grid_extrema(
      n,
      [&](std::size_t i) {
        const double a = model.hazard(at(i));
        const double b = model.reverse_hazard(at(i));
        return std::max(a * a, b * b);
      },
      options.execution);

  c.curvature_min = curvature.min;
  c.gradient_sq_max = gradient_sq.max;
  if (!(c.curvature_min > 0.0)) {
    throw InvariantViolation("compute_constants: curvature infimum is not positive (log-concavity fails)");
  }
  c.exp_concavity = c.curvature_min / c.gradient_sq_max;
  return c;
}

PricingProblem::PricingProblem(NoiseModel noise, FeasibleRegion region, double feature_bound)
    : noise_(noise), region_(std::move(region)), feature_bound_(feature_bound) {
  if (!(feature_bound > 0.0) || !std::isfinite(feature_bound)) {
    throw DomainError("PricingProblem: feature bound must be positive");
  }
  greedy_at_zero_ = pricelab::greedy_price(noise_, 0.0);
}

double PricingProblem::greedy_price(double valuation) const {
  const double B = valuation_bound();
  if (!(valuation >= -1e-12 && valuation <= B + 1e-12)) {
    throw DomainError("greedy_price: valuation outside [0, B]");
  }
  return pricelab::greedy_price(noise_, std::clamp(valuation, 0.0, B));
}

double PricingProblem::greedy_price_clamped(double valuation) const {
  if (!std::isfinite(valuation)) throw DomainError("greedy_price: non-finite valuation");
  return pricelab::greedy_price(noise_, std::clamp(valuation, 0.0, valuation_bound()));
}

PricingProblem PricingProblem::with_noise(NoiseModel noise) const {
  return PricingProblem(noise, region_, feature_bound_);
}

}  // namespace pricelab
