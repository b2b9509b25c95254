#pragma once

#include "pricelab/noise.hpp"
#include "pricelab/parallel.hpp"
#include "pricelab/region.hpp"

namespace pricelab {

// g(v, u) = v * (1 - F(v - u)): expected revenue of price v when the
// customer's expected valuation is u.
double expected_reward(const NoiseModel& model, double price, double valuation);

// Virtual valuation (1 - F(w)) / f(w) - w. Strictly decreasing, slope < -1.
double virtual_valuation(const NoiseModel& model, double w);

// Inverse of virtual_valuation by bisection (absolute tolerance 1e-12 on w).
double virtual_valuation_inverse(const NoiseModel& model, double y);

// J(u) = argmax_v g(v, u) = u + virtual_valuation_inverse(u), for u >= 0.
double greedy_price(const NoiseModel& model, double valuation);

// 1 - F(J - u) - J f(J - u): first-order condition of g at price J.
double first_order_residual(const NoiseModel& model, double price, double valuation);

struct AnalysisConstants {
  double bound;            // B
  double pdf_sup;          // B_f
  double pdf_derivative_sup;  // B_f'
  double greedy_at_zero;   // J(0)
  double window_lo;        // -B
  double window_hi;        // B + J(0)
  double quadratic_regret;  // C = 2 B_f + (B + J(0)) B_f'
  double curvature_min;    // C_down
  double gradient_sq_max;  // C_exp
  double exp_concavity;    // alpha = C_down / C_exp
};

struct ConstantsOptions {
  std::size_t grid_points = 10001;
  Execution execution = Execution::Parallel;
};

// Evaluates the curvature and squared-hazard extrema over w in [-B, B + J(0)].
AnalysisConstants compute_constants(const NoiseModel& model, double bound,
                                    const ConstantsOptions& options = {});

// Model, bounds and feasible set shared by a policy and its environment.
class PricingProblem {
 public:
  PricingProblem(NoiseModel noise, FeasibleRegion region, double feature_bound);

  const NoiseModel& noise() const { return noise_; }
  const FeasibleRegion& region() const { return region_; }
  int dimension() const { return region_.dimension(); }
  double parameter_bound() const { return region_.radius(); }  // B1
  double feature_bound() const { return feature_bound_; }      // B2
  double valuation_bound() const { return parameter_bound() * feature_bound_; }  // B
  double greedy_at_zero() const { return greedy_at_zero_; }
  // Price window upper end: B + J(0).
  double max_price() const { return valuation_bound() + greedy_at_zero_; }

  // J(u) for u in [0, B]; outside that range is a domain error.
  double greedy_price(double valuation) const;
  // J(clamp(u, 0, B)).
  double greedy_price_clamped(double valuation) const;

  PricingProblem with_noise(NoiseModel noise) const;

 private:
  NoiseModel noise_;
  FeasibleRegion region_;
  double feature_bound_;
  double greedy_at_zero_;
};

}  // namespace pricelab
