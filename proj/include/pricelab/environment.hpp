#pragma once

#include <cstdint>
#include <utility>

#include "pricelab/pricing.hpp"

namespace pricelab {

enum class ScenarioKind { StochasticIID, AdversarialAlternating, FixedValuation };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

struct Scenario {
  ScenarioKind kind = ScenarioKind::StochasticIID;
  // True model and bounds; the noise here generates the customers.
  PricingProblem problem;
  Vector theta_star;
  // StochasticIID: ||x|| ~ uniform[magnitude_lo, magnitude_hi] * B2, direction
  // uniform on the unit sphere restricted to the nonnegative orthant.
  double magnitude_lo = 0.5;
  double magnitude_hi = 1.0;
  // FixedValuation: the constant feature vector (unit norm by default).
  Vector fixed_feature = Vector();
  // Validate every emitted x against the feasible set's valuation range.
  bool check_features = true;

  // Lower-bound construction: constant x with x^T theta* = valuation.
  static Scenario fixed_valuation(PricingProblem problem, double valuation);
};

struct SaleOutcome {
  bool sold;
  double reward;
  double noise;
};

// Feature and customer generator for one episode. Features and noise come
// from separate streams derived from the episode seed.
class Environment {
 public:
  Environment(Scenario scenario, std::uint64_t seed);

  const Scenario& scenario() const { return scenario_; }

  // Features of round t (1-based).
  Vector next_feature(std::size_t t);
  // Customer response to price v when the expected valuation is u*.
  SaleOutcome resolve_sale(double valuation, double price);

 private:
  Scenario scenario_;
  Rng feature_rng_;
  Rng noise_rng_;
};

// x^T theta must lie in [0, B] for every theta in H; throws otherwise.
void check_feature(const PricingProblem& problem, const Vector& x);

// (sigma_1, sigma_2) = (1, 1 - T^{-1/4}).
std::pair<double, double> lower_bound_pair(std::size_t horizon);

// u* = sqrt(pi / 2): the fixed point of the unit-variance Gaussian J.
double lower_bound_valuation();

}  // namespace pricelab
