#include "pricelab/environment.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "pricelab/errors.hpp"

namespace pricelab {

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::StochasticIID: return "stochastic";
    case ScenarioKind::AdversarialAlternating: return "adversarial";
    case ScenarioKind::FixedValuation: return "fixed_valuation";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  if (name == "stochastic") return ScenarioKind::StochasticIID;
  if (name == "adversarial") return ScenarioKind::AdversarialAlternating;
  if (name == "fixed_valuation") return ScenarioKind::FixedValuation;
  throw DomainError("unknown scenario '" + name + "'");
}

Scenario Scenario::fixed_valuation(PricingProblem problem, double valuation) {
  const int d = problem.dimension();
  Vector x = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  Vector theta = valuation * x;
  if (!problem.region().contains(theta, 1e-12)) throw DomainError("fixed valuation: theta* outside H");
  Scenario s{.kind = ScenarioKind::FixedValuation, .problem = std::move(problem), .theta_star = std::move(theta)};
  s.fixed_feature = std::move(x);
  return s;
}

Environment::Environment(Scenario scenario, std::uint64_t seed)
    : scenario_(std::move(scenario)),
      feature_rng_(derive_seed(seed, stream::kFeatures)),
      noise_rng_(derive_seed(seed, stream::kNoise)) {
  if (scenario_.theta_star.size() != scenario_.problem.dimension()) {
    throw DomainError("scenario: theta* dimension mismatch");
  }
  if (!scenario_.problem.region().contains(scenario_.theta_star, 1e-12)) {
    throw DomainError("scenario: theta* outside the feasible region");
  }
}

Vector Environment::next_feature(std::size_t t) {
  if (t == 0) throw std::out_of_range("next_feature: rounds are numbered from 1");
  const int d = scenario_.problem.dimension();
  Vector x;
  switch (scenario_.kind) {
    case ScenarioKind::StochasticIID: {
      std::normal_distribution<double> normal;
      Vector dir(d);
      do {
        for (int i = 0; i < d; ++i) dir(i) = std::abs(normal(feature_rng_));
      } while (dir.norm() == 0.0);
      const double magnitude =
          std::uniform_real_distribution<double>(scenario_.magnitude_lo, scenario_.magnitude_hi)(feature_rng_);
      x = dir.normalized() * (magnitude * scenario_.problem.feature_bound());
      break;
    }
    case ScenarioKind::AdversarialAlternating: {
      // Epoch k holds rounds [2^(k-1), 2^k); odd epochs use e_1, even ones e_2
      // (for d > 2 the basis vector cycles through all coordinates).
      const int k = std::bit_width(t);
      x = Vector::Zero(d);
      x((k - 1) % d) = scenario_.problem.feature_bound();
      break;
    }
    case ScenarioKind::FixedValuation:
      x = scenario_.fixed_feature;
      break;
  }
  if (scenario_.check_features) check_feature(scenario_.problem, x);
  return x;
}

SaleOutcome Environment::resolve_sale(double valuation, double price) {
  if (!(price >= 0.0) || !std::isfinite(price)) throw DomainError("resolve_sale: price must be >= 0");
  const double noise = scenario_.problem.noise().sample(noise_rng_);
  const bool sold = price <= valuation + noise;
  return {sold, sold ? price : 0.0, noise};
}

void check_feature(const PricingProblem& problem, const Vector& x) {
  if (x.size() != problem.dimension()) throw DomainError("feature dimension mismatch");
  if (x.norm() > problem.feature_bound() * (1.0 + 1e-12)) throw DomainError("feature norm exceeds B2");
  const auto [lo, hi] = problem.region().linear_range(x);
  if (lo < -1e-12 || hi > problem.valuation_bound() * (1.0 + 1e-12)) {
    throw DomainError("feature violates 0 <= x^T theta <= B over H");
  }
}

std::pair<double, double> lower_bound_pair(std::size_t horizon) {
  if (horizon <= 2) throw DomainError("lower_bound_pair: T must exceed 2");
  return {1.0, 1.0 - std::pow(static_cast<double>(horizon), -0.25)};
}

double lower_bound_valuation() { return std::sqrt(std::numbers::pi / 2.0); }

}  // namespace pricelab
