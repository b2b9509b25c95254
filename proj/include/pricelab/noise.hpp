#pragma once

#include <string>

#include "pricelab/rng.hpp"

namespace pricelab {

// Standard-normal tail helpers, exposed for testing.
namespace gaussian {
// exp(x^2) * erfc(x) for x >= 0; continued fraction beyond kErfcxSwitch.
double erfcx(double x);
inline constexpr double kErfcxSwitch = 10.0;
// log(1 - Phi(z)) for the standard normal, accurate over the full double range.
double log_sf(double z);
// f(z) / (1 - Phi(z)) for the standard normal, unsaturated.
double hazard(double z);
}  // namespace gaussian

struct HazardValue {
  double value;
  bool saturated;  // asymptotic fallback was used
};

// A strictly log-concave noise law with closed-form density and tails.
// Immutable value type; cheap to copy.
class NoiseModel {
 public:
  enum class Kind { Gaussian, Logistic };

  static NoiseModel gaussian(double sigma);
  static NoiseModel logistic(double scale);

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  std::string describe() const;

  double cdf(double w) const;
  double sf(double w) const;
  double pdf(double w) const;
  double pdf_derivative(double w) const;
  double log_pdf(double w) const;
  double log_cdf(double w) const;
  double log_sf(double w) const;

  // f'(w) / f(w).
  double score(double w) const;
  // f / (1 - F), with saturation to w + 1/w (standardized) beyond kSaturation.
  HazardValue hazard_checked(double w) const;
  double hazard(double w) const { return hazard_checked(w).value; }
  // f / F.
  double reverse_hazard(double w) const;

  // -d^2/dw^2 log(1 - F(w)) and -d^2/dw^2 log F(w); both positive.
  double curvature_sf(double w) const;
  double curvature_cdf(double w) const;
  // Global upper bound on both curvatures.
  double curvature_bound() const;

  // sup f and sup |f'|.
  double pdf_sup() const;
  double pdf_derivative_sup() const;

  double sample(Rng& rng) const;

  // Standardized |w| beyond which hazard() uses its asymptotic expansion.
  static constexpr double kSaturation = 45.0;

 private:
  NoiseModel(Kind kind, double scale) : kind_(kind), scale_(scale) {}

  Kind kind_;
  double scale_;
};

}  // namespace pricelab
