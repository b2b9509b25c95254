#include "pricelab/noise.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "pricelab/errors.hpp"

namespace pricelab {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInvSqrtPi = std::numbers::inv_sqrtpi;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_finite(double w) {
  if (!std::isfinite(w)) throw DomainError("noise model evaluated at a non-finite argument");
}

// log(1 + exp(a)) without overflow.
double softplus(double a) {
  return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

double logistic_cdf(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

namespace gaussian {

double erfcx(double x) {
  if (x < kErfcxSwitch) return std::exp(x * x) * std::erfc(x);
  // Laplace continued fraction, evaluated bottom-up:
  // erfcx(x) = (1/sqrt(pi)) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
  // At x >= 10 a depth of 40 is far below double precision.
  double t = x;
  for (int n = 40; n >= 1; --n) t = x + (0.5 * n) / t;
  return kInvSqrtPi / t;
}

double log_sf(double z) {
  const double x = z / kSqrt2;
  if (x < 0.0) return std::log1p(-0.5 * std::erfc(-x));
  if (x < kErfcxSwitch) return std::log(0.5 * std::erfc(x));
  return -std::numbers::ln2 - x * x + std::log(erfcx(x));
}

double hazard(double z) {
  if (z <= 0.0) {
    const double density = std::exp(-0.5 * z * z - kLogSqrt2Pi);
    return density / (0.5 * std::erfc(z / kSqrt2));
  }
  return std::sqrt(2.0 / std::numbers::pi) / erfcx(z / kSqrt2);
}

}  // namespace gaussian

NoiseModel NoiseModel::gaussian(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("Gaussian sigma must be positive");
  return NoiseModel(Kind::Gaussian, sigma);
}

NoiseModel NoiseModel::logistic(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("logistic scale must be positive");
  return NoiseModel(Kind::Logistic, scale);
}

std::string NoiseModel::describe() const {
  std::ostringstream os;
  os << (kind_ == Kind::Gaussian ? "gaussian(sigma=" : "logistic(s=") << scale_ << ")";
  return os.str();
}

double NoiseModel::cdf(double w) const {
  require_finite(w);
  const double z = w / scale_;
  if (kind_ == Kind::Gaussian) return 0.5 * std::erfc(-z / kSqrt2);
  return logistic_cdf(z);
}

double NoiseModel::sf(double w) const {
  require_finite(w);
  const double z = w / scale_;
  if (kind_ == Kind::Gaussian) return 0.5 * std::erfc(z / kSqrt2);
  return logistic_cdf(-z);
}

double NoiseModel::pdf(double w) const { return std::exp(log_pdf(w)); }

double NoiseModel::log_pdf(double w) const {
  require_finite(w);
  const double z = w / scale_;
  if (kind_ == Kind::Gaussian) return -0.5 * z * z - kLogSqrt2Pi - std::log(scale_);
  const double a = std::abs(z);
  return -a - 2.0 * std::log1p(std::exp(-a)) - std::log(scale_);
}

double NoiseModel::pdf_derivative(double w) const { return pdf(w) * score(w); }

double NoiseModel::score(double w) const {
  require_finite(w);
  if (kind_ == Kind::Gaussian) return -w / (scale_ * scale_);
  return -std::tanh(0.5 * w / scale_) / scale_;
}

double NoiseModel::log_cdf(double w) const {
  require_finite(w);
  const double z = w / scale_;
  if (kind_ == Kind::Gaussian) return gaussian::log_sf(-z);
  return -softplus(-z);
}

double NoiseModel::log_sf(double w) const {
  require_finite(w);
  const double z = w / scale_;
  if (kind_ == Kind::Gaussian) return gaussian::log_sf(z);
  return -softplus(z);
}

HazardValue NoiseModel::hazard_checked(double w) const {
  require_finite(w);
  const double z = w / scale_;
  if (kind_ == Kind::Logistic) return {logistic_cdf(z) / scale_, false};
  if (z > kSaturation) return {(z + 1.0 / z) / scale_, true};
  return {gaussian::hazard(z) / scale_, false};
}

double NoiseModel::reverse_hazard(double w) const {
  require_finite(w);
  if (kind_ == Kind::Logistic) return logistic_cdf(-w / scale_) / scale_;
  return hazard(-w);
}

double NoiseModel::curvature_sf(double w) const {
  require_finite(w);
  const double z = w / scale_;
  const double s2 = scale_ * scale_;
  if (kind_ == Kind::Logistic) {
    const double F = logistic_cdf(z);
    return F * (1.0 - F) / s2;
  }
  if (z > kSaturation) return (1.0 + 1.0 / (z * z)) / s2;
  const double lam = gaussian::hazard(z);
  return lam * (lam - z) / s2;
}

double NoiseModel::curvature_cdf(double w) const {
  if (kind_ == Kind::Logistic) return curvature_sf(w);
  return curvature_sf(-w);
}

double NoiseModel::curvature_bound() const {
  const double s2 = scale_ * scale_;
  return kind_ == Kind::Gaussian ? 1.0 / s2 : 0.25 / s2;
}

double NoiseModel::pdf_sup() const {
  if (kind_ == Kind::Gaussian) return 1.0 / (scale_ * std::sqrt(2.0 * std::numbers::pi));
  return 0.25 / scale_;
}

double NoiseModel::pdf_derivative_sup() const {
  const double s2 = scale_ * scale_;
  if (kind_ == Kind::Gaussian) return 1.0 / (s2 * std::sqrt(2.0 * std::numbers::pi * std::numbers::e));
  // max of p(1-p)(1-2p) over p in (0,1), attained at p = (3 - sqrt 3)/6.
  return 1.0 / (6.0 * std::sqrt(3.0) * s2);
}

double NoiseModel::sample(Rng& rng) const {
  if (kind_ == Kind::Gaussian) return std::normal_distribution<double>(0.0, scale_)(rng);
  // Inversion; the open interval keeps log finite.
  double u;
  do {
    u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  } while (u <= 0.0);
  return scale_ * std::log(u / (1.0 - u));
}

}  // namespace pricelab
