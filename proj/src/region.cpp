#include "pricelab/region.hpp"

#include <cmath>
#include <limits>

#include "pricelab/errors.hpp"

namespace pricelab {

namespace {

constexpr int kExactOrthantMaxDim = 8;

void require_spd(const Matrix& A, int dim) {
  if (A.rows() != dim || A.cols() != dim) throw DomainError("weighted projection: matrix shape mismatch");
  const double scale = A.cwiseAbs().maxCoeff();
  if (!((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale)) {
    throw DomainError("weighted projection: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw DomainError("weighted projection: matrix is not positive definite");
  }
}

double weighted_distance(const Vector& a, const Vector& b, const Matrix& A) {
  const Vector d = a - b;
  return d.dot(A * d);
}

}  // namespace

FeasibleRegion FeasibleRegion::ball(Vector center, double radius) {
  if (!(radius > 0.0) || center.size() == 0) throw DomainError("ball region needs a positive radius");
  return FeasibleRegion(Kind::Ball, std::move(center), radius);
}

FeasibleRegion FeasibleRegion::orthant_ball(int dimension, double radius) {
  if (!(radius > 0.0) || dimension <= 0) throw DomainError("orthant ball needs d > 0 and radius > 0");
  return FeasibleRegion(Kind::OrthantBall, Vector::Zero(dimension), radius);
}

Vector FeasibleRegion::initial_point() const {
  if (kind_ == Kind::Ball) return center_;
  return Vector::Constant(dimension(), 0.5 * radius_ / std::sqrt(static_cast<double>(dimension())));
}

double FeasibleRegion::violation(const Vector& theta) const {
  double v = std::max(0.0, (theta - center_).norm() - radius_);
  if (kind_ == Kind::OrthantBall) v = std::max(v, -theta.minCoeff());
  return v;
}

bool FeasibleRegion::contains(const Vector& theta, double tol) const {
  return theta.size() == center_.size() && violation(theta) <= tol;
}

std::pair<double, double> FeasibleRegion::linear_range(const Vector& x) const {
  if (kind_ == Kind::Ball) {
    const double mid = x.dot(center_);
    const double half = radius_ * x.norm();
    return {mid - half, mid + half};
  }
  const double hi = radius_ * x.cwiseMax(0.0).norm();
  const double lo = -radius_ * (-x).cwiseMax(0.0).norm();
  return {lo, hi};
}

Vector FeasibleRegion::project(const Vector& theta) const {
  Vector p = kind_ == Kind::OrthantBall ? Vector(theta.cwiseMax(0.0)) : theta;
  const Vector offset = p - center_;
  const double n = offset.norm();
  if (n > radius_) p = center_ + offset * (radius_ / n);
  return p;
}

Vector FeasibleRegion::project_weighted(const Vector& target, const Matrix& A) const {
  require_spd(A, dimension());
  if (contains(target, 0.0)) return target;
  if (kind_ == Kind::Ball) return detail::weighted_ball_projection(target, A, center_, radius_);

  const int d = dimension();
  if (d > kExactOrthantMaxDim) return detail::weighted_orthant_ball_projection_pg(target, A, radius_);

  // Ball-only relaxation first: if its minimizer is in the orthant it is optimal.
  Vector best = detail::weighted_ball_projection(target, A, center_, radius_);
  if (best.minCoeff() >= 0.0) return best;

  // Active-set enumeration over the set S of coordinates pinned at zero. The
  // optimum's zero set S0 makes it the minimizer of the face-restricted ball
  // problem, so the best feasible candidate over all S is exact.
  double best_value = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    std::vector<int> free_idx, zero_idx;
    for (int i = 0; i < d; ++i) ((mask >> i) & 1u ? zero_idx : free_idx).push_back(i);
    Vector candidate = Vector::Zero(d);
    if (!free_idx.empty()) {
      const auto nf = static_cast<Eigen::Index>(free_idx.size());
      const auto nz = static_cast<Eigen::Index>(zero_idx.size());
      Matrix A_ff(nf, nf), A_fz(nf, nz);
      Vector t_f(nf), t_z(nz);
      for (Eigen::Index i = 0; i < nf; ++i) {
        t_f(i) = target(free_idx[i]);
        for (Eigen::Index j = 0; j < nf; ++j) A_ff(i, j) = A(free_idx[i], free_idx[j]);
        for (Eigen::Index j = 0; j < nz; ++j) A_fz(i, j) = A(free_idx[i], zero_idx[j]);
      }
      for (Eigen::Index j = 0; j < nz; ++j) t_z(j) = target(zero_idx[j]);
      const Vector z_f = t_f + A_ff.ldlt().solve(A_fz * t_z);
      const Vector p = detail::weighted_ball_projection(z_f, A_ff, Vector::Zero(nf), radius_);
      if (p.minCoeff() < -1e-12 * (1.0 + p.norm())) continue;
      for (Eigen::Index i = 0; i < nf; ++i) candidate(free_idx[i]) = std::max(0.0, p(i));
    }
    const double value = weighted_distance(candidate, target, A);
    if (value < best_value) {
      best_value = value;
      best = candidate;
    }
  }
  return best;
}

namespace detail {

Vector weighted_ball_projection(const Vector& target, const Matrix& A, const Vector& center,
                                double radius) {
  const Vector b = target - center;
  if (b.norm() <= radius) return target;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  const Vector lam = eig.eigenvalues();
  const Vector c = eig.eigenvectors().transpose() * b;
  auto offset = [&](double mu) -> Vector {
    return eig.eigenvectors() * (lam.array() * c.array() / (lam.array() + mu)).matrix();
  };
  double lo = 0.0;
  double hi = std::max(lam.maxCoeff(), 1e-300);
  while (offset(hi).norm() > radius) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (offset(mid).norm() > radius ? lo : hi) = mid;
  }
  Vector y = offset(hi);
  const double n = y.norm();
  if (n > radius) y *= radius / n;
  return center + y;
}

Vector weighted_orthant_ball_projection_pg(const Vector& target, const Matrix& A, double radius,
                                           int max_iterations) {
  const auto region = FeasibleRegion::orthant_ball(static_cast<int>(target.size()), radius);
  const double step = 1.0 / A.trace();
  Vector theta = region.project(target);
  for (int it = 0; it < max_iterations; ++it) {
    const Vector next = region.project(theta - step * (A * (theta - target)));
    const double moved = (next - theta).norm();
    theta = next;
    if (moved <= 1e-15 * (1.0 + theta.norm())) break;
  }
  return theta;
}

}  // namespace detail

}  // namespace pricelab
