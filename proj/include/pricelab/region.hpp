#pragma once

#include <Eigen/Dense>

namespace pricelab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Bounded convex parameter set: a Euclidean ball, or the intersection of the
// origin-centered ball with the nonnegative orthant.
class FeasibleRegion {
 public:
  enum class Kind { Ball, OrthantBall };

  static FeasibleRegion ball(Vector center, double radius);
  static FeasibleRegion orthant_ball(int dimension, double radius);

  Kind kind() const { return kind_; }
  int dimension() const { return static_cast<int>(center_.size()); }
  double radius() const { return radius_; }
  // Ball center, or the origin for OrthantBall.
  const Vector& center() const { return center_; }
  // Interior starting point: the ball center, or (radius / 2) along the
  // orthant diagonal.
  Vector initial_point() const;

  bool contains(const Vector& theta, double tol = 1e-12) const;
  // Largest violation of any defining constraint (0 when inside).
  double violation(const Vector& theta) const;

  // [min, max] of x^T theta over the region.
  std::pair<double, double> linear_range(const Vector& x) const;

  Vector project(const Vector& theta) const;

  // argmin over the region of (theta - target)^T A (theta - target).
  // A must be symmetric positive definite.
  Vector project_weighted(const Vector& target, const Matrix& A) const;

 private:
  FeasibleRegion(Kind kind, Vector center, double radius)
      : kind_(kind), center_(std::move(center)), radius_(radius) {}

  Kind kind_;
  Vector center_;
  double radius_;
};

namespace detail {
// argmin over ||theta - center|| <= radius of the A-weighted distance to
// target, via the KKT form theta(mu) = center + (A + mu I)^{-1} A (target - center).
Vector weighted_ball_projection(const Vector& target, const Matrix& A, const Vector& center,
                                double radius);
// Projected gradient on the quadratic, step 1/trace(A). Used for OrthantBall in
// high dimension and as an independent check of the exact active-set solver.
Vector weighted_orthant_ball_projection_pg(const Vector& target, const Matrix& A, double radius,
                                           int max_iterations = 500);
}  // namespace detail

}  // namespace pricelab
