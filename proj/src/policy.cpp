#include "pricelab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pricelab/errors.hpp"

namespace pricelab {

namespace {

std::string join(const Vector& v) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
  return os.str();
}

std::string join(const std::vector<double>& v) {
  return join(Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))));
}

std::string join_matrix(const Matrix& m) {
  Matrix rt = m.transpose();  // row-major order
  return join(Vector(Eigen::Map<const Vector>(rt.data(), rt.size())));
}

}  // namespace

double Policy::propose(const Vector& x) {
  if (pending_) throw std::logic_error(name() + ": propose called twice without feedback");
  last_price_ = do_propose(x);
  last_x_ = x;
  pending_ = true;
  return last_price_;
}

void Policy::feedback(bool sold) {
  if (!pending_) throw std::logic_error(name() + ": feedback without a proposed price");
  pending_ = false;
  do_feedback(LossPoint{last_x_, last_price_, sold});
}

// ---------------------------------------------------------------------------

EmlpPolicy::EmlpPolicy(PricingProblem problem, MleOptions mle)
    : problem_(std::move(problem)), mle_(mle) {
  reset(0);
}

void EmlpPolicy::reset(std::uint64_t seed) {
  clear_pending();
  rng_.seed(seed);
  epoch_ = 0;
  epoch_length_ = 1;
  estimate_ = problem_.region().initial_point();
  batch_.clear();
  switches_ = 0;
  nonconverged_ = 0;
}

double EmlpPolicy::do_propose(const Vector& x) {
  if (epoch_ == 0) return std::uniform_real_distribution<double>(0.0, problem_.max_price())(rng_);
  return problem_.greedy_price_clamped(x.dot(estimate_));
}

void EmlpPolicy::do_feedback(const LossPoint& point) {
  batch_.push_back(point);
  if (batch_.size() < epoch_length_) return;
  refit();
}

void EmlpPolicy::refit() {
  const BatchObjective objective(std::move(batch_), problem_.noise());
  batch_.clear();
  const MleResult fit = solve_mle(objective, problem_.region(), estimate_, mle_);
  ++switches_;
  if (!fit.converged) ++nonconverged_;
  if (epoch_ > 0 && observer_) {
    observer_(EpochRecord{epoch_, epoch_length_, objective.points(), estimate_, fit.theta, fit.converged});
  }
  if (epoch_ > 0) epoch_length_ *= 2;
  ++epoch_;
  estimate_ = fit.theta;
}

std::string EmlpPolicy::snapshot() const {
  std::ostringstream os;
  os << "policy: emlp\n"
     << "epoch: " << epoch_ << "\n"
     << "epoch_length: " << epoch_length_ << "\n"
     << "epoch_position: " << batch_.size() << "\n"
     << "estimate: " << join(estimate_) << "\n"
     << "switches: " << switches_ << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

OnspParams onsp_default_hyperparams(const AnalysisConstants& constants, double parameter_bound,
                                    double feature_bound) {
  const double D = 2.0 * parameter_bound;
  const double G = std::sqrt(constants.gradient_sq_max) * feature_bound;
  const double gamma = 0.5 * std::min(1.0 / (4.0 * G * D), constants.exp_concavity);
  return {gamma, 1.0 / (gamma * gamma * D * D)};
}

OnspPolicy::OnspPolicy(PricingProblem problem, OnspParams params, std::optional<Vector> initial)
    : problem_(std::move(problem)), params_(params) {
  if (!(params.gamma > 0.0) || !(params.epsilon > 0.0)) throw DomainError("ONSP needs gamma > 0 and epsilon > 0");
  initial_ = initial ? *initial : problem_.region().initial_point();
  if (!problem_.region().contains(initial_, 1e-12)) throw DomainError("ONSP initial point outside H");
  reset(0);
}

void OnspPolicy::reset(std::uint64_t) {
  clear_pending();
  const int d = problem_.dimension();
  theta_ = initial_;
  A_ = params_.epsilon * Matrix::Identity(d, d);
  A_inv_ = Matrix::Identity(d, d) / params_.epsilon;
}

double OnspPolicy::do_propose(const Vector& x) { return problem_.greedy_price_clamped(x.dot(theta_)); }

void OnspPolicy::do_feedback(const LossPoint& point) {
  newton_step(loss_gradient(point, theta_, problem_.noise()));
}

void OnspPolicy::newton_step(const Vector& gradient) {
  if (gradient.squaredNorm() == 0.0) return;
  A_.noalias() += gradient * gradient.transpose();
  // Sherman-Morrison: (A + g g^T)^{-1} = A^{-1} - (A^{-1} g)(A^{-1} g)^T / (1 + g^T A^{-1} g).
  const Vector Ag = A_inv_ * gradient;
  A_inv_.noalias() -= (Ag * Ag.transpose()) / (1.0 + gradient.dot(Ag));
  A_inv_ = 0.5 * (A_inv_ + A_inv_.transpose()).eval();
  const Vector target = theta_ - (1.0 / params_.gamma) * (A_inv_ * gradient);
  theta_ = problem_.region().project_weighted(target, A_);
}

std::string OnspPolicy::snapshot() const {
  std::ostringstream os;
  os.precision(17);
  os << "policy: onsp\n"
     << "gamma: " << params_.gamma << "\n"
     << "epsilon: " << params_.epsilon << "\n"
     << "theta: " << join(theta_) << "\n"
     << "A: " << join_matrix(A_) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

Exp4Grid exp4_grid(const PricingProblem& problem, std::size_t horizon) {
  if (horizon == 0) throw DomainError("exp4_grid: horizon must be positive");
  const double shrink = std::cbrt(1.0 / static_cast<double>(horizon));
  const FeasibleRegion& region = problem.region();
  const int d = region.dimension();
  const double spacing = shrink * region.radius();
  const long steps = static_cast<long>(std::floor(region.radius() / spacing + 1e-9));
  const long lo = region.kind() == FeasibleRegion::Kind::OrthantBall ? 0 : -steps;

  Exp4Grid grid;
  std::vector<long> index(static_cast<std::size_t>(d), lo);
  while (true) {
    Vector theta = region.center();
    for (int i = 0; i < d; ++i) theta(i) += spacing * static_cast<double>(index[static_cast<std::size_t>(i)]);
    if (region.contains(theta, 1e-12)) grid.experts.push_back(std::move(theta));
    if (grid.experts.size() > 5'000'000) throw DomainError("exp4_grid: expert grid too large");
    int i = 0;
    while (i < d && ++index[static_cast<std::size_t>(i)] > steps) index[static_cast<std::size_t>(i++)] = lo;
    if (i == d) break;
  }

  const double v_max = problem.max_price();
  const double price_step = shrink * v_max;
  for (long k = 0; static_cast<double>(k) * price_step < v_max * (1.0 - 1e-9); ++k) {
    grid.arms.push_back(static_cast<double>(k) * price_step);
  }
  grid.arms.push_back(v_max);
  return grid;
}

void exp4_advice(const PricingProblem& problem, const Exp4Grid& grid, const Vector& x,
                 std::vector<int>& advice, Execution execution) {
  advice.resize(grid.experts.size());
  const auto& arms = grid.arms;
  for_each_index(
      grid.experts.size(),
      [&](std::size_t e) {
        const double price = problem.greedy_price_clamped(x.dot(grid.experts[e]));
        auto it = std::lower_bound(arms.begin(), arms.end(), price);
        if (it == arms.end()) {
          --it;
        } else if (it != arms.begin() && price - *(it - 1) <= *it - price) {
          --it;
        }
        advice[e] = static_cast<int>(it - arms.begin());
      },
      execution);
}

Exp4Policy::Exp4Policy(PricingProblem problem, Exp4Options options)
    : Exp4Policy(problem, exp4_grid(problem, options.horizon), options) {}

Exp4Policy::Exp4Policy(PricingProblem problem, Exp4Grid grid, Exp4Options options)
    : problem_(std::move(problem)), grid_(std::move(grid)), options_(options) {
  if (grid_.experts.empty() || grid_.arms.empty()) throw DomainError("EXP-4 needs experts and arms");
  if (options_.horizon == 0) throw DomainError("EXP-4 needs a positive horizon");
  if (!std::is_sorted(grid_.arms.begin(), grid_.arms.end())) throw DomainError("EXP-4 arms must be sorted");
  const double N = static_cast<double>(grid_.experts.size());
  const double K = static_cast<double>(grid_.arms.size());
  const double T = static_cast<double>(options_.horizon);
  learning_rate_ = std::sqrt(2.0 * std::log(N) / (T * K));
  exploration_ = options_.exploration
                     ? *options_.exploration
                     : std::min(1.0, std::sqrt(K * std::log(N) / ((std::numbers::e - 1.0) * T)));
  if (!(exploration_ >= 0.0 && exploration_ <= 1.0)) throw DomainError("EXP-4 exploration must be in [0, 1]");
  reset(0);
}

void Exp4Policy::reset(std::uint64_t seed) {
  clear_pending();
  rng_.seed(seed);
  const std::size_t n = grid_.experts.size();
  log_weights_.assign(n, 0.0);
  weights_.assign(n, 1.0 / static_cast<double>(n));
  chosen_arm_ = -1;
  clipped_ = 0;
}

std::vector<double> Exp4Policy::mix(const std::vector<int>& advice) const {
  const std::size_t K = grid_.arms.size();
  std::vector<double> p(K, exploration_ / static_cast<double>(K));
  for (std::size_t e = 0; e < advice.size(); ++e) {
    p[static_cast<std::size_t>(advice[e])] += (1.0 - exploration_) * weights_[e];
  }
  return p;
}

std::vector<double> Exp4Policy::arm_probabilities(const Vector& x) const {
  std::vector<int> advice;
  exp4_advice(problem_, grid_, x, advice, options_.execution);
  return mix(advice);
}

double Exp4Policy::do_propose(const Vector& x) {
  exp4_advice(problem_, grid_, x, advice_, options_.execution);
  probabilities_ = mix(advice_);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  double cumulative = 0.0;
  chosen_arm_ = static_cast<int>(probabilities_.size()) - 1;
  for (std::size_t a = 0; a < probabilities_.size(); ++a) {
    cumulative += probabilities_[a];
    if (u < cumulative) {
      chosen_arm_ = static_cast<int>(a);
      break;
    }
  }
  return grid_.arms[static_cast<std::size_t>(chosen_arm_)];
}

void Exp4Policy::do_feedback(const LossPoint& point) {
  const double reward = point.sold ? point.price : 0.0;
  double p = probabilities_[static_cast<std::size_t>(chosen_arm_)];
  if (p < 1e-12) {
    p = 1e-12;
    ++clipped_;
  }
  const double estimate = (reward / problem_.max_price()) / p;
  if (estimate <= 0.0) return;
  for (std::size_t e = 0; e < advice_.size(); ++e) {
    if (advice_[e] == chosen_arm_) log_weights_[e] += learning_rate_ * estimate;
  }
  const double top = *std::max_element(log_weights_.begin(), log_weights_.end());
  double total = 0.0;
  for (std::size_t e = 0; e < log_weights_.size(); ++e) {
    log_weights_[e] -= top;
    weights_[e] = std::exp(log_weights_[e]);
    total += weights_[e];
  }
  for (double& w : weights_) w /= total;
}

std::string Exp4Policy::snapshot() const {
  std::ostringstream os;
  os.precision(17);
  os << "policy: exp4\n"
     << "experts: " << grid_.experts.size() << "\n"
     << "arms: " << join(grid_.arms) << "\n"
     << "exploration: " << exploration_ << "\n"
     << "learning_rate: " << learning_rate_ << "\n"
     << "weights: " << join(weights_) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

OraclePolicy::OraclePolicy(PricingProblem problem, Vector theta_star)
    : problem_(std::move(problem)), theta_star_(std::move(theta_star)) {
  if (theta_star_.size() != problem_.dimension()) throw DomainError("oracle: theta* dimension mismatch");
}

double OraclePolicy::do_propose(const Vector& x) {
  return problem_.greedy_price_clamped(x.dot(theta_star_));
}

std::string OraclePolicy::snapshot() const { return "policy: oracle\ntheta: " + join(theta_star_) + "\n"; }

std::string ConstantPricePolicy::snapshot() const {
  std::ostringstream os;
  os.precision(17);
  os << "policy: constant\nprice: " << price_ << "\n";
  return os.str();
}

}  // namespace pricelab
