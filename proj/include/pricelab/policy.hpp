#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pricelab/loss.hpp"
#include "pricelab/pricing.hpp"

namespace pricelab {

// Online pricing policy. Each round: propose(x) once, then feedback(sold).
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  // Restores the initial state; `seed` drives any internal randomization.
  virtual void reset(std::uint64_t seed) = 0;
  // Plain-text state dump, one `key: values` line per field.
  virtual std::string snapshot() const = 0;

  double propose(const Vector& x);
  void feedback(bool sold);

 protected:
  virtual double do_propose(const Vector& x) = 0;
  virtual void do_feedback(const LossPoint& point) = 0;
  void clear_pending() { pending_ = false; }

 private:
  bool pending_ = false;
  Vector last_x_;
  double last_price_ = 0.0;
};

// ---------------------------------------------------------------------------
// Epoch-based maximum-likelihood pricing.

struct EpochRecord {
  int epoch;                             // k >= 1
  std::size_t length;                    // tau_k = 2^(k-1)
  const std::vector<LossPoint>& batch;   // the epoch's rounds
  const Vector& estimate_used;           // theta_k, priced with during the epoch
  const Vector& next_estimate;           // theta_{k+1}, fit on the batch
  bool converged;
};

class EmlpPolicy : public Policy {
 public:
  using EpochObserver = std::function<void(const EpochRecord&)>;

  explicit EmlpPolicy(PricingProblem problem, MleOptions mle = {});

  std::string name() const override { return "emlp"; }
  void reset(std::uint64_t seed) override;
  std::string snapshot() const override;

  void set_epoch_observer(EpochObserver observer) { observer_ = std::move(observer); }

  // 0 during the bootstrap round, then the current epoch index.
  int epoch() const { return epoch_; }
  std::size_t epoch_length() const { return epoch_length_; }
  const Vector& estimate() const { return estimate_; }
  // Number of MLE solves so far (times the pricing rule changed).
  int switches() const { return switches_; }
  int nonconverged_solves() const { return nonconverged_; }

 protected:
  double do_propose(const Vector& x) override;
  void do_feedback(const LossPoint& point) override;

 private:
  void refit();

  PricingProblem problem_;
  MleOptions mle_;
  EpochObserver observer_;
  Rng rng_;
  int epoch_ = 0;
  std::size_t epoch_length_ = 1;
  Vector estimate_;
  std::vector<LossPoint> batch_;
  int switches_ = 0;
  int nonconverged_ = 0;
};

// ---------------------------------------------------------------------------
// Online Newton step pricing.

struct OnspParams {
  double gamma;
  double epsilon;
};

// gamma = min(1/(4GD), alpha)/2 and epsilon = 1/(gamma^2 D^2) with
// D = 2 B1, G = sqrt(C_exp) B2 and alpha = C_down / C_exp.
OnspParams onsp_default_hyperparams(const AnalysisConstants& constants, double parameter_bound,
                                    double feature_bound);

class OnspPolicy : public Policy {
 public:
  OnspPolicy(PricingProblem problem, OnspParams params, std::optional<Vector> initial = std::nullopt);

  std::string name() const override { return "onsp"; }
  void reset(std::uint64_t seed) override;
  std::string snapshot() const override;

  const Vector& theta() const { return theta_; }
  const Matrix& gram() const { return A_; }
  const Matrix& gram_inverse() const { return A_inv_; }
  const OnspParams& params() const { return params_; }

  // One update with an externally supplied gradient; exposed for testing.
  void newton_step(const Vector& gradient);

 protected:
  double do_propose(const Vector& x) override;
  void do_feedback(const LossPoint& point) override;

 private:
  PricingProblem problem_;
  OnspParams params_;
  Vector initial_;
  Vector theta_;
  Matrix A_;
  Matrix A_inv_;
};

// ---------------------------------------------------------------------------
// EXP-4 over a discretized policy class: experts are parameter vectors on a
// grid over H, arms are prices on a grid over [0, B + J(0)].

struct Exp4Options {
  std::size_t horizon;
  // Uniform exploration rate; default min(1, sqrt(K ln N / ((e - 1) T))).
  std::optional<double> exploration = std::nullopt;
  Execution execution = Execution::Parallel;
};

struct Exp4Grid {
  std::vector<Vector> experts;
  std::vector<double> arms;
};

// Lattice of spacing T^{-1/3} B1 intersected with H, and prices
// {0, d, 2d, ..., B + J(0)} with d = T^{-1/3} (B + J(0)).
Exp4Grid exp4_grid(const PricingProblem& problem, std::size_t horizon);

// Nearest-arm recommendation of every expert for features x.
void exp4_advice(const PricingProblem& problem, const Exp4Grid& grid, const Vector& x,
                 std::vector<int>& advice, Execution execution);

class Exp4Policy : public Policy {
 public:
  Exp4Policy(PricingProblem problem, Exp4Options options);
  Exp4Policy(PricingProblem problem, Exp4Grid grid, Exp4Options options);

  std::string name() const override { return "exp4"; }
  void reset(std::uint64_t seed) override;
  std::string snapshot() const override;

  const Exp4Grid& grid() const { return grid_; }
  const std::vector<double>& weights() const { return weights_; }
  double exploration() const { return exploration_; }
  double learning_rate() const { return learning_rate_; }
  int clipped_probabilities() const { return clipped_; }

  // Arm distribution the policy would sample from for features x.
  std::vector<double> arm_probabilities(const Vector& x) const;

 protected:
  double do_propose(const Vector& x) override;
  void do_feedback(const LossPoint& point) override;

 private:
  std::vector<double> mix(const std::vector<int>& advice) const;

  PricingProblem problem_;
  Exp4Grid grid_;
  Exp4Options options_;
  double exploration_ = 0.0;
  double learning_rate_ = 0.0;
  Rng rng_;
  std::vector<double> log_weights_;
  std::vector<double> weights_;
  std::vector<int> advice_;
  std::vector<double> probabilities_;
  int chosen_arm_ = -1;
  int clipped_ = 0;
};

// ---------------------------------------------------------------------------
// Comparator policies.

class OraclePolicy : public Policy {
 public:
  OraclePolicy(PricingProblem problem, Vector theta_star);

  std::string name() const override { return "oracle"; }
  void reset(std::uint64_t) override { clear_pending(); }
  std::string snapshot() const override;

 protected:
  double do_propose(const Vector& x) override;
  void do_feedback(const LossPoint&) override {}

 private:
  PricingProblem problem_;
  Vector theta_star_;
};

class ConstantPricePolicy : public Policy {
 public:
  explicit ConstantPricePolicy(double price) : price_(price) {}

  std::string name() const override { return "constant"; }
  void reset(std::uint64_t) override { clear_pending(); }
  std::string snapshot() const override;

 protected:
  double do_propose(const Vector&) override { return price_; }
  void do_feedback(const LossPoint&) override {}

 private:
  double price_;
};

}  // namespace pricelab
