#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pricelab/environment.hpp"
#include "pricelab/policy.hpp"

namespace pricelab {

struct RoundRecord {
  Vector x;
  double valuation;  // u*_t = x^T theta*, hidden from the policy
  double price;
  bool sold;
  double reward;
  double regret;  // g(J(u*), u*) - g(price, u*)
};

struct Checkpoint {
  std::size_t t;
  double regret;  // cumulative Reg(t)
};

// {1, 2, 4, ..., 2^K <= T} plus T itself when T is not a power of two.
std::vector<std::size_t> dyadic_checkpoints(std::size_t horizon);

// Reg(t) / ln t; NaN for t < 2.
double regret_over_log(const Checkpoint& c);

// Expected (ex-ante) regret of one episode.
struct RegretTrace {
  std::vector<double> increments;      // rho_t for t = 1..T
  std::vector<Checkpoint> checkpoints;  // dyadic grid

  static RegretTrace from_increments(std::vector<double> increments);
  double total() const;
};

class EpisodeAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpisodeOptions {
  bool record_transcript = true;
  // Largest admissible price; defaults to the scenario's B + J(0).
  std::optional<double> price_ceiling = std::nullopt;
};

struct Episode {
  std::vector<RoundRecord> transcript;
  RegretTrace trace;
};

// Runs the protocol for T rounds. The policy is reset with a seed derived
// from `seed`; features and noise use the other derived streams.
Episode run_episode(Policy& policy, const Scenario& scenario, std::size_t horizon, std::uint64_t seed,
                    const EpisodeOptions& options = {});

struct SlopeFit {
  double slope;
  double standard_error;
  std::size_t points;
  std::size_t excluded;  // nonpositive regrets dropped from the window
};

struct Window {
  std::size_t lo;
  std::size_t hi;
};

// Slope window used when none is configured: [2^10, T] for T >= 2^14,
// otherwise [T / 2^6, T] (at least [2, T]).
Window default_window(std::size_t horizon);

// OLS of log2 Reg(t) on log2 t over checkpoints with t in [lo, hi].
SlopeFit fit_slope(const std::vector<Checkpoint>& points, Window window);

struct AggregateStats {
  std::size_t repetitions;
  std::vector<std::size_t> t;
  std::vector<double> mean;
  // 1.96 * sample std / sqrt(R); empty when R < 2.
  std::vector<double> halfwidth;
  std::optional<SlopeFit> slope;

  std::vector<Checkpoint> mean_checkpoints() const;
};

AggregateStats aggregate(const std::vector<RegretTrace>& traces, std::optional<Window> window = std::nullopt);

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;
using HorizonPolicyFactory = std::function<std::unique_ptr<Policy>(std::size_t horizon)>;

// Repetition r runs with seed derive_seed(master, r). Parallel over
// repetitions; the result does not depend on the execution mode.
std::vector<RegretTrace> run_repetitions(const PolicyFactory& factory, const Scenario& scenario,
                                         std::size_t horizon, std::size_t repetitions, std::uint64_t master_seed,
                                         Execution execution = Execution::Parallel,
                                         const EpisodeOptions& options = {});

// For policies that need the horizon in advance: repetition r runs one
// episode per horizon 2^k, k = 0..max_exponent, with seed
// derive_seed(derive_seed(master, r), 100 + k). The returned trace holds the
// final regret of each run at checkpoint t = 2^k.
std::vector<RegretTrace> run_horizon_sweep(const HorizonPolicyFactory& factory, const Scenario& scenario,
                                           std::size_t max_exponent, std::size_t repetitions,
                                           std::uint64_t master_seed, Execution execution = Execution::Parallel);

// Per-epoch surrogate gap of EMLP: L_k(theta_k) - L_k(theta*) on epoch k's
// batch, and the same scaled by (tau_k + 1) / d.
struct EpochGap {
  int epoch;
  std::size_t length;
  double gap;
  double scaled;
};

std::vector<EpochGap> emlp_surrogate_gaps(const PricingProblem& assumed, const Scenario& scenario,
                                          std::size_t horizon, std::uint64_t seed);

}  // namespace pricelab
