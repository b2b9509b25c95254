#include "pricelab/harness.hpp"

#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "pricelab/errors.hpp"

namespace pricelab {

std::vector<std::size_t> dyadic_checkpoints(std::size_t horizon) {
  std::vector<std::size_t> ts;
  for (std::size_t t = 1; t <= horizon; t *= 2) ts.push_back(t);
  if (horizon > 0 && !std::has_single_bit(horizon)) ts.push_back(horizon);
  return ts;
}

double regret_over_log(const Checkpoint& c) {
  if (c.t < 2) return std::numeric_limits<double>::quiet_NaN();
  return c.regret / std::log(static_cast<double>(c.t));
}

RegretTrace RegretTrace::from_increments(std::vector<double> increments) {
  RegretTrace trace;
  trace.increments = std::move(increments);
  const auto ts = dyadic_checkpoints(trace.increments.size());
  double cumulative = 0.0;
  std::size_t next = 0;
  for (std::size_t t = 1; t <= trace.increments.size(); ++t) {
    cumulative += trace.increments[t - 1];
    if (next < ts.size() && ts[next] == t) trace.checkpoints.push_back({t, cumulative}), ++next;
  }
  return trace;
}

double RegretTrace::total() const { return checkpoints.empty() ? 0.0 : checkpoints.back().regret; }

Episode run_episode(Policy& policy, const Scenario& scenario, std::size_t horizon, std::uint64_t seed,
                    const EpisodeOptions& options) {
  policy.reset(derive_seed(seed, stream::kPolicy));
  Environment env(scenario, seed);
  const NoiseModel& noise = scenario.problem.noise();
  const double ceiling = options.price_ceiling.value_or(scenario.problem.max_price());

  Episode episode;
  if (options.record_transcript) episode.transcript.reserve(horizon);
  std::vector<double> increments;
  increments.reserve(horizon);

  double cached_u = std::numeric_limits<double>::quiet_NaN();
  double cached_best = 0.0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    const Vector x = env.next_feature(t);
    const double u = x.dot(scenario.theta_star);
    const double price = policy.propose(x);
    if (!(price >= 0.0 && price <= ceiling + 1e-12)) {
      std::ostringstream os;
      os << policy.name() << " priced " << price << " at round " << t << ", outside [0, " << ceiling << "]";
      throw EpisodeAborted(os.str());
    }
    const SaleOutcome sale = env.resolve_sale(u, price);
    policy.feedback(sale.sold);

    if (u != cached_u) {
      cached_u = u;
      cached_best = expected_reward(noise, greedy_price(noise, std::max(u, 0.0)), u);
    }
    const double rho = cached_best - expected_reward(noise, price, u);
    increments.push_back(rho);
    if (options.record_transcript) {
      episode.transcript.push_back({x, u, price, sale.sold, sale.reward, rho});
    }
  }
  episode.trace = RegretTrace::from_increments(std::move(increments));
  return episode;
}

Window default_window(std::size_t horizon) {
  if (horizon >= (std::size_t{1} << 14)) return {std::size_t{1} << 10, horizon};
  return {std::max<std::size_t>(2, horizon >> 6), horizon};
}

SlopeFit fit_slope(const std::vector<Checkpoint>& points, Window window) {
  std::vector<double> xs, ys;
  std::size_t excluded = 0;
  for (const auto& c : points) {
    if (c.t < window.lo || c.t > window.hi) continue;
    if (!(c.regret > 0.0)) {
      ++excluded;
      continue;
    }
    xs.push_back(std::log2(static_cast<double>(c.t)));
    ys.push_back(std::log2(c.regret));
  }
  if (xs.size() < 3) throw DomainError("fit_slope: fewer than three positive checkpoints in the window");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (my + slope * (xs[i] - mx));
    ssr += r * r;
  }
  return {slope, std::sqrt(ssr / (n - 2.0) / sxx), xs.size(), excluded};
}

std::vector<Checkpoint> AggregateStats::mean_checkpoints() const {
  std::vector<Checkpoint> out;
  for (std::size_t i = 0; i < t.size(); ++i) out.push_back({t[i], mean[i]});
  return out;
}

AggregateStats aggregate(const std::vector<RegretTrace>& traces, std::optional<Window> window) {
  if (traces.empty()) throw DomainError("aggregate: no traces");
  AggregateStats stats;
  stats.repetitions = traces.size();
  const auto& grid = traces.front().checkpoints;
  for (const auto& tr : traces) {
    bool same = tr.checkpoints.size() == grid.size();
    for (std::size_t i = 0; same && i < grid.size(); ++i) same = tr.checkpoints[i].t == grid[i].t;
    if (!same) throw DomainError("aggregate: traces have different checkpoint grids");
  }
  const double R = static_cast<double>(traces.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sum = 0.0;
    for (const auto& tr : traces) sum += tr.checkpoints[i].regret;
    const double mean = sum / R;
    stats.t.push_back(grid[i].t);
    stats.mean.push_back(mean);
    if (traces.size() >= 2) {
      double ss = 0.0;
      for (const auto& tr : traces) ss += (tr.checkpoints[i].regret - mean) * (tr.checkpoints[i].regret - mean);
      stats.halfwidth.push_back(1.96 * std::sqrt(ss / (R - 1.0)) / std::sqrt(R));
    }
  }
  if (window) stats.slope = fit_slope(stats.mean_checkpoints(), *window);
  return stats;
}

namespace {

// Runs body(i) for i in [0, n), rethrowing the first failure after the loop.
template <typename Body>
void guarded_for(std::size_t n, Body&& body, Execution execution) {
  std::vector<std::exception_ptr> errors(n);
  for_each_index(
      n,
      [&](std::size_t i) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      },
      execution);
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<RegretTrace> run_repetitions(const PolicyFactory& factory, const Scenario& scenario,
                                         std::size_t horizon, std::size_t repetitions, std::uint64_t master_seed,
                                         Execution execution, const EpisodeOptions& options) {
  std::vector<RegretTrace> traces(repetitions);
  EpisodeOptions opts = options;
  opts.record_transcript = false;
  guarded_for(
      repetitions,
      [&](std::size_t r) {
        auto policy = factory();
        traces[r] = run_episode(*policy, scenario, horizon, derive_seed(master_seed, r), opts).trace;
      },
      execution);
  return traces;
}

std::vector<RegretTrace> run_horizon_sweep(const HorizonPolicyFactory& factory, const Scenario& scenario,
                                           std::size_t max_exponent, std::size_t repetitions,
                                           std::uint64_t master_seed, Execution execution) {
  const std::size_t runs = max_exponent + 1;
  std::vector<double> finals(repetitions * runs);
  EpisodeOptions opts;
  opts.record_transcript = false;
  // Largest horizons first so the parallel schedule balances better.
  guarded_for(
      repetitions * runs,
      [&](std::size_t job) {
        const std::size_t r = job % repetitions;
        const std::size_t k = max_exponent - job / repetitions;
        const std::size_t horizon = std::size_t{1} << k;
        auto policy = factory(horizon);
        const auto seed = derive_seed(derive_seed(master_seed, r), 100 + k);
        finals[r * runs + k] = run_episode(*policy, scenario, horizon, seed, opts).trace.total();
      },
      execution);
  std::vector<RegretTrace> traces(repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) {
    for (std::size_t k = 0; k < runs; ++k) traces[r].checkpoints.push_back({std::size_t{1} << k, finals[r * runs + k]});
  }
  return traces;
}

std::vector<EpochGap> emlp_surrogate_gaps(const PricingProblem& assumed, const Scenario& scenario,
                                          std::size_t horizon, std::uint64_t seed) {
  EmlpPolicy policy(assumed);
  std::vector<EpochGap> gaps;
  const double d = static_cast<double>(assumed.dimension());
  policy.set_epoch_observer([&](const EpochRecord& rec) {
    const BatchObjective objective(rec.batch, assumed.noise());
    const double gap = objective.value(rec.estimate_used) - objective.value(scenario.theta_star);
    gaps.push_back({rec.epoch, rec.length, gap, gap * (static_cast<double>(rec.length) + 1.0) / d});
  });
  EpisodeOptions opts;
  opts.record_transcript = false;
  run_episode(policy, scenario, horizon, seed, opts);
  return gaps;
}

}  // namespace pricelab
