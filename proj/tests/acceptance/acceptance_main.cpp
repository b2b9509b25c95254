// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pricelab/experiment.hpp"
#include "pricelab/verify.hpp"

using namespace pricelab;

namespace {

struct Verdict {
  bool passed;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ExperimentConfig default_config() { return load_config(std::string(PRICELAB_SOURCE_DIR) + "/configs/default.yaml"); }

// Reg(t)/ln t over the last three checkpoints may rise by no more than the
// larger Wald half-width (also divided by ln t) of each consecutive pair.
bool flat_within_band(const AggregateStats& s, std::string& detail) {
  const std::size_t n = s.t.size();
  if (n < 3 || s.halfwidth.size() != n) {
    detail = "not enough checkpoints or repetitions for the band check";
    return false;
  }
  bool ok = true;
  std::ostringstream os;
  os << "Reg/ln t";
  for (std::size_t i = n - 3; i < n; ++i) {
    const double lt = std::log(static_cast<double>(s.t[i]));
    os << " " << s.mean[i] / lt << "+-" << s.halfwidth[i] / lt;
    if (i > n - 3) {
      const double lp = std::log(static_cast<double>(s.t[i - 1]));
      const double band = std::max(s.halfwidth[i] / lt, s.halfwidth[i - 1] / lp);
      ok = ok && s.mean[i] / lt <= s.mean[i - 1] / lp + band;
    }
  }
  detail = os.str();
  return ok;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

Verdict stochastic_log_regret(const ExperimentConfig& c) {
  bool ok = true;
  std::string detail;
  for (const char* policy : {"emlp", "onsp"}) {
    const auto start = std::chrono::steady_clock::now();
    const auto pair = run_pair(c, policy, ScenarioKind::StochasticIID);
    std::string band;
    const bool flat = flat_within_band(pair.stats, band);
    const double slope = pair.stats.slope->slope;
    ok = ok && slope <= 0.30 && flat;
    detail += std::string(policy) + " slope " + fmt(slope) + (flat ? " flat" : " RISING") + " (" + band + ", " +
              fmt(seconds_since(start)) + " s); ";
  }
  return {ok, detail};
}

Verdict adversarial_separation(const ExperimentConfig& c) {
  const double onsp = run_pair(c, "onsp", ScenarioKind::AdversarialAlternating).stats.slope->slope;
  const double emlp = run_pair(c, "emlp", ScenarioKind::AdversarialAlternating).stats.slope->slope;
  const bool ok = onsp <= 0.30 && emlp >= 0.80 && std::abs(emlp - 0.912) <= 0.12;
  return {ok, "onsp slope " + fmt(onsp) + " (<= 0.30), emlp slope " + fmt(emlp) + " (>= 0.80, 0.912 +- 0.12)"};
}

Verdict exp4_scaling(ExperimentConfig c) {
  c.policies.exp4 = Exp4Spec{.horizon_cap = 4096};
  const auto start = std::chrono::steady_clock::now();
  const auto pair = run_pair(c, "exp4", ScenarioKind::StochasticIID);
  const double slope = pair.stats.slope->slope;
  const double secs = seconds_since(start);
  return {slope >= 0.55 && slope <= 0.85 && secs <= 1200.0,
          "slope " + fmt(slope) + " over [" + std::to_string(pair.window.lo) + ", " + std::to_string(pair.window.hi) +
              "] in [0.55, 0.85], " + fmt(secs) + " s"};
}

Verdict invariant_suite() {
  const auto start = std::chrono::steady_clock::now();
  const auto results = run_verification({});
  const double secs = seconds_since(start);
  std::string failed;
  for (const auto& r : results) {
    if (!r.passed) failed += " " + r.name + " (" + r.detail + ")";
  }
  const bool ok = failed.empty() && secs <= 60.0;
  return {ok, std::to_string(results.size()) + " checks, " + fmt(secs) + " s" +
                  (failed.empty() ? "" : ", failed:" + failed)};
}

Verdict mle_consistency() {
  const PricingProblem problem(NoiseModel::gaussian(0.25), FeasibleRegion::orthant_ball(2, 1.0), 1.0);
  Vector theta_star(2);
  theta_star << 0.5, 0.5;
  const Scenario sc{.kind = ScenarioKind::StochasticIID, .problem = problem, .theta_star = theta_star};
  std::vector<double> medians;
  for (std::size_t n : {std::size_t{1} << 10, std::size_t{1} << 12, std::size_t{1} << 14}) {
    std::vector<double> errors(20);
    for_each_index(errors.size(), [&](std::size_t s) {
      // Uniform prices on the price window, features from the stochastic law.
      const std::uint64_t seed = derive_seed(20190601, 500 + s);
      Environment env(sc, seed);
      Rng rng(derive_seed(seed, stream::kPolicy));
      std::uniform_real_distribution<double> price(0.0, problem.max_price());
      std::vector<LossPoint> batch;
      batch.reserve(n);
      for (std::size_t t = 1; t <= n; ++t) {
        const Vector x = env.next_feature(t);
        const double v = price(rng);
        batch.push_back({x, v, env.resolve_sale(x.dot(theta_star), v).sold});
      }
      const BatchObjective objective(std::move(batch), problem.noise(), Execution::Serial);
      errors[s] = (solve_mle(objective, problem.region(), problem.region().initial_point()).theta - theta_star).norm();
    });
    std::nth_element(errors.begin(), errors.begin() + 10, errors.end());
    const double hi = errors[10];
    const double lo = *std::max_element(errors.begin(), errors.begin() + 10);
    medians.push_back(0.5 * (lo + hi));
  }
  const double r1 = medians[0] / medians[1], r2 = medians[1] / medians[2];
  const bool ok = r1 >= 1.5 && r1 <= 3.0 && r2 >= 1.5 && r2 <= 3.0;
  return {ok, "median errors " + fmt(medians[0] * 1e3) + "e-3, " + fmt(medians[1] * 1e3) + "e-3, " +
                  fmt(medians[2] * 1e3) + "e-3; ratios " + fmt(r1) + ", " + fmt(r2) + " in [1.5, 3.0]"};
}

Verdict surrogate_gap(const ExperimentConfig& c) {
  const PricingProblem problem = c.problem();
  const Scenario sc = c.scenario(ScenarioKind::StochasticIID);
  const auto constants = compute_constants(problem.noise(), problem.valuation_bound());
  const double bound = constants.gradient_sq_max / constants.curvature_min;
  const std::size_t R = 20;
  std::vector<std::vector<EpochGap>> runs(R);
  for_each_index(R, [&](std::size_t r) {
    runs[r] = emlp_surrogate_gaps(problem, sc, std::size_t{1} << 14, derive_seed(c.seed, r));
  });
  bool ok = true;
  double worst = -1e300;
  int worst_epoch = 0;
  for (int k = 3; k <= 14; ++k) {
    double sum = 0.0;
    std::size_t seen = 0;
    for (const auto& run : runs) {
      for (const auto& g : run) {
        if (g.epoch == k) sum += g.scaled, ++seen;
      }
    }
    const double mean = sum / static_cast<double>(R);
    ok = ok && seen == R && mean <= bound;
    if (mean > worst) worst = mean, worst_epoch = k;
  }
  return {ok, "largest epoch mean " + fmt(worst) + " (epoch " + std::to_string(worst_epoch) + ") vs C_exp/C_down " +
                  fmt(bound)};
}

Verdict lower_bound_geometry() {
  const double u = lower_bound_valuation();
  bool ok = true;
  double min_gap = 1e300, min_ratio = 1e300;
  for (double s : {0.6, 0.75, 0.9}) {
    const auto m = NoiseModel::gaussian(s);
    const double J = greedy_price(m, u);
    ok = ok && J < u - 1e-9 && std::abs(J - u) >= 0.4 * (1 - s) - 1e-9;
    min_gap = std::min(min_gap, std::abs(J - u) - 0.4 * (1 - s));
    const double best = expected_reward(m, J, u);
    for (int i = 1; i <= 1000; ++i) {
      const double v = u * i / 1001.0;
      const double drop = best - expected_reward(m, v, u);
      ok = ok && drop >= (J - v) * (J - v) / 60.0 - 1e-9;
      if (std::abs(J - v) > 1e-6) min_ratio = std::min(min_ratio, drop / ((J - v) * (J - v)));
    }
  }
  return {ok, "min |J - u*| - 2/5 (1 - sigma) = " + fmt(min_gap) + ", min reward drop / (v* - v)^2 = " +
                  fmt(min_ratio) + " (>= 1/60)"};
}

}  // namespace

int main() {
  const ExperimentConfig config = default_config();
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"stochastic logarithmic regret", [&] { return stochastic_log_regret(config); }},
      {"adversarial separation", [&] { return adversarial_separation(config); }},
      {"EXP-4 scaling", [&] { return exp4_scaling(config); }},
      {"invariant suite", invariant_suite},
      {"MLE consistency rate", mle_consistency},
      {"per-epoch surrogate gap", [&] { return surrogate_gap(config); }},
      {"lower-bound geometry", lower_bound_geometry},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += !v.passed;
    std::printf("criterion %zu %s: %s  %s\n", i + 1, v.passed ? "PASS" : "FAIL", criteria[i].first.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
