#include "pricelab/experiment.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "json.hpp"
#include "pricelab/errors.hpp"

namespace pricelab {

PolicyFactory make_policy_factory(const ExperimentConfig& config, const std::string& policy) {
  const PricingProblem problem = config.problem();
  if (policy == "emlp" && config.policies.emlp) {
    MleOptions mle;
    mle.tolerance = config.policies.emlp->tolerance;
    return [problem, mle] { return std::make_unique<EmlpPolicy>(problem, mle); };
  }
  if (policy == "onsp" && config.policies.onsp) {
    OnspParams params{config.policies.onsp->gamma, config.policies.onsp->epsilon};
    if (config.policies.onsp->theory) {
      params = onsp_default_hyperparams(compute_constants(problem.noise(), problem.valuation_bound()),
                                        problem.parameter_bound(), problem.feature_bound());
    }
    return [problem, params] { return std::make_unique<OnspPolicy>(problem, params); };
  }
  throw DomainError("no factory for policy '" + policy + "'");
}

HorizonPolicyFactory make_exp4_factory(const ExperimentConfig& config) {
  if (!config.policies.exp4) throw DomainError("exp4 is not configured");
  const PricingProblem problem = config.problem();
  const auto exploration = config.policies.exp4->exploration;
  // Repetitions already run in parallel; the advice kernel stays serial.
  return [problem, exploration](std::size_t horizon) {
    return std::make_unique<Exp4Policy>(problem, Exp4Options{horizon, exploration, Execution::Serial});
  };
}

PairResult run_pair(const ExperimentConfig& config, const std::string& policy, ScenarioKind scenario,
                    Execution execution) {
  PairResult r;
  r.policy = policy;
  r.scenario = scenario;
  const Scenario sc = config.scenario(scenario);
  const auto start = std::chrono::steady_clock::now();
  if (policy == "exp4") {
    r.horizon = config.policies.exp4->horizon_cap;
    const auto exponent = static_cast<std::size_t>(std::bit_width(r.horizon) - 1);
    r.horizon = std::size_t{1} << exponent;
    r.window = config.slope_window && config.slope_window->hi <= r.horizon ? *config.slope_window
                                                                            : default_window(r.horizon);
    r.traces = run_horizon_sweep(make_exp4_factory(config), sc, exponent, config.repetitions, config.seed, execution);
  } else {
    r.horizon = config.horizon;
    r.window = config.slope_window.value_or(default_window(r.horizon));
    EpisodeOptions options;
    options.record_transcript = false;
    r.traces = run_repetitions(make_policy_factory(config, policy), sc, r.horizon, config.repetitions, config.seed,
                               execution, options);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (std::size_t i = 0; i < config.repetitions; ++i) r.seeds.push_back(derive_seed(config.seed, i));
  r.stats = aggregate(r.traces, r.window);
  return r;
}

void write_trace_csv(std::ostream& out, const PairResult& pair) {
  const bool with_hw = !pair.stats.halfwidth.empty();
  out << "t,rep,regret_cum,regret_over_logt,mean" << (with_hw ? ",wald_halfwidth" : "") << '\n';
  out << std::setprecision(10);
  for (std::size_t rep = 0; rep < pair.traces.size(); ++rep) {
    const auto& cps = pair.traces[rep].checkpoints;
    for (std::size_t i = 0; i < cps.size(); ++i) {
      out << cps[i].t << ',' << rep << ',' << cps[i].regret << ',';
      if (cps[i].t >= 2) out << regret_over_log(cps[i]);
      out << ',' << pair.stats.mean[i];
      if (with_hw) out << ',' << pair.stats.halfwidth[i];
      out << '\n';
    }
  }
}

std::string summary_json(const ExperimentConfig& config, const std::vector<PairResult>& pairs) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["config"] = ordered_json::parse(config_echo_json(config));
  j["seed_rule"] = "repetition r uses splitmix64 split derive_seed(seed, r); exp4 horizon 2^k uses "
                   "derive_seed(derive_seed(seed, r), 100 + k)";
  ordered_json runs = ordered_json::array();
  for (const auto& p : pairs) {
    ordered_json run;
    run["policy"] = p.policy;
    run["scenario"] = to_string(p.scenario);
    run["horizon"] = p.horizon;
    run["repetitions"] = p.traces.size();
    run["seeds"] = p.seeds;
    run["window"] = {p.window.lo, p.window.hi};
    if (p.stats.slope) {
      run["slope"] = p.stats.slope->slope;
      run["stderr"] = p.stats.slope->standard_error;
      run["slope_points"] = p.stats.slope->points;
      run["slope_excluded"] = p.stats.slope->excluded;
    } else {
      run["slope"] = nullptr;
      run["stderr"] = nullptr;
    }
    run["final_mean_regret"] = p.stats.mean.back();
    if (!p.stats.halfwidth.empty()) run["final_wald_halfwidth"] = p.stats.halfwidth.back();
    run["csv"] = p.csv.filename().string();
    runs.push_back(run);
  }
  j["runs"] = runs;
  return j.dump(2);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                std::ostream& log, Execution execution) {
  std::filesystem::create_directories(out_dir);
  ExperimentResult result;
  for (const auto& policy : config.policy_names()) {
    for (auto scenario : config.scenarios) {
      PairResult pair = run_pair(config, policy, scenario, execution);
      pair.csv = out_dir / (policy + "_" + to_string(scenario) + ".csv");
      std::ofstream csv(pair.csv);
      if (!csv) throw std::runtime_error("cannot write " + pair.csv.string());
      write_trace_csv(csv, pair);
      log << policy << " x " << to_string(scenario) << ": T=" << pair.horizon << " R=" << pair.traces.size()
          << " Reg(T)=" << pair.stats.mean.back();
      if (pair.stats.slope) log << " slope=" << pair.stats.slope->slope << " (se " << pair.stats.slope->standard_error << ")";
      log << " [" << std::fixed << std::setprecision(1) << pair.seconds << "s]" << std::defaultfloat
          << std::setprecision(6) << '\n';
      result.pairs.push_back(std::move(pair));
    }
  }
  result.summary = out_dir / "summary.json";
  std::ofstream js(result.summary);
  if (!js) throw std::runtime_error("cannot write " + result.summary.string());
  js << summary_json(config, result.pairs) << '\n';
  return result;
}

}  // namespace pricelab
