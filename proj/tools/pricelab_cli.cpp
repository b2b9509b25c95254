#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "pricelab/experiment.hpp"
#include "pricelab/verify.hpp"

using namespace pricelab;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kBadConfig = 2;

struct Globals {
  int workers = 0;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_run(const Globals& g, const std::string& path) {
  ExperimentConfig config;
  try {
    config = load_config(path);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kBadConfig;
  }
  if (g.seed) config.seed = *g.seed;
  if (!g.out.empty()) config.output = g.out;
  try {
    const auto result = run_experiment(config, config.output, std::cout);
    for (const auto& p : result.pairs) {
      if (p.stats.slope && p.stats.slope->excluded > 0) {
        std::cerr << "warning: " << p.policy << " x " << to_string(p.scenario) << ": "
                  << p.stats.slope->excluded << " nonpositive checkpoints left out of the slope fit\n";
      }
    }
    std::cout << "wrote " << result.pairs.size() << " traces and " << result.summary.string() << '\n';
  } catch (const EpisodeAborted& e) {
    std::cerr << "run aborted: " << e.what() << '\n';
    return kFailed;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kFailed;
  }
  return kOk;
}

int cmd_verify(bool fast, const std::string& fault, const std::string& only) {
  VerifyOptions opts;
  opts.fast = fast;
  if (fault == "negate-curvature-min") {
    opts.fault = Fault::NegateCurvatureMin;
  } else if (!fault.empty()) {
    std::cerr << "unknown fault '" << fault << "'\n";
    return kBadConfig;
  }
  return print_verification(std::cout, run_verification(opts, only)) ? kOk : kFailed;
}

int cmd_lower_bound(std::size_t T, std::size_t reps, std::uint64_t seed, const std::string& which) {
  if (T <= 16) {
    std::cerr << "lower-bound-demo needs T > 16\n";
    return kBadConfig;
  }
  const double u = lower_bound_valuation();
  const auto [s1, s2] = lower_bound_pair(T);
  // B1 = 2 so that u* = sqrt(pi/2) is reachable with a unit feature.
  const PricingProblem assumed(NoiseModel::gaussian(s1), FeasibleRegion::orthant_ball(2, 2.0), 1.0);
  const Scenario first = Scenario::fixed_valuation(assumed, u);
  const Scenario second = Scenario::fixed_valuation(assumed.with_noise(NoiseModel::gaussian(s2)), u);
  EpisodeOptions opts;
  opts.record_transcript = false;
  opts.price_ceiling = assumed.max_price();

  std::vector<std::pair<std::string, PolicyFactory>> policies;
  auto want = [&](const char* name) { return which == "all" || which == name; };
  if (want("oracle")) {
    policies.emplace_back("oracle", [&] { return std::make_unique<OraclePolicy>(assumed, first.theta_star); });
  }
  if (want("emlp")) policies.emplace_back("emlp", [&] { return std::make_unique<EmlpPolicy>(assumed); });
  if (want("onsp")) {
    policies.emplace_back("onsp", [&] { return std::make_unique<OnspPolicy>(assumed, OnspParams{0.5, 1.0}); });
  }
  if (want("exp4")) {
    policies.emplace_back("exp4", [&] {
      return std::make_unique<Exp4Policy>(assumed, Exp4Options{T, std::nullopt, Execution::Serial});
    });
  }
  if (policies.empty()) {
    std::cerr << "unknown policy '" << which << "'\n";
    return kBadConfig;
  }

  const double floor = std::sqrt(static_cast<double>(T)) / 24000.0;
  std::cout << std::setprecision(6);
  std::cout << "T=" << T << " R=" << reps << " u*=" << u << " sigma1=" << s1 << " sigma2=" << s2 << '\n';
  std::cout << "J_sigma1(u*)=" << greedy_price(first.problem.noise(), u)
            << " J_sigma2(u*)=" << greedy_price(second.problem.noise(), u) << '\n';
  std::cout << "floor sqrt(T)/24000 = " << floor << '\n';
  try {
    for (const auto& [name, factory] : policies) {
      const auto a = aggregate(run_repetitions(factory, first, T, reps, seed, Execution::Parallel, opts));
      const auto b = aggregate(run_repetitions(factory, second, T, reps, derive_seed(seed, 1), Execution::Parallel, opts));
      const double sum = a.mean.back() + b.mean.back();
      std::cout << std::left << std::setw(7) << name << " Reg(sigma1)=" << a.mean.back()
                << " Reg(sigma2)=" << b.mean.back() << " sum=" << sum << (sum >= floor ? "  (>= floor)" : "  (< floor)")
                << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "demo aborted: " << e.what() << '\n';
    return kFailed;
  }
  return kOk;
}

int cmd_constants(double sigma, double bound, std::size_t grid) {
  const auto model = NoiseModel::gaussian(sigma);
  const auto c = compute_constants(model, bound, {grid, Execution::Parallel});
  std::cout << std::setprecision(9);
  std::cout << "noise               " << model.describe() << '\n'
            << "B                   " << c.bound << '\n'
            << "B_f                 " << c.pdf_sup << '\n'
            << "B_f'                " << c.pdf_derivative_sup << '\n'
            << "J(0)                " << c.greedy_at_zero << '\n'
            << "window              [" << c.window_lo << ", " << c.window_hi << "]\n"
            << "C                   " << c.quadratic_regret << '\n'
            << "C_down              " << c.curvature_min << '\n'
            << "C_exp               " << c.gradient_sq_max << '\n'
            << "alpha               " << c.exp_concavity << '\n'
            << "C_exp / C_down      " << c.gradient_sq_max / c.curvature_min << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-based dynamic pricing simulations"};
  app.require_subcommand(1);
  // Global flags are also accepted after the subcommand.
  app.fallthrough();
  Globals g;
  app.add_option("--workers", g.workers, "Worker threads for repetitions and kernels (0 = OpenMP default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "Output directory (overrides the config)");
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");

  auto* run = app.add_subcommand("run", "Run every policy x scenario pair of a config");
  std::string config_path;
  run->add_option("config", config_path, "Experiment config (YAML)")->required();

  auto* verify = app.add_subcommand("verify", "Run the invariant suite");
  bool fast = false;
  std::string fault, only;
  verify->add_flag("--fast", fast, "Reduced grid densities");
  verify->add_option("--only", only, "Run checks whose name starts with this prefix");
  verify->add_option("--inject-fault", fault, "Corrupt a constant to exercise the failure path")
      ->check(CLI::IsMember({"negate-curvature-min"}));

  auto* demo = app.add_subcommand("lower-bound-demo", "Regret of each policy under the two-sigma construction");
  std::size_t T = 4096, reps = 20;
  const std::uint64_t demo_seed = 7;
  std::string which = "all";
  demo->add_option("--t", T, "Horizon");
  demo->add_option("--reps", reps, "Repetitions")->check(CLI::PositiveNumber);
  demo->add_option("--policy", which, "oracle, emlp, onsp, exp4 or all");

  auto* constants = app.add_subcommand("constants", "Print the analysis constants for Gaussian noise");
  double sigma = 0.25, bound = 1.0;
  std::size_t grid = 10001;
  constants->add_option("--sigma", sigma, "Noise standard deviation")->check(CLI::PositiveNumber);
  constants->add_option("--b", bound, "Valuation bound B")->check(CLI::PositiveNumber);
  constants->add_option("--grid", grid, "Grid points")->check(CLI::Range(3, 10000001));

  CLI11_PARSE(app, argc, argv);
  if (g.workers > 0) set_threads(g.workers);

  if (*run) return cmd_run(g, config_path);
  if (*verify) return cmd_verify(fast, fault, only);
  if (*demo) return cmd_lower_bound(T, reps, g.seed.value_or(demo_seed), which);
  if (*constants) return cmd_constants(sigma, bound, grid);
  return kFailed;
}
