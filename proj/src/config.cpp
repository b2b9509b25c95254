#include "pricelab/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pricelab {

ConfigError::ConfigError(const std::string& source, int line, int column, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

NoiseModel NoiseSpec::model() const {
  return kind == NoiseModel::Kind::Gaussian ? NoiseModel::gaussian(scale) : NoiseModel::logistic(scale);
}

PricingProblem ExperimentConfig::problem() const {
  return PricingProblem(noise.model(), FeasibleRegion::orthant_ball(dimension, parameter_bound), feature_bound);
}

Scenario ExperimentConfig::scenario(ScenarioKind kind) const {
  Scenario s{.kind = kind, .problem = problem(), .theta_star = Eigen::Map<const Vector>(theta_star.data(), dimension)};
  s.magnitude_lo = magnitude_lo;
  s.magnitude_hi = magnitude_hi;
  return s;
}

std::vector<std::string> ExperimentConfig::policy_names() const {
  std::vector<std::string> names;
  if (policies.emlp) names.push_back("emlp");
  if (policies.onsp) names.push_back("onsp");
  if (policies.exp4) names.push_back("exp4");
  return names;
}

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    const YAML::Mark mark = node.Mark();
    throw ConfigError(source_, mark.line + 1, mark.column + 1, message);
  }

  void require_map(const YAML::Node& node, const std::string& what) const {
    if (!node.IsMap()) fail(node, what + ": expected a mapping");
  }

  void allow_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& what) const {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, what + ": unknown key '" + key + "'");
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + ": expected a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(node, what + ": cannot read '" + node.Scalar() + "'");
    }
  }

  double positive(const YAML::Node& node, const std::string& what) const {
    const double v = scalar<double>(node, what);
    if (!std::isfinite(v) || v <= 0.0) fail(node, what + " must be positive and finite");
    return v;
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node, what + ": expected a list of numbers");
    std::vector<double> out;
    for (const auto& item : node) {
      const double v = scalar<double>(item, what);
      if (!std::isfinite(v)) fail(item, what + ": non-finite entry");
      out.push_back(v);
    }
    return out;
  }

 private:
  std::string source_;
};

void read_noise(const Reader& in, const YAML::Node& node, NoiseSpec& noise) {
  in.require_map(node, "problem.noise");
  in.allow_keys(node, {"kind", "sigma", "scale"}, "problem.noise");
  std::string kind = "gaussian";
  if (node["kind"]) kind = in.scalar<std::string>(node["kind"], "problem.noise.kind");
  if (kind == "gaussian") {
    noise.kind = NoiseModel::Kind::Gaussian;
    if (node["scale"]) in.fail(node["scale"], "problem.noise: gaussian noise takes 'sigma'");
    if (node["sigma"]) noise.scale = in.positive(node["sigma"], "problem.noise.sigma");
  } else if (kind == "logistic") {
    noise.kind = NoiseModel::Kind::Logistic;
    if (node["sigma"]) in.fail(node["sigma"], "problem.noise: logistic noise takes 'scale'");
    noise.scale = node["scale"] ? in.positive(node["scale"], "problem.noise.scale") : 1.0;
  } else {
    in.fail(node["kind"], "problem.noise.kind: expected gaussian or logistic, got '" + kind + "'");
  }
}

void read_problem(const Reader& in, const YAML::Node& node, ExperimentConfig& c) {
  in.require_map(node, "problem");
  in.allow_keys(node,
                {"dimension", "parameter_bound", "feature_bound", "region", "noise", "theta_star",
                 "feature_magnitude"},
                "problem");
  if (node["dimension"]) {
    c.dimension = in.scalar<int>(node["dimension"], "problem.dimension");
    if (c.dimension < 1) in.fail(node["dimension"], "problem.dimension must be at least 1");
  }
  if (node["parameter_bound"]) c.parameter_bound = in.positive(node["parameter_bound"], "problem.parameter_bound");
  if (node["feature_bound"]) c.feature_bound = in.positive(node["feature_bound"], "problem.feature_bound");
  if (node["region"]) {
    const auto region = in.scalar<std::string>(node["region"], "problem.region");
    if (region != "orthant_ball") {
      in.fail(node["region"], "problem.region: only orthant_ball keeps x^T theta >= 0 for the built-in feature laws");
    }
  }
  if (node["noise"]) read_noise(in, node["noise"], c.noise);
  if (node["feature_magnitude"]) {
    const auto m = in.numbers(node["feature_magnitude"], "problem.feature_magnitude");
    if (m.size() != 2 || !(0.0 < m[0] && m[0] <= m[1] && m[1] <= 1.0)) {
      in.fail(node["feature_magnitude"], "problem.feature_magnitude: expected [lo, hi] with 0 < lo <= hi <= 1");
    }
    c.magnitude_lo = m[0];
    c.magnitude_hi = m[1];
  }

  if (!node["theta_star"]) in.fail(node, "problem.theta_star is required");
  const YAML::Node ts = node["theta_star"];
  c.theta_star = in.numbers(ts, "problem.theta_star");
  if (static_cast<int>(c.theta_star.size()) != c.dimension) {
    in.fail(ts, "problem.theta_star: expected " + std::to_string(c.dimension) + " entries, got " +
                    std::to_string(c.theta_star.size()));
  }
  double norm_sq = 0.0;
  for (double v : c.theta_star) {
    if (v < 0.0) in.fail(ts, "problem.theta_star: negative coordinate lies outside the orthant ball");
    norm_sq += v * v;
  }
  if (std::sqrt(norm_sq) > c.parameter_bound * (1.0 + 1e-12)) {
    in.fail(ts, "problem.theta_star: norm exceeds parameter_bound");
  }
}

void read_policies(const Reader& in, const YAML::Node& node, PolicySpecs& p) {
  in.require_map(node, "policies");
  in.allow_keys(node, {"emlp", "onsp", "exp4"}, "policies");
  if (node.size() == 0) in.fail(node, "policies: at least one policy is required");
  p = {};
  auto body = [&](const YAML::Node& n, const std::string& what) {
    if (n.IsNull()) return false;
    in.require_map(n, what);
    return true;
  };
  if (const auto n = node["emlp"]) {
    p.emlp = EmlpSpec{};
    if (body(n, "policies.emlp")) {
      in.allow_keys(n, {"tolerance"}, "policies.emlp");
      if (n["tolerance"]) p.emlp->tolerance = in.positive(n["tolerance"], "policies.emlp.tolerance");
    }
  }
  if (const auto n = node["onsp"]) {
    p.onsp = OnspSpec{};
    if (body(n, "policies.onsp")) {
      in.allow_keys(n, {"gamma", "epsilon", "hyperparameters"}, "policies.onsp");
      if (n["hyperparameters"]) {
        const auto mode = in.scalar<std::string>(n["hyperparameters"], "policies.onsp.hyperparameters");
        if (mode == "theory") {
          p.onsp->theory = true;
        } else if (mode != "explicit") {
          in.fail(n["hyperparameters"], "policies.onsp.hyperparameters: expected theory or explicit");
        }
      }
      if (p.onsp->theory && (n["gamma"] || n["epsilon"])) {
        in.fail(n, "policies.onsp: gamma/epsilon conflict with hyperparameters: theory");
      }
      if (n["gamma"]) p.onsp->gamma = in.positive(n["gamma"], "policies.onsp.gamma");
      if (n["epsilon"]) p.onsp->epsilon = in.positive(n["epsilon"], "policies.onsp.epsilon");
    }
  }
  if (const auto n = node["exp4"]) {
    p.exp4 = Exp4Spec{};
    if (body(n, "policies.exp4")) {
      in.allow_keys(n, {"horizon_cap", "exploration"}, "policies.exp4");
      if (n["horizon_cap"]) {
        p.exp4->horizon_cap = in.scalar<std::size_t>(n["horizon_cap"], "policies.exp4.horizon_cap");
        if (p.exp4->horizon_cap < 2) in.fail(n["horizon_cap"], "policies.exp4.horizon_cap must be at least 2");
      }
      if (n["exploration"]) {
        const double g = in.scalar<double>(n["exploration"], "policies.exp4.exploration");
        if (!(g > 0.0 && g <= 1.0)) in.fail(n["exploration"], "policies.exp4.exploration must lie in (0, 1]");
        p.exp4->exploration = g;
      }
    }
  }
}

ExperimentConfig parse_root(const Reader& in, const YAML::Node& root) {
  ExperimentConfig c;
  in.require_map(root, "config");
  in.allow_keys(root, {"problem", "horizon", "repetitions", "seed", "slope_window", "scenarios", "policies", "output"},
                "config");
  if (!root["problem"]) in.fail(root, "problem section is required (it holds theta_star)");
  read_problem(in, root["problem"], c);

  if (root["horizon"]) {
    c.horizon = in.scalar<std::size_t>(root["horizon"], "horizon");
    if (c.horizon < 2) in.fail(root["horizon"], "horizon must be at least 2");
  }
  if (root["repetitions"]) {
    c.repetitions = in.scalar<std::size_t>(root["repetitions"], "repetitions");
    if (c.repetitions < 1) in.fail(root["repetitions"], "repetitions must be at least 1");
  }
  if (root["seed"]) c.seed = in.scalar<std::uint64_t>(root["seed"], "seed");
  if (const auto w = root["slope_window"]) {
    const auto v = in.numbers(w, "slope_window");
    if (v.size() != 2 || v[0] < 1.0 || v[0] >= v[1] || v[1] > static_cast<double>(c.horizon)) {
      in.fail(w, "slope_window: expected [lo, hi] with 1 <= lo < hi <= horizon");
    }
    c.slope_window = Window{static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1])};
  }
  if (const auto s = root["scenarios"]) {
    if (!s.IsSequence() || s.size() == 0) in.fail(s, "scenarios: expected a non-empty list");
    c.scenarios.clear();
    for (const auto& item : s) {
      const auto name = in.scalar<std::string>(item, "scenarios");
      if (name == "stochastic") {
        c.scenarios.push_back(ScenarioKind::StochasticIID);
      } else if (name == "adversarial") {
        c.scenarios.push_back(ScenarioKind::AdversarialAlternating);
      } else {
        in.fail(item, "scenarios: expected stochastic or adversarial, got '" + name + "'");
      }
    }
  }
  if (root["policies"]) read_policies(in, root["policies"], c.policies);
  if (c.policies.exp4 && c.policies.exp4->horizon_cap > c.horizon) c.policies.exp4->horizon_cap = c.horizon;
  if (root["output"]) c.output = in.scalar<std::string>(root["output"], "output");
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, e.mark.column + 1, e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError(source, 1, 1, "empty config");
  return parse_root(Reader(source), root);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string config_echo_json(const ExperimentConfig& c, int indent) {
  using nlohmann::ordered_json;
  ordered_json noise;
  if (c.noise.kind == NoiseModel::Kind::Gaussian) {
    noise = {{"kind", "gaussian"}, {"sigma", c.noise.scale}};
  } else {
    noise = {{"kind", "logistic"}, {"scale", c.noise.scale}};
  }
  ordered_json j;
  j["problem"] = {{"dimension", c.dimension},
                  {"parameter_bound", c.parameter_bound},
                  {"feature_bound", c.feature_bound},
                  {"region", "orthant_ball"},
                  {"noise", noise},
                  {"theta_star", c.theta_star},
                  {"feature_magnitude", {c.magnitude_lo, c.magnitude_hi}}};
  j["horizon"] = c.horizon;
  j["repetitions"] = c.repetitions;
  j["seed"] = c.seed;
  if (c.slope_window) j["slope_window"] = {c.slope_window->lo, c.slope_window->hi};
  j["scenarios"] = ordered_json::array();
  for (auto k : c.scenarios) j["scenarios"].push_back(to_string(k));
  ordered_json pol = ordered_json::object();
  if (c.policies.emlp) pol["emlp"] = {{"tolerance", c.policies.emlp->tolerance}};
  if (c.policies.onsp) {
    if (c.policies.onsp->theory) {
      pol["onsp"] = {{"hyperparameters", "theory"}};
    } else {
      pol["onsp"] = {{"gamma", c.policies.onsp->gamma}, {"epsilon", c.policies.onsp->epsilon}};
    }
  }
  if (c.policies.exp4) {
    pol["exp4"] = {{"horizon_cap", c.policies.exp4->horizon_cap}};
    if (c.policies.exp4->exploration) pol["exp4"]["exploration"] = *c.policies.exp4->exploration;
  }
  j["policies"] = pol;
  j["output"] = c.output;
  return j.dump(indent);
}

}  // namespace pricelab
