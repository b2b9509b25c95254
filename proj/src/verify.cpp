#include "pricelab/verify.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pricelab/harness.hpp"

namespace pricelab {

namespace {

class CheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  VerifyOptions options;
  PricingProblem problem;
  AnalysisConstants constants;

  std::size_t count(std::size_t full, std::size_t fast) const { return options.fast ? fast : full; }
};

template <typename... Args>
std::string str(const Args&... args) {
  std::ostringstream os;
  os.precision(10);
  (os << ... << args);
  return os.str();
}

template <typename... Args>
void require(bool ok, const Args&... args) {
  if (!ok) throw CheckFailure(str(args...));
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

// Random point of the orthant ball of radius r.
Vector random_orthant_point(Rng& rng, int d, double r) {
  std::normal_distribution<double> normal;
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = std::abs(normal(rng));
  return v.normalized() * (r * std::pow(uniform(rng, 0.0, 1.0), 1.0 / d));
}

Vector random_vector(Rng& rng, int d, double scale) {
  std::normal_distribution<double> normal;
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = scale * normal(rng);
  return v;
}

Matrix random_spd(Rng& rng, int d) {
  const Matrix M = random_vector(rng, d * d, 1.0).reshaped(d, d);
  return M * M.transpose() + 0.1 * Matrix::Identity(d, d);
}

double min_eigenvalue(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

// log(1 - exp(x)) for x < 0.
double log1mexp(double x) { return x < -std::numbers::ln2 ? std::log1p(-std::exp(x)) : std::log(-std::expm1(x)); }

std::vector<NoiseModel> noise_models() {
  return {NoiseModel::gaussian(0.25), NoiseModel::gaussian(1.0), NoiseModel::logistic(0.25)};
}

std::vector<double> window_grid(const NoiseModel& m, double bound, std::size_t n) {
  const double hi = bound + greedy_price(m, 0.0);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = -bound + (hi + bound) * static_cast<double>(i) / static_cast<double>(n - 1);
  return w;
}

// Five-point central difference.
template <typename Fn>
double derivative(Fn&& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

LossPoint random_loss_point(Rng& rng, const PricingProblem& p) {
  return {random_orthant_point(rng, p.dimension(), p.feature_bound()), uniform(rng, 0.0, p.max_price()),
          uniform(rng, 0.0, 1.0) < 0.5};
}

// ---------------------------------------------------------------------------
// noise models

std::string check_log_concavity(const Context& ctx) {
  const std::size_t n = ctx.count(1000, 200);
  const double h = 1e-4;
  double worst = -1e300;
  for (const auto& m : noise_models()) {
    for (double w : window_grid(m, 1.0, n)) {
      const double d2_cdf = (m.log_cdf(w + h) - 2 * m.log_cdf(w) + m.log_cdf(w - h)) / (h * h);
      const double d2_sf = (m.log_sf(w + h) - 2 * m.log_sf(w) + m.log_sf(w - h)) / (h * h);
      require(d2_cdf <= -1e-12 && d2_sf <= -1e-12, m.describe(), " at w=", w, ": (log F)''=", d2_cdf,
              " (log(1-F))''=", d2_sf);
      worst = std::max({worst, d2_cdf, d2_sf});
    }
  }
  return str("largest second derivative ", worst);
}

std::string check_density_derivatives(const Context& ctx) {
  const std::size_t n = ctx.count(1000, 200);
  double worst = 0.0;
  for (const auto& m : noise_models()) {
    const double h = 1e-3 * m.scale();
    const double floor = 1e-6 * m.pdf_derivative_sup();
    for (double w : window_grid(m, 1.0, n)) {
      const double dF = m.cdf(w) <= 0.5 ? derivative([&](double z) { return m.cdf(z); }, w, h)
                                        : -derivative([&](double z) { return m.sf(z); }, w, h);
      const double rel_pdf = std::abs(dF - m.pdf(w)) / m.pdf(w);
      const double df = derivative([&](double z) { return m.pdf(z); }, w, h);
      const double rel_dpdf = std::abs(df - m.pdf_derivative(w)) / std::max(std::abs(m.pdf_derivative(w)), floor);
      require(rel_pdf <= 1e-6 && rel_dpdf <= 1e-6, m.describe(), " at w=", w, ": cdf' rel err ", rel_pdf,
              ", pdf' rel err ", rel_dpdf);
      worst = std::max({worst, rel_pdf, rel_dpdf});
    }
  }
  return str("max relative error ", worst);
}

std::string check_hazard_monotone(const Context& ctx) {
  const std::size_t n = ctx.count(1000, 200);
  for (const auto& m : noise_models()) {
    const auto grid = window_grid(m, 1.0, n);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      require(m.hazard(grid[i - 1]) < m.hazard(grid[i]), m.describe(), ": hazard not increasing between ",
              grid[i - 1], " and ", grid[i]);
    }
  }
  const auto unit = NoiseModel::gaussian(1.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double a = -8.0 + 52.0 * static_cast<double>(i - 1) / static_cast<double>(n - 1);
    const double b = -8.0 + 52.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    require(unit.hazard(a) < unit.hazard(b), "standard normal hazard not increasing between ", a, " and ", b);
  }
  return "strictly increasing on every grid";
}

std::string check_hazard_left_tail(const Context&) {
  const double w = -8.0;
  const double v = std::pow(std::abs(w), 3) * NoiseModel::gaussian(1.0).hazard(w);
  require(v < 1e-10, "|w|^3 hazard(w) at w=-8 is ", v);
  return str("|w|^3 hazard(-8) = ", v);
}

std::string check_hazard_asymptotics(const Context&) {
  // 30-digit reference values of the standard normal hazard.
  const std::pair<double, double> reference[] = {
      {10.0, 10.098093233962511963}, {20.0, 20.049753068527850542}, {30.0, 30.033259667433677037}};
  const auto unit = NoiseModel::gaussian(1.0);
  double worst_rel = 0.0;
  for (const auto& [w, ref] : reference) {
    const double lam = unit.hazard(w);
    const double gap = std::abs(lam - w - 1.0 / w);
    require(gap <= 3.0 / (w * w * w), "hazard(", w, ") - w - 1/w = ", gap, " exceeds 3/w^3");
    const double rel = std::abs(lam - ref) / ref;
    require(rel <= 1e-12, "hazard(", w, ") = ", lam, " vs reference ", ref);
    worst_rel = std::max(worst_rel, rel);
  }
  return str("max relative error vs reference ", worst_rel);
}

std::string check_tail_complement(const Context& ctx) {
  const std::size_t n = ctx.count(4001, 801);
  double worst = 0.0;
  for (const auto& m : {NoiseModel::gaussian(1.0), NoiseModel::gaussian(0.25), NoiseModel::logistic(1.0)}) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = m.scale() * (-40.0 + 80.0 * static_cast<double>(i) / static_cast<double>(n - 1));
      const double ls = m.log_sf(w), lc = m.log_cdf(w);
      // Complement the larger-magnitude log into the smaller one; the other
      // direction loses everything once the small side rounds to -0.
      const double derived = w <= 0.0 ? log1mexp(lc) : log1mexp(ls);
      const double direct = w <= 0.0 ? ls : lc;
      const double scale = std::max(std::abs(derived), std::abs(direct));
      const double e = scale < 1e-300 ? 0.0 : std::abs(derived - direct) / scale;
      require(e <= 1e-10, m.describe(), " at w=", w, ": log_sf=", ls, " log_cdf=", lc, " relative mismatch ", e);
      worst = std::max(worst, e);
    }
  }
  return str("max relative mismatch ", worst);
}

std::string check_log_sf_asymptotic(const Context&) {
  double worst = 0.0;
  for (const auto& m : {NoiseModel::gaussian(1.0), NoiseModel::gaussian(0.25)}) {
    const double z = 30.0;
    const double w = z * m.scale();
    const double approx = m.log_pdf(w) + std::log(m.scale() / z) + std::log1p(-1.0 / (z * z));
    const double rel = std::abs(m.log_sf(w) - approx) / std::abs(approx);
    require(rel <= 1e-8, m.describe(), ": log_sf at standardized 30 off the expansion by ", rel);
    worst = std::max(worst, rel);
  }
  return str("relative gap ", worst);
}

// ---------------------------------------------------------------------------
// pricing

std::string check_unimodality(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const NoiseModel& m = p.noise();
  Rng rng(11);
  const std::size_t trials = ctx.count(200, 40);
  const std::size_t n = 10000;
  const double step = p.max_price() / static_cast<double>(n - 1);
  std::vector<double> g(n);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const double u = uniform(rng, 0.0, p.valuation_bound());
    for_each_index(n, [&](std::size_t i) { g[i] = expected_reward(m, step * static_cast<double>(i), u); },
                   ctx.options.execution);
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n; ++i) {
      const bool left = i == 0 || g[i] > g[i - 1];
      const bool right = i + 1 == n || g[i] >= g[i + 1];
      if (left && right) peaks.push_back(i);
    }
    require(peaks.size() == 1, "u=", u, ": ", peaks.size(), " local maxima");
    const double J = p.greedy_price(u);
    require(std::abs(step * static_cast<double>(peaks[0]) - J) <= step, "u=", u, ": grid maximum at ",
            step * static_cast<double>(peaks[0]), " but J(u)=", J);
  }
  return str(trials, " valuations, one peak each");
}

std::string check_greedy_contraction(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  Rng rng(12);
  for (std::size_t i = 0; i < ctx.count(1000, 200); ++i) {
    double a = uniform(rng, 0.0, p.valuation_bound()), b = uniform(rng, 0.0, p.valuation_bound());
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const double dj = p.greedy_price(b) - p.greedy_price(a);
    require(dj > 0.0 && dj < b - a, "J(", b, ") - J(", a, ") = ", dj, " not in (0, ", b - a, ")");
  }
  return "0 < J(u2) - J(u1) < u2 - u1 on all pairs";
}

std::string check_gaussian_scaling(const Context& ctx) {
  Rng rng(13);
  const auto unit = NoiseModel::gaussian(1.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < ctx.count(100, 30); ++i) {
    const double s = uniform(rng, 0.1, 1.0), u = uniform(rng, 0.0, 1.0);
    const double lhs = greedy_price(NoiseModel::gaussian(s), u);
    const double rhs = s * greedy_price(unit, u / s);
    require(std::abs(lhs - rhs) <= 1e-9, "sigma=", s, " u=", u, ": J_sigma(u)=", lhs, " sigma J_1(u/sigma)=", rhs);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return str("max gap ", worst);
}

std::string check_fixed_point(const Context&) {
  const double u = lower_bound_valuation();
  const double J = greedy_price(NoiseModel::gaussian(1.0), u);
  require(std::abs(J - u) <= 1e-9, "J_1(sqrt(pi/2)) = ", J, ", expected ", u);
  return str("|J_1(u*) - u*| = ", std::abs(J - u));
}

std::string check_first_order_residual(const Context& ctx) {
  Rng rng(14);
  double worst = 0.0;
  for (const auto& m : noise_models()) {
    for (std::size_t i = 0; i < ctx.count(500, 100); ++i) {
      const double u = uniform(rng, 0.0, 1.0);
      const double r = std::abs(first_order_residual(m, greedy_price(m, u), u));
      require(r <= 1e-10, m.describe(), " u=", u, ": residual ", r);
      worst = std::max(worst, r);
    }
  }
  return str("max residual ", worst);
}

std::string check_quadratic_regret(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const NoiseModel& m = p.noise();
  const double C = ctx.constants.quadratic_regret;
  Rng rng(15);
  double worst = 0.0;
  for (std::size_t i = 0; i < ctx.count(1000, 200); ++i) {
    const Vector theta = random_orthant_point(rng, p.dimension(), p.parameter_bound());
    const Vector star = random_orthant_point(rng, p.dimension(), p.parameter_bound());
    const Vector x = random_orthant_point(rng, p.dimension(), p.feature_bound());
    const double u = x.dot(theta), us = x.dot(star);
    const double loss = expected_reward(m, p.greedy_price(us), us) - expected_reward(m, p.greedy_price(u), us);
    const double bound = C * (u - us) * (u - us);
    require(loss <= bound + 1e-12, "u=", u, " u*=", us, ": regret ", loss, " > C (u-u*)^2 = ", bound);
    if (bound > 0) worst = std::max(worst, loss / bound);
  }
  return str("largest regret / bound ratio ", worst);
}

// ---------------------------------------------------------------------------
// surrogate loss

std::string check_loss_derivatives(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const NoiseModel& m = p.noise();
  Rng rng(21);
  const int d = p.dimension();
  double worst = 0.0;
  for (std::size_t i = 0; i < ctx.count(1000, 200); ++i) {
    const LossPoint pt = random_loss_point(rng, p);
    const Vector theta = random_orthant_point(rng, d, p.parameter_bound());
    const Vector g = loss_gradient(pt, theta, m);
    const Matrix H = loss_hessian(pt, theta, m);
    Vector g_fd(d);
    Matrix H_fd(d, d);
    const double h = 1e-4;
    for (int j = 0; j < d; ++j) {
      auto along = [&](double s) {
        Vector t = theta;
        t(j) += s;
        return t;
      };
      g_fd(j) = derivative([&](double s) { return loss(pt, along(s), m); }, 0.0, h);
      for (int k = 0; k < d; ++k) {
        H_fd(k, j) = derivative([&](double s) { return loss_gradient(pt, along(s), m)(k); }, 0.0, h);
      }
    }
    const double eg = (g_fd - g).norm() / std::max(g.norm(), 1e-10);
    const double eh = (H_fd - H).norm() / std::max(H.norm(), 1e-10);
    require(eg <= 1e-6 && eh <= 1e-6, "x=", pt.x.transpose(), " v=", pt.price, " sold=", pt.sold,
            ": gradient rel err ", eg, ", Hessian rel err ", eh);
    worst = std::max({worst, eg, eh});
  }
  return str("max relative error ", worst);
}

std::string check_convexity(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  Rng rng(22);
  for (std::size_t i = 0; i < ctx.count(100, 50); ++i) {
    const LossPoint pt = random_loss_point(rng, p);
    const Vector a = random_orthant_point(rng, p.dimension(), p.parameter_bound());
    const Vector b = random_orthant_point(rng, p.dimension(), p.parameter_bound());
    const double t = uniform(rng, 0.0, 1.0);
    const double mid = loss(pt, t * a + (1 - t) * b, p.noise());
    const double chord = t * loss(pt, a, p.noise()) + (1 - t) * loss(pt, b, p.noise());
    require(mid <= chord + 1e-10, "convexity violated: l(mix)=", mid, " > ", chord);
  }
  return "convexity inequality holds";
}

std::string check_hessian_sandwich(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const double lo = ctx.constants.curvature_min;
  const double hi = ctx.constants.gradient_sq_max;
  require(lo > 0.0, "C_down = ", lo, " is not positive");
  Rng rng(23);
  double slack_lo = 1e300, slack_hi = 1e300;
  for (std::size_t i = 0; i < ctx.count(1000, 300); ++i) {
    const LossPoint pt = random_loss_point(rng, p);
    const Vector theta = random_orthant_point(rng, p.dimension(), p.parameter_bound());
    const Matrix xx = pt.x * pt.x.transpose();
    const Vector g = loss_gradient(pt, theta, p.noise());
    const double e_lo = min_eigenvalue(loss_hessian(pt, theta, p.noise()) - lo * xx);
    const double e_hi = min_eigenvalue(hi * xx - g * g.transpose());
    const double tol = 1e-9 * hi * pt.x.squaredNorm();
    require(e_lo >= -tol && e_hi >= -tol, "at x=", pt.x.transpose(), " v=", pt.price, " theta=", theta.transpose(),
            ": min eig(hess - C_down xx^T)=", e_lo, ", min eig(C_exp xx^T - gg^T)=", e_hi);
    slack_lo = std::min(slack_lo, e_lo);
    slack_hi = std::min(slack_hi, e_hi);
  }
  return str("C_down=", lo, " C_exp=", hi, "; min eigenvalues ", slack_lo, ", ", slack_hi);
}

std::string check_exp_concavity(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const double alpha = ctx.constants.exp_concavity;
  Rng rng(24);
  double worst = 1e300;
  for (std::size_t i = 0; i < ctx.count(1000, 300); ++i) {
    const LossPoint pt = random_loss_point(rng, p);
    const Vector theta = random_orthant_point(rng, p.dimension(), p.parameter_bound());
    const Vector g = loss_gradient(pt, theta, p.noise());
    const double e = min_eigenvalue(loss_hessian(pt, theta, p.noise()) - alpha * g * g.transpose());
    require(e >= -1e-10, "alpha=", alpha, " at x=", pt.x.transpose(), " v=", pt.price, ": min eigenvalue ", e);
    worst = std::min(worst, e);
  }
  return str("alpha=", alpha, ", min eigenvalue ", worst);
}

// P(sold) = integral of f over [v - u*, inf), composite Simpson.
double sale_probability_by_quadrature(const NoiseModel& m, double w0) {
  const int n = 4000;
  const double span = 40.0 * m.scale();
  const double h = span / n;
  double s = m.pdf(w0) + m.pdf(w0 + span);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * m.pdf(w0 + h * i);
  return s * h / 3.0;
}

std::string check_expected_score(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const NoiseModel& m = p.noise();
  Rng rng(25);
  const Vector star = Vector::Constant(p.dimension(), 0.5);
  double worst = 0.0;
  for (std::size_t i = 0; i < ctx.count(100, 30); ++i) {
    const Vector x = random_orthant_point(rng, p.dimension(), p.feature_bound());
    const double v = uniform(rng, 0.0, p.max_price());
    const double ps = sale_probability_by_quadrature(m, v - x.dot(star));
    const Vector eg = ps * loss_gradient({x, v, true}, star, m) + (1 - ps) * loss_gradient({x, v, false}, star, m);
    require(eg.norm() <= 1e-6, "x=", x.transpose(), " v=", v, ": expected gradient norm ", eg.norm());
    worst = std::max(worst, eg.norm());
  }
  return str("max expected gradient norm ", worst);
}

std::string check_quadratic_growth(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const NoiseModel& m = p.noise();
  const double lo = ctx.constants.curvature_min;
  Rng rng(26);
  const Vector star = Vector::Constant(p.dimension(), 0.5);
  for (std::size_t i = 0; i < ctx.count(200, 50); ++i) {
    const Vector x = random_orthant_point(rng, p.dimension(), p.feature_bound());
    const Vector theta = random_orthant_point(rng, p.dimension(), p.parameter_bound());
    const double v = uniform(rng, 0.0, p.max_price());
    const double ps = sale_probability_by_quadrature(m, v - x.dot(star));
    auto expected = [&](const Vector& th) {
      return ps * loss({x, v, true}, th, m) + (1 - ps) * loss({x, v, false}, th, m);
    };
    const double growth = expected(theta) - expected(star);
    const double du = x.dot(theta - star);
    require(growth >= 0.5 * lo * du * du - 1e-12, "x=", x.transpose(), " v=", v, ": L(theta)-L(theta*)=", growth,
            " < C_down/2 (x^T dtheta)^2 = ", 0.5 * lo * du * du);
  }
  return "expected loss grows at least quadratically";
}

// Independent probit fit: predictor (x^T theta - v) / sigma, unconstrained,
// damped Newton on the mean negative log-likelihood using std::erfc.
struct ProbitFit {
  Vector theta;
  double value;
};

ProbitFit probit_fit(const std::vector<LossPoint>& pts, double sigma, Vector theta) {
  const int d = static_cast<int>(theta.size());
  const double n = static_cast<double>(pts.size());
  auto nll = [&](const Vector& th, Vector* g, Matrix* H) {
    double f = 0.0;
    if (g) *g = Vector::Zero(d);
    if (H) *H = Matrix::Zero(d, d);
    for (const auto& pt : pts) {
      const double s = pt.sold ? 1.0 : -1.0;
      const double t = s * (pt.x.dot(th) - pt.price) / sigma;
      const double Phi = 0.5 * std::erfc(-t / std::numbers::sqrt2);
      const double phi = std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
      f -= std::log(Phi);
      const double r = phi / Phi;
      if (g) *g -= (r * s / sigma) * pt.x;
      if (H) *H += (r * (t + r) / (sigma * sigma)) * pt.x * pt.x.transpose();
    }
    if (g) *g /= n;
    if (H) *H /= n;
    return f / n;
  };
  Vector g;
  Matrix H;
  double f = nll(theta, &g, &H);
  for (int it = 0; it < 200 && g.norm() > 1e-13; ++it) {
    const Vector step = H.ldlt().solve(g);
    double a = 1.0;
    Vector next = theta - step;
    double fn = nll(next, nullptr, nullptr);
    while (fn > f - 1e-4 * a * g.dot(step) && a > 1e-12) {
      a *= 0.5;
      next = theta - a * step;
      fn = nll(next, nullptr, nullptr);
    }
    theta = next;
    f = nll(theta, &g, &H);
  }
  return {theta, f};
}

std::string check_probit_equivalence(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const Vector star = Vector::Constant(p.dimension(), 0.5);
  Scenario sc{.kind = ScenarioKind::StochasticIID, .problem = p, .theta_star = star};
  Environment env(sc, 31);
  Rng rng(32);
  std::vector<LossPoint> pts;
  const std::size_t n = ctx.count(4096, 1024);
  for (std::size_t t = 1; t <= n; ++t) {
    const Vector x = env.next_feature(t);
    const double v = uniform(rng, 0.0, p.max_price());
    pts.push_back({x, v, env.resolve_sale(x.dot(star), v).sold});
  }
  const BatchObjective objective(pts, p.noise(), ctx.options.execution);
  const MleResult mle = solve_mle(objective, p.region(), p.region().initial_point());
  const ProbitFit probit = probit_fit(pts, p.noise().scale(), p.region().initial_point());
  require(mle.converged, "MLE did not converge (stationarity ", mle.stationarity, ")");
  require(p.region().contains(probit.theta, 1e-9), "probit optimum ", probit.theta.transpose(), " outside H");
  const double gap = std::abs(mle.value - probit.value);
  require(gap <= 1e-6, "MLE objective ", mle.value, " vs probit ", probit.value);
  return str("objective gap ", gap, ", theta gap ", (mle.theta - probit.theta).norm());
}

std::string check_mle_stationarity(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  Rng rng(33);
  int worst_iter = 0;
  for (std::size_t trial = 0; trial < ctx.count(20, 5); ++trial) {
    std::vector<LossPoint> pts;
    for (int i = 0; i < 64; ++i) pts.push_back(random_loss_point(rng, p));
    const BatchObjective objective(pts, p.noise(), ctx.options.execution);
    const MleResult r = solve_mle(objective, p.region(), p.region().initial_point());
    require(r.converged && r.stationarity <= 1e-9 && p.region().contains(r.theta, 1e-12), "trial ", trial,
            ": converged=", r.converged, " stationarity=", r.stationarity);
    worst_iter = std::max(worst_iter, r.iterations);
  }
  return str("all solves stationary, max iterations ", worst_iter);
}

// ---------------------------------------------------------------------------
// feasible region

std::vector<FeasibleRegion> test_regions() {
  Vector c(2);
  c << 0.3, 0.1;
  return {FeasibleRegion::ball(c, 0.7), FeasibleRegion::orthant_ball(2, 1.0), FeasibleRegion::orthant_ball(3, 1.0),
          FeasibleRegion::orthant_ball(5, 2.0)};
}

std::string check_projection_nonexpansive(const Context& ctx) {
  Rng rng(41);
  for (const auto& region : test_regions()) {
    const int d = region.dimension();
    for (std::size_t i = 0; i < ctx.count(300, 60); ++i) {
      const Vector a = random_vector(rng, d, 1.5), b = random_vector(rng, d, 1.5);
      const double e = (region.project(a) - region.project(b)).norm();
      require(e <= (a - b).norm() * (1 + 1e-12), "Euclidean projection expands ", (a - b).norm(), " to ", e);
      const Matrix A = random_spd(rng, d);
      const Vector pa = region.project_weighted(a, A), pb = region.project_weighted(b, A);
      const double na = std::sqrt((pa - pb).dot(A * (pa - pb))), nb = std::sqrt((a - b).dot(A * (a - b)));
      require(na <= nb * (1 + 1e-8) + 1e-10, "weighted projection expands ", nb, " to ", na, " (d=", d, ")");
    }
  }
  return "both projections nonexpansive";
}

std::string check_projection_feasible(const Context& ctx) {
  Rng rng(42);
  double worst = 0.0;
  for (const auto& region : test_regions()) {
    for (std::size_t i = 0; i < ctx.count(300, 60); ++i) {
      const Vector t = random_vector(rng, region.dimension(), 2.0);
      const double v = region.violation(region.project_weighted(t, random_spd(rng, region.dimension())));
      require(v <= 1e-12, "weighted projection violates constraints by ", v);
      worst = std::max(worst, v);
    }
  }
  return str("max violation ", worst);
}

std::string check_projection_variational(const Context& ctx) {
  Rng rng(43);
  double worst = 0.0;
  for (const auto& region : test_regions()) {
    const int d = region.dimension();
    for (std::size_t i = 0; i < ctx.count(200, 40); ++i) {
      const Vector target = random_vector(rng, d, 2.0);
      const Matrix A = random_spd(rng, d);
      const Vector theta = region.project_weighted(target, A);
      for (int k = 0; k < 50; ++k) {
        Vector other = region.project(random_vector(rng, d, 2.0));
        const double vi = (theta - target).dot(A * (other - theta));
        require(vi >= -1e-8, "variational inequality ", vi, " at target ", target.transpose());
        worst = std::min(worst, vi);
      }
    }
  }
  return str("smallest inner product ", worst);
}

// ---------------------------------------------------------------------------
// policies

std::vector<std::unique_ptr<Policy>> all_policies(const PricingProblem& p, std::size_t horizon) {
  std::vector<std::unique_ptr<Policy>> out;
  out.push_back(std::make_unique<EmlpPolicy>(p));
  out.push_back(std::make_unique<OnspPolicy>(p, OnspParams{0.5, 1.0}));
  out.push_back(std::make_unique<Exp4Policy>(p, Exp4Options{horizon, std::nullopt, Execution::Serial}));
  out.push_back(std::make_unique<OraclePolicy>(p, Vector::Constant(p.dimension(), 0.5)));
  return out;
}

Scenario default_scenario(const PricingProblem& p, ScenarioKind kind) {
  return Scenario{.kind = kind, .problem = p, .theta_star = Vector::Constant(p.dimension(), 0.5)};
}

std::string check_price_window(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const std::size_t T = ctx.count(1024, 256);
  for (auto kind : {ScenarioKind::StochasticIID, ScenarioKind::AdversarialAlternating}) {
    for (auto& policy : all_policies(p, T)) {
      const Episode ep = run_episode(*policy, default_scenario(p, kind), T, 51);
      for (const auto& r : ep.transcript) {
        require(r.price >= 0.0 && r.price <= p.max_price(), policy->name(), " priced ", r.price);
      }
    }
  }
  return str("all prices within [0, ", p.max_price(), "]");
}

std::string check_emlp_switches(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const std::size_t T = ctx.count(4096, 512);
  EmlpPolicy policy(p);
  EpisodeOptions opts;
  opts.record_transcript = false;
  run_episode(policy, default_scenario(p, ScenarioKind::StochasticIID), T, 52, opts);
  const int limit = static_cast<int>(std::floor(std::log2(static_cast<double>(T)))) + 2;
  require(policy.switches() <= limit, policy.switches(), " switches in ", T, " rounds, limit ", limit);
  return str(policy.switches(), " switches over ", T, " rounds (limit ", limit, ")");
}

std::string check_onsp_determinism(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const std::size_t T = ctx.count(2048, 256);
  OnspPolicy a(p, {0.5, 1.0}), b(p, {0.5, 1.0});
  const auto sc = default_scenario(p, ScenarioKind::StochasticIID);
  const Episode ea = run_episode(a, sc, T, 53), eb = run_episode(b, sc, T, 53);
  for (std::size_t t = 0; t < T; ++t) {
    require(ea.transcript[t].price == eb.transcript[t].price, "prices differ at round ", t + 1);
  }
  require(a.snapshot() == b.snapshot(), "final states differ");
  return "bit-identical trajectories";
}

std::string check_onsp_min_eigenvalue(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const std::size_t T = ctx.count(2048, 256);
  const OnspParams params{0.5, 1.0};
  OnspPolicy policy(p, params);
  Environment env(default_scenario(p, ScenarioKind::StochasticIID), 54);
  double worst = 1e300;
  for (std::size_t t = 1; t <= T; ++t) {
    const Vector x = env.next_feature(t);
    const double price = policy.propose(x);
    policy.feedback(env.resolve_sale(x.dot(env.scenario().theta_star), price).sold);
    const double e = min_eigenvalue(policy.gram());
    require(e >= params.epsilon * (1 - 1e-12), "round ", t, ": min eigenvalue ", e, " < epsilon");
    worst = std::min(worst, e);
  }
  return str("min eigenvalue ", worst);
}

std::string check_onsp_inverse(const Context&) {
  Rng rng(55);
  double worst = 0.0;
  for (int d : {2, 4}) {
    const PricingProblem p(NoiseModel::gaussian(0.25), FeasibleRegion::orthant_ball(d, 1.0), 1.0);
    OnspPolicy policy(p, {0.5, 1.0});
    for (int step = 0; step < 100; ++step) {
      policy.newton_step(random_vector(rng, d, 3.0));
      const Matrix direct = policy.gram().inverse();
      const double rel = (policy.gram_inverse() - direct).norm() / direct.norm();
      require(rel <= 1e-8, "d=", d, " step ", step, ": rank-one inverse off by ", rel);
      worst = std::max(worst, rel);
    }
  }
  return str("max relative gap ", worst);
}

std::string check_transcript_replay(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const std::size_t T = ctx.count(1024, 256);
  const std::uint64_t seed = 56;
  const auto recorded = all_policies(p, T);
  const auto fresh = all_policies(p, T);
  for (std::size_t k = 0; k < recorded.size(); ++k) {
    const Episode ep = run_episode(*recorded[k], default_scenario(p, ScenarioKind::StochasticIID), T, seed);
    Policy& replay = *fresh[k];
    replay.reset(derive_seed(seed, stream::kPolicy));
    for (std::size_t t = 0; t < T; ++t) {
      const double price = replay.propose(ep.transcript[t].x);
      require(price == ep.transcript[t].price, replay.name(), " replay diverges at round ", t + 1, ": ", price,
              " vs ", ep.transcript[t].price);
      replay.feedback(ep.transcript[t].sold);
    }
  }
  return "replayed prices match exactly";
}

// ---------------------------------------------------------------------------
// environments

std::string check_feature_assumption(const Context& ctx) {
  const std::size_t T = ctx.count(8192, 1024);
  for (int d : {2, 3}) {
    const PricingProblem p(NoiseModel::gaussian(0.25), FeasibleRegion::orthant_ball(d, 1.0), 1.0);
    for (auto kind : {ScenarioKind::StochasticIID, ScenarioKind::AdversarialAlternating}) {
      auto sc = default_scenario(p, kind);
      sc.theta_star = Vector::Constant(d, 0.5 / std::sqrt(static_cast<double>(d)));
      sc.check_features = false;
      Environment env(sc, 61);
      for (std::size_t t = 1; t <= T; ++t) {
        const Vector x = env.next_feature(t);
        try {
          check_feature(p, x);
        } catch (const std::exception& e) {
          throw CheckFailure(str(to_string(kind), " d=", d, " round ", t, ": ", e.what()));
        }
      }
    }
  }
  return "every feature satisfies the valuation bounds";
}

std::string check_environment_reproducible(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const std::size_t T = ctx.count(4096, 512);
  const auto sc = default_scenario(p, ScenarioKind::StochasticIID);
  Environment a(sc, 62), b(sc, 62);
  for (std::size_t t = 1; t <= T; ++t) {
    const Vector xa = a.next_feature(t), xb = b.next_feature(t);
    require(xa == xb, "features differ at round ", t);
    require(a.resolve_sale(0.5, 0.5).noise == b.resolve_sale(0.5, 0.5).noise, "noise differs at round ", t);
  }
  return "bit-identical streams";
}

std::string check_acceptance_frequency(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const std::size_t n = ctx.count(100000, 20000);
  double worst = 0.0;
  Environment env(default_scenario(p, ScenarioKind::StochasticIID), 63);
  for (auto [u, v] : {std::pair{0.5, 0.5}, {0.5, 0.7}, {0.2, 0.1}, {0.9, 1.1}}) {
    std::size_t sold = 0;
    for (std::size_t i = 0; i < n; ++i) sold += env.resolve_sale(u, v).sold;
    const double q = p.noise().sf(v - u);
    const double se = std::sqrt(q * (1 - q) / static_cast<double>(n));
    const double z = std::abs(static_cast<double>(sold) / static_cast<double>(n) - q) / se;
    require(z <= 4.0, "u=", u, " v=", v, ": frequency off by ", z, " standard errors");
    worst = std::max(worst, z);
  }
  return str("max deviation ", worst, " standard errors");
}

std::vector<double> lower_bound_sigmas(const Context& ctx) {
  if (ctx.options.fast) return {0.6, 0.75, 0.9};
  return {0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
}

std::string check_lower_bound_price(const Context& ctx) {
  const double u = lower_bound_valuation();
  std::ostringstream summary;
  for (double s : lower_bound_sigmas(ctx)) {
    const double J = greedy_price(NoiseModel::gaussian(s), u);
    require(J > 0.0 && J < u - 1e-9, "sigma=", s, ": J_sigma(u*)=", J, " not in (0, u*)");
    require(u - J >= 0.4 * (1 - s) - 1e-9, "sigma=", s, ": |J - u*| = ", u - J, " < 2/5 (1 - sigma) = ", 0.4 * (1 - s));
  }
  return str("J_sigma(u*) < u* - 2/5 (1 - sigma) for ", lower_bound_sigmas(ctx).size(), " sigmas");
}

std::string check_lower_bound_curvature(const Context& ctx) {
  const double u = lower_bound_valuation();
  double worst = 1e300;
  for (double s : lower_bound_sigmas(ctx)) {
    const auto m = NoiseModel::gaussian(s);
    const double J = greedy_price(m, u);
    const double best = expected_reward(m, J, u);
    for (int i = 1; i <= 1000; ++i) {
      const double v = u * i / 1001.0;
      const double gap = best - expected_reward(m, v, u);
      require(gap >= (J - v) * (J - v) / 60.0 - 1e-9, "sigma=", s, " v=", v, ": reward gap ", gap,
              " < (v* - v)^2 / 60");
      if (std::abs(J - v) > 1e-6) worst = std::min(worst, gap / ((J - v) * (J - v)));
    }
  }
  return str("smallest gap / (v* - v)^2 = ", worst);
}

// ---------------------------------------------------------------------------
// harness

std::string check_regret_nonnegative(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const std::size_t T = ctx.count(2048, 256);
  for (auto kind : {ScenarioKind::StochasticIID, ScenarioKind::AdversarialAlternating}) {
    for (auto& policy : all_policies(p, T)) {
      const Episode ep = run_episode(*policy, default_scenario(p, kind), T, 71);
      double cum = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double rho = ep.trace.increments[t];
        require(rho >= -1e-12, policy->name(), " round ", t + 1, ": regret increment ", rho);
        cum += rho;
      }
      for (std::size_t i = 1; i < ep.trace.checkpoints.size(); ++i) {
        require(ep.trace.checkpoints[i].regret >= ep.trace.checkpoints[i - 1].regret - 1e-12, policy->name(),
                ": cumulative regret decreases");
      }
      require(std::abs(cum - ep.trace.total()) <= 1e-9 * std::max(1.0, cum), "trace total mismatch");
    }
  }
  return "increments >= -1e-12, cumulative regret nondecreasing";
}

std::string check_episode_determinism(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const std::size_t T = ctx.count(1024, 256);
  const auto first = all_policies(p, T), second = all_policies(p, T);
  for (std::size_t k = 0; k < first.size(); ++k) {
    const auto sc = default_scenario(p, ScenarioKind::StochasticIID);
    const Episode a = run_episode(*first[k], sc, T, 72), b = run_episode(*second[k], sc, T, 72);
    for (std::size_t t = 0; t < T; ++t) {
      const auto &ra = a.transcript[t], &rb = b.transcript[t];
      require(ra.x == rb.x && ra.price == rb.price && ra.sold == rb.sold && ra.regret == rb.regret,
              first[k]->name(), ": episodes differ at round ", t + 1);
    }
  }
  return "identical transcripts and traces";
}

std::string check_surrogate_gap(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  const int last_epoch = ctx.options.fast ? 10 : 14;
  const std::size_t T = std::size_t{1} << last_epoch;
  const std::size_t R = 20;
  const auto sc = default_scenario(p, ScenarioKind::StochasticIID);
  std::vector<std::vector<EpochGap>> runs(R);
  for_each_index(R, [&](std::size_t r) { runs[r] = emlp_surrogate_gaps(p, sc, T, derive_seed(73, r)); },
                 ctx.options.execution);
  const double bound = ctx.constants.gradient_sq_max / ctx.constants.curvature_min;
  double worst = -1e300;
  for (int k = 3; k <= last_epoch; ++k) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& run : runs) {
      for (const auto& g : run) {
        if (g.epoch == k) sum += g.scaled, ++count;
      }
    }
    require(count == R, "epoch ", k, " seen in ", count, " of ", R, " runs");
    const double mean = sum / static_cast<double>(R);
    require(mean <= bound, "epoch ", k, ": mean scaled gap ", mean, " exceeds C_exp/C_down = ", bound);
    worst = std::max(worst, mean);
  }
  return str("largest epoch mean ", worst, " vs bound ", bound);
}

// ---------------------------------------------------------------------------
// parallel kernels

std::string check_kernel_agreement(const Context& ctx) {
  const PricingProblem& p = ctx.problem;
  Rng rng(81);
  std::vector<LossPoint> pts;
  for (int i = 0; i < 5000; ++i) pts.push_back(random_loss_point(rng, p));
  const Vector theta = random_orthant_point(rng, p.dimension(), 1.0);
  const auto s = BatchObjective(pts, p.noise(), Execution::Serial).evaluate(theta);
  const auto q = BatchObjective(pts, p.noise(), Execution::Parallel).evaluate(theta);
  const double rel = std::abs(s.value - q.value) / std::abs(s.value);
  require(rel <= 1e-13 && (s.gradient - q.gradient).norm() <= 1e-13 * s.gradient.norm(),
          "batch objective serial/parallel gap ", rel);

  const auto cs = compute_constants(p.noise(), 1.0, {2001, Execution::Serial});
  const auto cp = compute_constants(p.noise(), 1.0, {2001, Execution::Parallel});
  require(cs.curvature_min == cp.curvature_min && cs.gradient_sq_max == cp.gradient_sq_max,
          "constants differ between serial and parallel grid scans");

  const Exp4Grid grid = exp4_grid(p, 4096);
  std::vector<int> as, ap;
  for (int i = 0; i < 20; ++i) {
    const Vector x = random_orthant_point(rng, p.dimension(), 1.0);
    exp4_advice(p, grid, x, as, Execution::Serial);
    exp4_advice(p, grid, x, ap, Execution::Parallel);
    require(as == ap, "EXP-4 advice differs between serial and parallel kernels");
  }

  const auto sc = default_scenario(p, ScenarioKind::StochasticIID);
  PolicyFactory f = [&] { return std::make_unique<OnspPolicy>(p, OnspParams{0.5, 1.0}); };
  const auto rs = run_repetitions(f, sc, 512, 4, 82, Execution::Serial);
  const auto rp = run_repetitions(f, sc, 512, 4, 82, Execution::Parallel);
  for (std::size_t r = 0; r < rs.size(); ++r) {
    require(rs[r].increments == rp[r].increments, "repetition ", r, " differs between serial and parallel runs");
  }
  return str(max_threads(), " threads; objective rel gap ", rel);
}

using CheckFn = std::string (*)(const Context&);

struct Check {
  const char* name;
  CheckFn fn;
};

const std::vector<Check>& registry() {
  static const std::vector<Check> checks = {
      {"noise.log_concavity", check_log_concavity},
      {"noise.density_derivatives", check_density_derivatives},
      {"noise.hazard_monotone", check_hazard_monotone},
      {"noise.hazard_left_tail", check_hazard_left_tail},
      {"noise.hazard_asymptotics", check_hazard_asymptotics},
      {"noise.tail_complement", check_tail_complement},
      {"noise.log_sf_asymptotic", check_log_sf_asymptotic},
      {"pricing.unimodality", check_unimodality},
      {"pricing.greedy_contraction", check_greedy_contraction},
      {"pricing.gaussian_scaling", check_gaussian_scaling},
      {"pricing.fixed_point", check_fixed_point},
      {"pricing.first_order_residual", check_first_order_residual},
      {"pricing.quadratic_regret", check_quadratic_regret},
      {"loss.derivatives", check_loss_derivatives},
      {"loss.convexity", check_convexity},
      {"loss.hessian_sandwich", check_hessian_sandwich},
      {"loss.exp_concavity", check_exp_concavity},
      {"loss.expected_score", check_expected_score},
      {"loss.quadratic_growth", check_quadratic_growth},
      {"loss.probit_equivalence", check_probit_equivalence},
      {"loss.mle_stationarity", check_mle_stationarity},
      {"region.nonexpansive", check_projection_nonexpansive},
      {"region.weighted_feasible", check_projection_feasible},
      {"region.variational_inequality", check_projection_variational},
      {"policy.price_window", check_price_window},
      {"policy.emlp_switches", check_emlp_switches},
      {"policy.onsp_determinism", check_onsp_determinism},
      {"policy.onsp_min_eigenvalue", check_onsp_min_eigenvalue},
      {"policy.onsp_inverse_update", check_onsp_inverse},
      {"policy.transcript_replay", check_transcript_replay},
      {"environment.feature_bounds", check_feature_assumption},
      {"environment.reproducible", check_environment_reproducible},
      {"environment.acceptance_frequency", check_acceptance_frequency},
      {"lower_bound.price_gap", check_lower_bound_price},
      {"lower_bound.reward_curvature", check_lower_bound_curvature},
      {"harness.regret_nonnegative", check_regret_nonnegative},
      {"harness.episode_determinism", check_episode_determinism},
      {"harness.surrogate_gap", check_surrogate_gap},
      {"parallel.kernel_agreement", check_kernel_agreement},
  };
  return checks;
}

}  // namespace

std::vector<std::string> verification_check_names() {
  std::vector<std::string> names;
  for (const auto& c : registry()) names.emplace_back(c.name);
  return names;
}

std::vector<CheckResult> run_verification(const VerifyOptions& options, const std::string& filter) {
  PricingProblem problem(NoiseModel::gaussian(0.25), FeasibleRegion::orthant_ball(2, 1.0), 1.0);
  AnalysisConstants constants =
      compute_constants(problem.noise(), 1.0, {options.fast ? std::size_t{2001} : std::size_t{10001}, options.execution});
  if (options.fault == Fault::NegateCurvatureMin) constants.curvature_min = -constants.curvature_min;
  const Context ctx{options, problem, constants};

  std::vector<CheckResult> results;
  for (const auto& check : registry()) {
    if (!std::string_view(check.name).starts_with(filter)) continue;
    const auto start = std::chrono::steady_clock::now();
    CheckResult r{check.name, true, "", 0.0};
    try {
      r.detail = check.fn(ctx);
    } catch (const CheckFailure& e) {
      r.passed = false;
      r.detail = e.what();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(std::move(r));
  }
  return results;
}

bool print_verification(std::ostream& out, const std::vector<CheckResult>& results) {
  bool ok = true;
  double total = 0.0;
  for (const auto& r : results) {
    out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << "  " << r.detail << '\n';
    ok = ok && r.passed;
    total += r.seconds;
  }
  std::size_t failed = 0;
  for (const auto& r : results) failed += !r.passed;
  out << results.size() - failed << '/' << results.size() << " checks passed in " << total << " s\n";
  return ok;
}

}  // namespace pricelab
