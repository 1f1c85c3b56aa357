#include "pdelab/bayes_pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include "pdelab/error.hpp"
#include "pdelab/quadrature.hpp"
#include "pdelab/rng.hpp"

namespace pdelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// Sorted radii ||T|| of a standard d-variate Student with nu degrees of
// freedom, with suffix sums of R^{2-d} and R^{2(2-d)} for O(log N) averages.
struct RadiusPool {
  std::vector<double> radius;
  std::vector<double> suffix1;
  std::vector<double> suffix2;
};

using PoolKey = std::tuple<int, double, std::size_t, std::uint64_t>;

std::shared_ptr<const RadiusPool> radius_pool(int d, double nu, std::size_t n, std::uint64_t seed) {
  static std::mutex mutex;
  static std::map<PoolKey, std::shared_ptr<const RadiusPool>> cache;
  const PoolKey key{d, nu, n, seed};
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto pool = std::make_shared<RadiusPool>();
  // The stream id folds in (d, nu) so pools of different shape never share draws.
  Rng rng(RngStream{seed, 0x9e3779b97f4a7c15ULL ^ (static_cast<std::uint64_t>(d) << 32) ^
                              static_cast<std::uint64_t>(std::llround(nu * 1024.0))});
  pool->radius.resize(n);
  for (double& r : pool->radius) r = std::sqrt(rng.chi_square(d) * nu / rng.chi_square(nu));
  std::sort(pool->radius.begin(), pool->radius.end());
  pool->suffix1.assign(n + 1, 0.0);
  pool->suffix2.assign(n + 1, 0.0);
  const double e = 2.0 - d;
  for (std::size_t i = n; i-- > 0;) {
    const double v = std::pow(pool->radius[i], e);
    pool->suffix1[i] = pool->suffix1[i + 1] + v;
    pool->suffix2[i] = pool->suffix2[i + 1] + v * v;
  }
  std::lock_guard<std::mutex> lock(mutex);
  return cache.emplace(key, std::move(pool)).first->second;
}

double log_student_kernel_mass(int d, double offset, double power) {
  // integral over R^d of (offset + ||phi||^2)^{-power}
  return 0.5 * d * std::log(std::numbers::pi) + log_gamma(power - 0.5 * d) - log_gamma(power) +
         (0.5 * d - power) * std::log(offset);
}

LogEstimate harmonic_integral(ConstSpan center, double offset, double curvature, double power,
                              const IntegrationOptions& opts) {
  const int d = static_cast<int>(center.size());
  const double nu = 2.0 * power - d;
  if (!(nu > 0.0)) throw NumericalError("harmonic prior integral diverges (2*power <= d)");
  const std::size_t n = opts.is_draws;
  require(n >= 100, "importance sampling budget must be >= 100 draws");
  const auto pool = radius_pool(d, nu, n, opts.seed);

  // Spherical average of ||theta||^{2-d} over the sphere of radius rho about
  // `center` equals max(||center||, rho)^{2-d}; only the proposal radius is random.
  const double e = 2.0 - d;
  const double a = std::sqrt(squared_norm(center));
  const double b = std::sqrt(offset / nu / curvature);
  const auto split = std::upper_bound(pool->radius.begin(), pool->radius.end(), a / b);
  const std::size_t j = static_cast<std::size_t>(split - pool->radius.begin());
  const double inner = j > 0 ? static_cast<double>(j) : 0.0;
  const double ae = j > 0 ? std::pow(a, e) : 0.0;
  const double be = std::pow(b, e);
  const double mean = (inner * ae + be * pool->suffix1[j]) / static_cast<double>(n);
  const double meansq = (inner * ae * ae + be * be * pool->suffix2[j]) / static_cast<double>(n);
  if (!(mean > 0.0) || !std::isfinite(meansq)) {
    throw NumericalError("harmonic prior importance weights are degenerate");
  }
  const double ess = static_cast<double>(n) * mean * mean / meansq;
  if (ess < 0.01 * static_cast<double>(n)) {
    std::ostringstream msg;
    msg << "harmonic prior importance sampling: effective sample size " << ess << " < 1% of " << n;
    throw NumericalError(msg.str());
  }
  const double var = std::max(meansq - mean * mean, 0.0);
  const double rel_se = std::sqrt(var / static_cast<double>(n)) / mean;
  return {-0.5 * d * std::log(curvature) + log_student_kernel_mass(d, offset, power) + std::log(mean), rel_se};
}

LogEstimate flat_integral(ConstSpan center, double offset, double curvature, double power,
                          const IntegrationOptions& opts) {
  const int d = static_cast<int>(center.size());
  if (!(power > 0.5 * d)) throw NumericalError("flat prior integral diverges (2*power <= d)");
  const double dm1 = d - 1;
  auto log_f = [&](double r) { return dm1 * std::log(r) - power * std::log(offset + r * r); };
  const quad::Result r = quad::log_integrate_half_line(log_f, "flat prior kernel", opts.rel_tol);
  return {log_unit_sphere_area(d) - 0.5 * d * std::log(curvature) + r.value, 0.0};
}

LogEstimate counting_integral(const std::vector<Vec>& points, const std::vector<double>& weights,
                              ConstSpan center, double offset, double curvature, double power) {
  Vec terms(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    terms[i] = std::log(weights[i]) - power * std::log(offset + curvature * squared_distance(points[i], center));
  }
  return {log_sum_exp(terms), 0.0};
}

}  // namespace

std::string prior_label(const PriorSpec& p) {
  std::ostringstream os;
  std::visit(Overloaded{[&](const FlatPrior&) { os << "flat"; }, [&](const HarmonicPrior&) { os << "harmonic"; },
                        [&](const TwoPointPrior& t) { os << "two-point(" << t.m << ")"; },
                        [&](const GridPrior& g) { os << "grid(" << g.points.size() << ")"; }},
             p.pi1);
  os << ";a=" << p.a;
  return os.str();
}

bool is_lebesgue(const ThetaPrior& p) {
  return std::holds_alternative<FlatPrior>(p) || std::holds_alternative<HarmonicPrior>(p);
}

void validate(const PriorSpec& p, int d) {
  require(std::isfinite(p.a), "prior.a must be finite");
  std::visit(Overloaded{[](const FlatPrior&) {},
                        [&](const HarmonicPrior&) { require(d >= 3, "harmonic prior requires d >= 3"); },
                        [](const TwoPointPrior& t) {
                          require(std::isfinite(t.m) && t.m > 0.0, "two-point prior needs m > 0");
                        },
                        [&](const GridPrior& g) {
                          require(!g.points.empty(), "grid prior needs at least one point");
                          require(g.points.size() == g.weights.size(), "grid prior needs one weight per point");
                          for (std::size_t i = 0; i < g.points.size(); ++i) {
                            require(g.points[i].size() == static_cast<std::size_t>(d),
                                    "grid prior points must have d coordinates");
                            require(all_finite(g.points[i]), "grid prior points must be finite");
                            require(std::isfinite(g.weights[i]) && g.weights[i] > 0.0,
                                    "grid prior weights must be > 0");
                          }
                        }},
             p.pi1);
}

double log_prior_weight(const ThetaPrior& p, ConstSpan theta) {
  return std::visit(Overloaded{[](const FlatPrior&) { return 0.0; },
                               [&](const HarmonicPrior&) {
                                 return (2.0 - static_cast<double>(theta.size())) * 0.5 *
                                        std::log(squared_norm(theta));
                               },
                               [&](const TwoPointPrior& t) {
                                 const Vec e = along_first_axis(static_cast<int>(theta.size()), t.m);
                                 const bool hit = squared_distance(theta, e) == 0.0 ||
                                                  squared_distance_scaled(theta, -1.0, e) == 0.0;
                                 return hit ? std::log(0.5) : -kInf;
                               },
                               [&](const GridPrior& g) {
                                 double w = 0.0;
                                 for (std::size_t i = 0; i < g.points.size(); ++i) {
                                   if (squared_distance(theta, g.points[i]) == 0.0) w += g.weights[i];
                                 }
                                 return w > 0.0 ? std::log(w) : -kInf;
                               }},
                    p);
}

double exponent_n(int d, int k, double a) { return d + 0.5 * k + a + 1.0; }

StudentParams pi0a_params(ConstSpan x, ConstSpan u, double c, int k, double a) {
  const double nu = k + 2.0 * a + 2.0;
  require(nu > 0.0, "pi0a_params: k + 2a + 2 must be > 0");
  require(u.size() == static_cast<std::size_t>(k), "pi0a_params: u must have k coordinates");
  require(c > 0.0, "pi0a_params: c must be > 0");
  const double s = squared_norm(u);
  require(s > 0.0, "pi0a_params: ||u|| must be > 0");
  return StudentParams{nu, scaled(x, c), std::sqrt((1.0 + c * c) * s / nu)};
}

LogEstimate log_kernel_integral(const ThetaPrior& prior, ConstSpan center, double offset, double curvature,
                                double power, const IntegrationOptions& opts) {
  require(offset > 0.0 && curvature > 0.0, "log_kernel_integral: offset and curvature must be > 0");
  return std::visit(
      Overloaded{[&](const FlatPrior&) { return flat_integral(center, offset, curvature, power, opts); },
                 [&](const HarmonicPrior&) {
                   require(center.size() >= 3, "harmonic prior requires d >= 3");
                   return harmonic_integral(center, offset, curvature, power, opts);
                 },
                 [&](const TwoPointPrior& t) {
                   const int d = static_cast<int>(center.size());
                   const std::vector<Vec> pts{along_first_axis(d, -t.m), along_first_axis(d, t.m)};
                   return counting_integral(pts, {0.5, 0.5}, center, offset, curvature, power);
                 },
                 [&](const GridPrior& g) {
                   return counting_integral(g.points, g.weights, center, offset, curvature, power);
                 }},
      prior);
}

PredictiveDensity PredictiveDensity::student(StudentParams p) {
  validate(p);
  return PredictiveDensity(std::move(p));
}

PredictiveDensity PredictiveDensity::bayes(const PriorSpec& prior, ConstSpan x, ConstSpan u, double c, int k,
                                           const IntegrationOptions& opts) {
  const int d = static_cast<int>(x.size());
  require(d >= 1, "bayes predictive density: x must be non-empty");
  require(u.size() == static_cast<std::size_t>(k), "bayes predictive density: u must have k coordinates");
  require(c > 0.0, "bayes predictive density: c must be > 0");
  validate(prior, d);
  require(k + 2.0 * prior.a + 2.0 > 0.0, "bayes predictive density: k + 2a + 2 must be > 0");
  Bayes b;
  b.prior = prior;
  b.x.assign(x.begin(), x.end());
  b.s = squared_norm(u);
  require(b.s > 0.0, "bayes predictive density: ||u|| must be > 0");
  b.c = c;
  b.n = exponent_n(d, k, prior.a);
  b.k = k;
  b.opts = opts;
  // Integrating y out of (A + ||y - c theta||^2)^{-n} leaves a theta integral
  // of (||x - theta||^2 + s)^{-(n - d/2)}.
  const double p = b.n - 0.5 * d;
  const LogEstimate inner = log_kernel_integral(prior.pi1, b.x, b.s, 1.0, p, opts);
  b.log_norm = {0.5 * d * std::log(std::numbers::pi) + log_gamma(p) - log_gamma(b.n) + inner.value, inner.se};
  if (b.log_norm.se > opts.se_target) {
    std::ostringstream msg;
    msg << "predictive normalizer standard error " << b.log_norm.se << " exceeds target " << opts.se_target;
    throw NumericalError(msg.str());
  }
  return PredictiveDensity(std::move(b));
}

LogEstimate PredictiveDensity::log_pdf_estimate(ConstSpan y) const {
  if (const auto* p = std::get_if<StudentParams>(&state_)) return {student_logpdf(*p, y), 0.0};
  const Bayes& b = std::get<Bayes>(state_);
  require(y.size() == b.x.size(), "predictive density: y must have d coordinates");
  const double c2 = 1.0 + b.c * b.c;
  const double q = b.s + squared_distance_scaled(y, b.c, b.x) / c2;
  Vec center(b.x.size());
  for (std::size_t i = 0; i < center.size(); ++i) center[i] = (b.x[i] + b.c * y[i]) / c2;
  const LogEstimate num = log_kernel_integral(b.prior.pi1, center, q, c2, b.n, b.opts);
  return {num.value - b.log_norm.value, std::hypot(num.se, b.log_norm.se)};
}

LogEstimate PredictiveDensity::log_normalizer() const {
  if (is_closed_form()) return {0.0, 0.0};
  return std::get<Bayes>(state_).log_norm;
}

StudentParams PredictiveDensity::reference_student() const {
  if (const auto* p = std::get_if<StudentParams>(&state_)) return *p;
  const Bayes& b = std::get<Bayes>(state_);
  const double nu = b.k + 2.0 * b.prior.a + 2.0;
  return StudentParams{nu, scaled(b.x, b.c), std::sqrt((1.0 + b.c * b.c) * b.s / nu)};
}

double numeric_predictive_logpdf(const PredictiveDensity& h, ConstSpan y) { return h.log_pdf(y); }

double predictive_mass_d1(const PredictiveDensity& h) {
  const StudentParams r = h.reference_student();
  require(r.d() == 1, "predictive_mass_d1 needs d = 1");
  const double center = r.xi[0];
  const double scale = r.sigma;
  auto f = [&](double t) {
    const double y = center + scale * t;
    return std::exp(h.log_pdf(ConstSpan(&y, 1)));
  };
  return scale * quad::integrate_checked(f, -kInf, kInf, "predictive density mass", 1e-10, 1e-7).value;
}

FIndependenceReport f_independence_check(const PriorSpec& prior, const std::vector<ModelSpec>& models,
                                         ConstSpan x, ConstSpan u, const Vec& y_grid) {
  require(!models.empty(), "f_independence_check needs at least one model");
  require(!y_grid.empty(), "f_independence_check needs a non-empty y grid");
  const ModelSpec& ref = models.front();
  for (const ModelSpec& m : models) {
    require(m.d == 1, "f_independence_check supports d = 1 only");
    require(m.k == ref.k && m.c == ref.c && m.eta == ref.eta && m.theta == ref.theta,
            "f_independence_check: models must share (d, k, c, theta, eta)");
  }
  validate(prior, 1);
  require(x.size() == 1 && u.size() == static_cast<std::size_t>(ref.k), "f_independence_check: bad x or u size");
  const double s = squared_norm(u);
  const double c = ref.c;
  const int k = ref.k;

  FIndependenceReport rep;
  rep.y_grid = y_grid;
  const PredictiveDensity formula = PredictiveDensity::bayes(prior, x, u, c, k);
  for (double y : y_grid) rep.formula.push_back(formula.log_pdf(ConstSpan(&y, 1)));

  for (const ModelSpec& spec : models) {
    const Model model(spec);
    rep.labels.push_back(family_label(spec.radial));
    const double D = model.total_dim();
    const double M = spec.d + spec.k;
    // log of the eta integral of eta^a * eta^{dim/2} f_dim(eta * b).
    auto eta_integral = [&](double b, bool joint) {
      const double dim = joint ? D : M;
      auto log_g = [&](double eta) {
        const double lf = joint ? model.joint_radial().log_f(eta * b) : model.log_marginal_radial(eta * b);
        return (prior.a + 0.5 * dim) * std::log(eta) + lf;
      };
      const std::string bad = quad::half_line_integrability(log_g);
      if (!bad.empty()) {
        throw NumericalError("f_independence_check: eta integral diverges for " + family_label(spec.radial) +
                             " with a = " + std::to_string(prior.a) + " (" + bad + ")");
      }
      return quad::log_integrate_half_line(log_g, "posterior eta integral", 1e-11).value;
    };
    auto theta_integral = [&](const std::function<double(double)>& log_h, double center) {
      if (const auto* t = std::get_if<TwoPointPrior>(&prior.pi1)) {
        const Vec terms{std::log(0.5) + log_h(-t->m), std::log(0.5) + log_h(t->m)};
        return log_sum_exp(terms);
      }
      if (const auto* g = std::get_if<GridPrior>(&prior.pi1)) {
        Vec terms;
        for (std::size_t i = 0; i < g->points.size(); ++i) terms.push_back(std::log(g->weights[i]) + log_h(g->points[i][0]));
        return log_sum_exp(terms);
      }
      const double ref_val = log_h(center);
      auto f = [&](double w) { return std::exp(log_h(center + w) - ref_val); };
      return ref_val + std::log(quad::integrate_checked(f, -kInf, kInf, "posterior theta integral", 1e-9, 1e-6).value);
    };
    const double xv = x[0];
    const double log_den = theta_integral(
        [&](double th) { return eta_integral((xv - th) * (xv - th) + s, false); }, xv);
    Vec row;
    for (double y : y_grid) {
      const double log_num = theta_integral(
          [&](double th) { return eta_integral((xv - th) * (xv - th) + s + (y - c * th) * (y - c * th), true); },
          (xv + c * y) / (1.0 + c * c));
      row.push_back(log_num - log_den);
    }
    rep.log_density.push_back(std::move(row));
  }
  for (std::size_t j = 0; j < y_grid.size(); ++j) {
    for (std::size_t i = 0; i < rep.log_density.size(); ++i) {
      rep.max_formula_error = std::max(rep.max_formula_error, std::abs(rep.log_density[i][j] - rep.formula[j]));
      for (std::size_t l = i + 1; l < rep.log_density.size(); ++l) {
        rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(rep.log_density[i][j] - rep.log_density[l][j]));
      }
    }
  }
  return rep;
}

}  // namespace pdelab
