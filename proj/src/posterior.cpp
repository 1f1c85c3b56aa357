#include "pdelab/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "pdelab/density.hpp"
#include "pdelab/error.hpp"
#include "pdelab/quadrature.hpp"

namespace pdelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Atoms {
  std::vector<Vec> points;
  std::vector<double> weights;
};

Atoms counting_atoms(const ThetaPrior& p, int d) {
  if (const auto* t = std::get_if<TwoPointPrior>(&p)) {
    return {{along_first_axis(d, -t->m), along_first_axis(d, t->m)}, {0.5, 0.5}};
  }
  const auto& g = std::get<GridPrior>(p);
  return {g.points, g.weights};
}

// log of integral over eta > 0 of eta^{power} exp(log_f(eta * scale)).
double log_eta_integral(const std::function<double(double)>& log_f, double power, double scale) {
  auto log_g = [&](double eta) { return power * std::log(eta) + log_f(eta * scale); };
  return quad::log_integrate_half_line(log_g, "eta integral of the posterior kernel", 1e-11).value;
}

}  // namespace

PosteriorRep::PosteriorRep(const ModelSpec& spec, PriorSpec prior, ConstSpan x, ConstSpan u,
                           const IntegrationOptions& opts)
    : model_(std::make_shared<Model>(spec)),
      prior_(std::move(prior)),
      x_(x.begin(), x.end()),
      d_(spec.d),
      k_(spec.k),
      opts_(opts) {
  validate(prior_, d_);
  require(x.size() == static_cast<std::size_t>(d_), "posterior: x must have d coordinates");
  require(u.size() == static_cast<std::size_t>(k_), "posterior: u must have k coordinates");
  s_ = squared_norm(u);
  require(s_ > 0.0, "posterior: ||u|| must be > 0");
  p_ = prior_.a + 1.0 + 0.5 * (d_ + k_);

  auto log_h = [this](double tau) { return tau_log_density(tau); };
  if (const std::string why = quad::half_line_integrability(log_h); !why.empty()) {
    throw NumericalError("posterior: tau condition fails, integral of tau^{a+(d+k)/2} f(tau) diverges (" +
                         why + ")");
  }
  try {
    tau_table_ = std::make_shared<InverseCdfTable>(log_h);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("posterior: tau condition fails: ") + e.what());
  }
  tau_log_norm_ = tau_table_->log_normalizer();

  try {
    theta_log_norm_ = log_kernel_integral(prior_.pi1, x_, s_, 1.0, p_, opts_);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("posterior: theta condition fails, integral of pi_1(theta) "
                                     "(||theta-x||^2+||u||^2)^{-(a+1+(d+k)/2)} diverges: ") +
                         e.what());
  }
}

double PosteriorRep::tau_log_density(double tau) const {
  return (prior_.a + 0.5 * (d_ + k_)) * std::log(tau) + model_->log_marginal_radial(tau);
}

double PosteriorRep::theta_log_density(ConstSpan theta) const {
  return log_prior_weight(prior_.pi1, theta) - p_ * std::log(squared_distance(theta, x_) + s_);
}

double PosteriorRep::theta_log_posterior(ConstSpan theta) const {
  return theta_log_density(theta) - theta_log_norm_.value;
}

double PosteriorRep::tau_moment(double b) const {
  auto log_h = [&](double tau) { return tau_log_density(tau) + b * std::log(tau); };
  if (!quad::half_line_integrability(log_h).empty()) return kInf;
  return std::exp(quad::log_integrate_half_line(log_h, "posterior tau moment").value - tau_log_norm_);
}

std::vector<double> PosteriorRep::sample_tau(std::size_t n, Rng& rng) const {
  std::vector<double> out(n);
  for (double& t : out) t = tau_table_->quantile(rng.uniform());
  return out;
}

std::vector<Vec> PosteriorRep::sample_theta(std::size_t n, Rng& rng) const {
  std::vector<Vec> out;
  out.reserve(n);
  const double nu = 2.0 * p_ - d_;
  const StudentParams proposal{nu, x_, std::sqrt(s_ / nu)};
  if (std::holds_alternative<FlatPrior>(prior_.pi1)) {
    Vec t(static_cast<std::size_t>(d_));
    for (std::size_t i = 0; i < n; ++i) {
      sample_student(proposal, rng, t);
      out.push_back(t);
    }
    return out;
  }
  std::vector<Vec> support;
  Vec log_w;
  if (std::holds_alternative<HarmonicPrior>(prior_.pi1)) {
    // Sampling-importance-resampling from the flat-prior Student; the weight
    // is the prior ||theta||^{2-d}.
    const std::size_t m = std::max<std::size_t>(20 * n, 1000);
    Vec t(static_cast<std::size_t>(d_));
    for (std::size_t i = 0; i < m; ++i) {
      sample_student(proposal, rng, t);
      support.push_back(t);
      log_w.push_back(log_prior_weight(prior_.pi1, t));
    }
  } else {
    const Atoms atoms = counting_atoms(prior_.pi1, d_);
    support = atoms.points;
    for (const Vec& pt : support) log_w.push_back(theta_log_density(pt));
  }
  const double hi = *std::max_element(log_w.begin(), log_w.end());
  Vec cum(log_w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    acc += std::exp(log_w[i] - hi);
    cum[i] = acc;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double v = rng.uniform() * acc;
    const auto it = std::upper_bound(cum.begin(), cum.end(), v);
    out.push_back(support[std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), support.size() - 1)]);
  }
  return out;
}

PosteriorRep build_posterior(const ModelSpec& spec, const PriorSpec& prior, ConstSpan x, ConstSpan u,
                             const IntegrationOptions& opts) {
  return PosteriorRep(spec, prior, x, u, opts);
}

std::vector<double> brute_force_theta_marginal(const ModelSpec& spec, const PriorSpec& prior, ConstSpan x,
                                               ConstSpan u, const std::vector<double>& theta_grid) {
  require(spec.d == 1, "brute_force_theta_marginal supports d = 1 only");
  require(x.size() == 1 && u.size() == static_cast<std::size_t>(spec.k), "brute_force_theta_marginal: bad x or u");
  validate(prior, 1);
  const Model model(spec);
  const double s = squared_norm(u);
  require(s > 0.0, "brute_force_theta_marginal: ||u|| must be > 0");
  const double power = prior.a + 0.5 * (spec.d + spec.k);
  const auto log_f = [&](double t) { return model.log_marginal_radial(t); };
  const double xv = x[0];
  auto log_g = [&](double th) {
    const double w = log_prior_weight(prior.pi1, ConstSpan(&th, 1));
    if (!std::isfinite(w)) return -kInf;
    return w + log_eta_integral(log_f, power, (xv - th) * (xv - th) + s);
  };

  std::vector<double> out;
  out.reserve(theta_grid.size());
  if (is_lebesgue(prior.pi1)) {
    const double ref = log_g(xv);
    auto f = [&](double w) { return std::exp(log_g(xv + w) - ref); };
    const double log_z =
        ref + std::log(quad::integrate_checked(f, -kInf, kInf, "brute-force theta normalizer", 1e-10, 1e-7).value);
    for (double th : theta_grid) out.push_back(std::exp(log_g(th) - log_z));
    return out;
  }
  const Atoms atoms = counting_atoms(prior.pi1, 1);
  Vec terms;
  for (std::size_t i = 0; i < atoms.points.size(); ++i) {
    terms.push_back(std::log(atoms.weights[i]) + log_eta_integral(log_f, power, (xv - atoms.points[i][0]) * (xv - atoms.points[i][0]) + s));
  }
  const double log_z = log_sum_exp(terms);
  for (double th : theta_grid) {
    double prob = 0.0;
    for (std::size_t i = 0; i < atoms.points.size(); ++i) {
      if (atoms.points[i][0] == th) prob += std::exp(terms[i] - log_z);
    }
    out.push_back(prob);
  }
  return out;
}

double two_point_estimator_closed_form(double x, double s, double m, int k, double a) {
  const double e = a + 0.5 * (k + 5.0);
  const double log_a = e * std::log((x - m) * (x - m) + s);
  const double log_b = e * std::log((x + m) * (x + m) + s);
  // m (B - A) / (B + A) = m tanh((log B - log A) / 2)
  return m * std::tanh(0.5 * (log_b - log_a));
}

Vec scale_invariant_bayes_estimator(const PriorSpec& prior, ConstSpan x, ConstSpan u, int d, int k, double a,
                                    const IntegrationOptions& opts) {
  require(d >= 1 && k >= 1, "scale_invariant_bayes_estimator: d and k must be >= 1");
  require(x.size() == static_cast<std::size_t>(d), "scale_invariant_bayes_estimator: x must have d coordinates");
  require(u.size() == static_cast<std::size_t>(k), "scale_invariant_bayes_estimator: u must have k coordinates");
  PriorSpec pr = prior;
  pr.a = a;
  validate(pr, d);
  const double s = squared_norm(u);
  require(s > 0.0, "scale_invariant_bayes_estimator: ||u|| must be > 0");
  const double p2 = a + 2.0 + 0.5 * (d + k);

  if (!is_lebesgue(prior.pi1)) {
    const Atoms atoms = counting_atoms(prior.pi1, d);
    Vec log_w(atoms.points.size());
    for (std::size_t i = 0; i < log_w.size(); ++i) {
      log_w[i] = std::log(atoms.weights[i]) - p2 * std::log(squared_distance(atoms.points[i], x) + s);
    }
    const double hi = *std::max_element(log_w.begin(), log_w.end());
    Vec num(static_cast<std::size_t>(d), 0.0);
    double den = 0.0;
    for (std::size_t i = 0; i < log_w.size(); ++i) {
      const double w = std::exp(log_w[i] - hi);
      den += w;
      for (int j = 0; j < d; ++j) num[j] += w * atoms.points[i][j];
    }
    for (double& v : num) v /= den;
    return num;
  }

  // Tail exponents of the numerator (first moment) and denominator integrals.
  const double prior_exp = std::holds_alternative<HarmonicPrior>(prior.pi1) ? 2.0 - d : 0.0;
  if (!(2.0 * p2 > d + prior_exp + 1.0)) {
    throw NumericalError("scale_invariant_bayes_estimator: the first posterior moment integral diverges");
  }

  Vec out(x.begin(), x.end());
  if (std::holds_alternative<FlatPrior>(prior.pi1) && d <= 2) {
    auto kernel = [&](double r2) { return std::exp(-p2 * std::log1p(r2 / s)); };
    if (d == 1) {
      const double den = quad::integrate_checked([&](double w) { return kernel(w * w); }, -kInf, kInf,
                                                 "estimator denominator", 1e-12, 1e-8).value;
      const double num = quad::integrate(
          [&](double w) { return w * kernel(w * w); }, -kInf, kInf, 1e-12).value;
      out[0] += num / den;
      return out;
    }
    const double two_pi = 2.0 * std::numbers::pi;
    for (int j = 0; j < 2; ++j) {
      auto radial = [&](double r) {
        const double ang = quad::integrate(
            [&](double phi) { return j == 0 ? std::cos(phi) : std::sin(phi); }, 0.0, two_pi, 1e-12).value;
        return r * r * ang * kernel(r * r);
      };
      const double num = quad::integrate(radial, 0.0, kInf, 1e-12).value;
      const double den = two_pi * quad::integrate([&](double r) { return r * kernel(r * r); }, 0.0, kInf, 1e-12).value;
      out[j] += num / den;
    }
    return out;
  }

  // Importance sampling with antithetic pairs from the Student whose density
  // is proportional to (||theta - x||^2 + s)^{-p2}; the weight is pi_1.
  const double nu = 2.0 * p2 - d;
  const double sigma = std::sqrt(s / nu);
  Rng rng(RngStream{opts.seed, 0x5ca1e});
  const std::size_t pairs = std::max<std::size_t>(opts.is_draws / 2, 50);
  Vec z(static_cast<std::size_t>(d));
  Vec th_plus(static_cast<std::size_t>(d));
  Vec th_minus(static_cast<std::size_t>(d));
  Vec num(static_cast<std::size_t>(d), 0.0);
  double den = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    rng.fill_normal(z);
    const double w = sigma * std::sqrt(nu / rng.chi_square(nu));
    for (int j = 0; j < d; ++j) {
      th_plus[j] = x[j] + w * z[j];
      th_minus[j] = x[j] - w * z[j];
    }
    const double wp = std::exp(log_prior_weight(prior.pi1, th_plus));
    const double wm = std::exp(log_prior_weight(prior.pi1, th_minus));
    den += wp + wm;
    for (int j = 0; j < d; ++j) num[j] += wp * th_plus[j] + wm * th_minus[j];
  }
  if (!(den > 0.0) || !std::isfinite(den)) {
    throw NumericalError("scale_invariant_bayes_estimator: degenerate importance weights");
  }
  for (int j = 0; j < d; ++j) out[j] = num[j] / den;
  return out;
}

double posterior_expected_loss(const PosteriorRep& rep, double delta, double b,
                               const std::function<double(double)>& rho) {
  require(rep.d() == 1, "posterior_expected_loss supports d = 1 only");
  const double tau_b = rep.tau_moment(b);
  if (!std::isfinite(tau_b)) throw NumericalError("posterior_expected_loss: E[tau^b] diverges");
  const double xv = rep.x()[0];
  auto term = [&](double th) {
    const double a2 = (th - xv) * (th - xv) + rep.s();
    return std::exp(rep.theta_log_posterior(ConstSpan(&th, 1)) - b * std::log(a2)) * rho((delta - th) * (delta - th));
  };
  if (is_lebesgue(rep.prior().pi1)) {
    return tau_b * quad::integrate_checked([&](double w) { return term(xv + w); }, -kInf, kInf,
                                           "posterior expected loss", 1e-10, 1e-6).value;
  }
  const Atoms atoms = counting_atoms(rep.prior().pi1, 1);
  double total = 0.0;
  for (const Vec& pt : atoms.points) total += term(pt[0]);
  return tau_b * total;
}

double minimize_posterior_expected_loss(const PosteriorRep& rep, double b,
                                        const std::function<double(double)>& rho) {
  require(rep.d() == 1, "minimize_posterior_expected_loss supports d = 1 only");
  const double xv = rep.x()[0];
  double span = 10.0 * std::sqrt(rep.s()) + std::abs(xv);
  if (!is_lebesgue(rep.prior().pi1)) {
    for (const Vec& pt : counting_atoms(rep.prior().pi1, 1).points) span = std::max(span, std::abs(pt[0] - xv));
  }
  auto f = [&](double delta) { return posterior_expected_loss(rep, delta, b, rho); };
  return boost::math::tools::brent_find_minima(f, xv - span, xv + span, 50).first;
}

}  // namespace pdelab
