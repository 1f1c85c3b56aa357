#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pdelab/bayes_pde.hpp"
#include "pdelab/inverse_cdf.hpp"
#include "pdelab/model.hpp"
#include "pdelab/rng.hpp"

namespace pdelab {

/// Posterior of (theta, tau) with tau = eta (||x - theta||^2 + ||u||^2) under
/// a separable prior pi_1(theta) eta^a. The two factors are independent:
///   tau   ~ tau^{a + (d+k)/2} f_{d+k}(tau)
///   theta ~ pi_1(theta) (||theta - x||^2 + ||u||^2)^{-(a + 1 + (d+k)/2)}.
class PosteriorRep {
 public:
  PosteriorRep(const ModelSpec& spec, PriorSpec prior, ConstSpan x, ConstSpan u,
               const IntegrationOptions& opts = {});

  int d() const { return d_; }
  int k() const { return k_; }
  const PriorSpec& prior() const { return prior_; }
  const Vec& x() const { return x_; }
  double s() const { return s_; }
  /// Exponent a + 1 + (d+k)/2 of the theta kernel.
  double theta_power() const { return p_; }

  /// Unnormalized log densities.
  double tau_log_density(double tau) const;
  double theta_log_density(ConstSpan theta) const;

  double tau_log_normalizer() const { return tau_log_norm_; }
  LogEstimate theta_log_normalizer() const { return theta_log_norm_; }

  /// Normalized theta log density (log probability for counting priors).
  double theta_log_posterior(ConstSpan theta) const;
  double tau_log_posterior(double tau) const { return tau_log_density(tau) - tau_log_norm_; }

  /// E[tau^b | x, u] by quadrature; infinite when the moment diverges.
  double tau_moment(double b) const;
  double tau_mean() const { return tau_moment(1.0); }

  std::vector<double> sample_tau(std::size_t n, Rng& rng) const;
  /// Student draws for the flat prior, categorical draws for counting
  /// priors and sampling-importance-resampling for the harmonic prior.
  std::vector<Vec> sample_theta(std::size_t n, Rng& rng) const;

 private:
  std::shared_ptr<const Model> model_;
  PriorSpec prior_;
  Vec x_;
  double s_ = 0.0;
  int d_ = 1;
  int k_ = 1;
  double p_ = 0.0;
  double tau_log_norm_ = 0.0;
  LogEstimate theta_log_norm_;
  IntegrationOptions opts_;
  std::shared_ptr<const InverseCdfTable> tau_table_;
};

/// Throws InvalidArgument/NumericalError naming the finiteness condition (tau
/// moment or theta kernel) that fails.
PosteriorRep build_posterior(const ModelSpec& spec, const PriorSpec& prior, ConstSpan x, ConstSpan u,
                             const IntegrationOptions& opts = {});

/// Theta marginal from the unfactorized kernel eta^{a+(d+k)/2} f_{d+k}(eta(||x-theta||^2+||u||^2)) pi_1(theta)
/// integrated over eta, d = 1. Lebesgue priors: normalized by quadrature over
/// theta, returned as densities. Counting priors: normalized over the prior
/// support, returned as probabilities (0 off the support).
std::vector<double> brute_force_theta_marginal(const ModelSpec& spec, const PriorSpec& prior, ConstSpan x,
                                               ConstSpan u, const std::vector<double>& theta_grid);

/// Bayes estimator under eta ||delta - theta||^2: the ratio of integrals of
/// theta pi_1 and pi_1 against (||theta - x||^2 + ||u||^2)^{-(a + 2 + (d+k)/2)}.
Vec scale_invariant_bayes_estimator(const PriorSpec& prior, ConstSpan x, ConstSpan u, int d, int k, double a,
                                    const IntegrationOptions& opts = {});

/// m (B - A)/(B + A) with A = ((x-m)^2 + s)^e, B = ((x+m)^2 + s)^e, e = a + (k+5)/2.
double two_point_estimator_closed_form(double x, double s, double m, int k, double a);

/// E[eta^b rho(||delta - theta||^2) | x, u] for d = 1, via the factorization.
double posterior_expected_loss(const PosteriorRep& rep, double delta, double b,
                               const std::function<double(double)>& rho);

/// Minimizer of posterior_expected_loss over delta (Brent on a bracket around x).
double minimize_posterior_expected_loss(const PosteriorRep& rep, double b,
                                        const std::function<double(double)>& rho);

}  // namespace pdelab
