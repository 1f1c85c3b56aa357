#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pdelab/error.hpp"
#include "pdelab/posterior.hpp"
#include "pdelab/rng.hpp"

using namespace pdelab;

namespace {

ModelSpec model_1d(RadialFamily f, int k = 2) {
  ModelSpec s;
  s.d = 1;
  s.k = k;
  s.theta = {0.0};
  s.radial = std::move(f);
  return s;
}

}  // namespace

TEST_CASE("flat prior theta posterior is Student") {
  const Vec x{0.8, -0.3}, u{1.1, -0.6, 0.4};
  ModelSpec spec;
  spec.d = 2;
  spec.k = 3;
  spec.theta = {0.0, 0.0};
  for (double a : {-1.0, 0.0, 2.0}) {
    const PosteriorRep rep(spec, PriorSpec{FlatPrior{}, a}, x, u);
    const double nu = 3 + 2 * a + 2;
    const double s = squared_norm(u);
    const double sigma2 = s / nu;
    const Vec th{0.1, 0.5};
    const double q = squared_distance(th, x);
    const double exact = std::lgamma(0.5 * (nu + 2)) - std::lgamma(0.5 * nu) - std::log(nu * std::numbers::pi * sigma2) -
                         0.5 * (nu + 2) * std::log1p(q / (nu * sigma2));
    CHECK(rep.theta_log_posterior(th) == doctest::Approx(exact).epsilon(1e-9));
    CHECK(rep.theta_power() == doctest::Approx(a + 1 + 2.5));
  }
}

TEST_CASE("factorized theta marginal matches brute force for every f") {
  const Vec x{0.8}, u{1.1, -0.6};
  const std::vector<double> grid{-3.0, -1.5, 0.0, 0.8, 2.0, 4.0};
  for (const PriorSpec& p : {PriorSpec{FlatPrior{}, -1.0}, PriorSpec{FlatPrior{}, 0.5}, PriorSpec{TwoPointPrior{1.5}, -1.0}}) {
    const PosteriorRep rep(model_1d(NormalRadial{}), p, x, u);
    std::vector<double> grid_p = grid;
    if (!is_lebesgue(p.pi1)) grid_p = {-1.5, 0.3, 1.5};
    for (const RadialFamily& f : {RadialFamily{NormalRadial{}}, RadialFamily{StudentRadial{4.0}},
                                  RadialFamily{DiscreteRadial{{{1.0, 0.5}, {4.0, 0.5}}}}}) {
      CAPTURE(prior_label(p));
      CAPTURE(family_label(f));
      const std::vector<double> brute = brute_force_theta_marginal(model_1d(f), p, x, u, grid_p);
      for (std::size_t i = 0; i < grid_p.size(); ++i) {
        const double th = grid_p[i];
        const double lp = rep.theta_log_posterior(ConstSpan(&th, 1));
        CHECK(std::abs(std::exp(lp) - brute[i]) < 1e-9);
      }
    }
  }
}

TEST_CASE("two-point posterior mass uses exponent a + (k+3)/2") {
  const double x = 0.4, m = 1.5, a = -1.0;
  const Vec u{1.1, -0.6};
  const int k = 2;
  const double s = squared_norm(u);
  const double e = a + (k + 3) / 2.0;
  const double wp = std::pow((x - m) * (x - m) + s, -e);
  const double wm = std::pow((x + m) * (x + m) + s, -e);
  const PosteriorRep rep(model_1d(NormalRadial{}), PriorSpec{TwoPointPrior{m}, a}, Vec{x}, u);
  const double th = m;
  CHECK(std::exp(rep.theta_log_posterior(ConstSpan(&th, 1))) == doctest::Approx(wp / (wp + wm)).epsilon(1e-13));
}

TEST_CASE("tau marginal is Gamma(a + 1 + (d+k)/2, rate 1/2) for normal f") {
  for (double a : {-1.0, 0.0, 1.5}) {
    ModelSpec spec;
    spec.d = 3;
    spec.k = 4;
    spec.theta = {0, 0, 0};
    const PosteriorRep rep(spec, PriorSpec{FlatPrior{}, a}, Vec{0.5, 1.0, -0.2}, Vec{0.3, 0.9, -1.0, 0.1});
    const double shape = a + 1.0 + 3.5;
    CHECK(rep.tau_moment(1.0) == doctest::Approx(2.0 * shape).epsilon(1e-10));
    CHECK(rep.tau_moment(2.0) == doctest::Approx(4.0 * shape * (shape + 1.0)).epsilon(1e-10));
    CHECK(rep.tau_moment(-1.0) == doctest::Approx(0.5 / (shape - 1.0)).epsilon(1e-10));
    const double t = 3.0;
    CHECK(rep.tau_log_posterior(t) ==
          doctest::Approx((shape - 1) * std::log(t) - t / 2 - std::lgamma(shape) - shape * std::log(2.0)).epsilon(1e-10));
  }
}

TEST_CASE("tau moments diverge when the tail of f is too heavy") {
  const PosteriorRep rep(model_1d(StudentRadial{3.0}), PriorSpec{FlatPrior{}, -1.0}, Vec{0.1}, Vec{1.0, 0.5});
  CHECK(std::isfinite(rep.tau_moment(1.0)));
  CHECK(std::isinf(rep.tau_moment(2.0)));
}

TEST_CASE("posterior construction rejects failing conditions") {
  CHECK_THROWS_AS(build_posterior(model_1d(StudentRadial{1.0}), PriorSpec{FlatPrior{}, 1.0}, Vec{0.1}, Vec{1.0, 0.5}),
                  std::exception);
  CHECK_THROWS_AS(build_posterior(model_1d(NormalRadial{}), PriorSpec{FlatPrior{}, -2.6}, Vec{0.1}, Vec{1.0, 0.5}),
                  std::exception);
}

TEST_CASE("posterior samplers") {
  ModelSpec spec;
  spec.d = 3;
  spec.k = 5;
  spec.theta = {0, 0, 0};
  const Vec x{1.0, -0.5, 0.2}, u{0.4, -0.7, 1.0, 0.3, 0.6};
  const PosteriorRep flat(spec, PriorSpec{FlatPrior{}, -1.0}, x, u);
  Rng rng(RngStream{31, 0});
  const std::size_t n = 100000;
  const std::vector<Vec> th = flat.sample_theta(n, rng);
  double m0 = 0, v0 = 0;
  for (const Vec& t : th) {
    m0 += t[0];
    v0 += (t[0] - 1.0) * (t[0] - 1.0);
  }
  const double nu = 5.0;
  const double sigma2 = squared_norm(u) / nu;
  CHECK(m0 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(v0 / n == doctest::Approx(sigma2 * nu / (nu - 2)).epsilon(0.03));

  const std::vector<double> tau = flat.sample_tau(n, rng);
  double mt = 0;
  for (double t : tau) mt += t;
  CHECK(mt / n == doctest::Approx(2.0 * (1.0 - 1.0 + 4.0)).epsilon(0.01));

  const PosteriorRep two(spec, PriorSpec{TwoPointPrior{1.2}, -1.0}, x, u);
  const std::vector<Vec> tp = two.sample_theta(20000, rng);
  double frac = 0;
  for (const Vec& t : tp) frac += t[0] > 0;
  const double pplus = std::exp(two.theta_log_posterior(Vec{1.2, 0, 0}));
  CHECK(frac / 20000 == doctest::Approx(pplus).epsilon(0.02));

  const PosteriorRep harm(spec, PriorSpec{HarmonicPrior{}, -1.0}, x, u);
  const std::vector<Vec> hs = harm.sample_theta(20000, rng);
  double hn = 0, fn = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    hn += std::sqrt(squared_norm(hs[i]));
    fn += std::sqrt(squared_norm(th[i]));
  }
  // the harmonic prior pulls theta toward the origin
  CHECK(hn < fn);
}

TEST_CASE("two-point scale-invariant estimator closed form") {
  const Vec u{1.1, -0.6, 0.3};
  const int k = 3;
  for (double a : {-1.0, 0.0, 0.7}) {
    for (double x : {-2.0, -0.3, 0.5, 3.0}) {
      const double s = squared_norm(u), m = 1.5;
      const double e = a + (k + 5) / 2.0;
      const double A = std::pow((x - m) * (x - m) + s, e);
      const double B = std::pow((x + m) * (x + m) + s, e);
      const Vec est = scale_invariant_bayes_estimator(PriorSpec{TwoPointPrior{m}, a}, Vec{x}, u, 1, k, a);
      CHECK(est[0] == doctest::Approx(m * (B - A) / (B + A)).epsilon(1e-10));
      CHECK(two_point_estimator_closed_form(x, s, m, k, a) == doctest::Approx(m * (B - A) / (B + A)).epsilon(1e-12));
    }
    CHECK(two_point_estimator_closed_form(0.0, 1.0, 1.5, k, a) == 0.0);
    CHECK(scale_invariant_bayes_estimator(PriorSpec{TwoPointPrior{1.5}, a}, Vec{0.0}, u, 1, k, a)[0] == 0.0);
  }
}

TEST_CASE("flat-prior scale-invariant estimator is x") {
  const Vec u{1.0, 0.5, -0.2};
  CHECK(scale_invariant_bayes_estimator(PriorSpec{FlatPrior{}, -1.0}, Vec{0.7}, u, 1, 3, -1.0)[0] ==
        doctest::Approx(0.7).epsilon(1e-9));
  const Vec e2 = scale_invariant_bayes_estimator(PriorSpec{FlatPrior{}, -1.0}, Vec{0.7, -0.4}, u, 2, 3, -1.0);
  CHECK(e2[1] == doctest::Approx(-0.4).epsilon(1e-9));
  const Vec e3 = scale_invariant_bayes_estimator(PriorSpec{FlatPrior{}, -1.0}, Vec{0.7, -0.4, 0.1}, u, 3, 3, -1.0);
  CHECK(e3[0] == doctest::Approx(0.7).epsilon(1e-2));
}

TEST_CASE("minimizing posterior expected scale-invariant loss recovers the Bayes estimator") {
  const Vec u{1.1, -0.6};
  auto sq = [](double t) { return t; };
  for (const PriorSpec& p : {PriorSpec{FlatPrior{}, -1.0}, PriorSpec{TwoPointPrior{1.5}, -1.0}, PriorSpec{TwoPointPrior{0.8}, 0.5}}) {
    const Vec x{0.4};
    const PosteriorRep rep(model_1d(NormalRadial{}), p, x, u);
    const double est = scale_invariant_bayes_estimator(p, x, u, 1, 2, p.a)[0];
    CAPTURE(prior_label(p));
    CHECK(minimize_posterior_expected_loss(rep, 1.0, sq) == doctest::Approx(est).epsilon(1e-6));
    CHECK(posterior_expected_loss(rep, est, 1.0, sq) <= posterior_expected_loss(rep, est + 0.05, 1.0, sq));
  }
}
