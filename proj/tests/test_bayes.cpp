#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pdelab/bayes_pde.hpp"
#include "pdelab/density.hpp"
#include "pdelab/error.hpp"
#include "pdelab/quadrature.hpp"
#include "pdelab/rng.hpp"

using namespace pdelab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double student_by_hand(double nu, ConstSpan xi, double sigma, ConstSpan y) {
  const double d = static_cast<double>(y.size());
  double q = 0;
  for (std::size_t i = 0; i < y.size(); ++i) q += (y[i] - xi[i]) * (y[i] - xi[i]);
  return std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) - 0.5 * d * std::log(nu * std::numbers::pi) -
         d * std::log(sigma) - 0.5 * (nu + d) * std::log1p(q / (nu * sigma * sigma));
}

// Integral over R^3 of ||theta||^{-1} (q + curv ||theta - m e_1||^2)^{-n} in
// spherical coordinates about the origin.
double harmonic_kernel_3d(double m, double q, double curv, double n) {
  auto radial = [&](double r) {
    auto polar = [&](double mu) { return std::pow(q + curv * (r * r + m * m - 2.0 * r * m * mu), -n); };
    return 2.0 * std::numbers::pi * r * quad::integrate(polar, -1.0, 1.0, 1e-12).value;
  };
  return quad::integrate(radial, 0.0, kInf, 1e-11).value;
}

}  // namespace

TEST_CASE("flat kernel integral has the gamma-function closed form") {
  IntegrationOptions opts;
  for (int d : {1, 2, 3, 5}) {
    for (double n : {d / 2.0 + 0.7, d / 2.0 + 3.0}) {
      const Vec center(static_cast<std::size_t>(d), 0.3);
      const double q = 1.7, curv = 2.5;
      const double exact = 0.5 * d * std::log(std::numbers::pi / curv) + std::lgamma(n - 0.5 * d) - std::lgamma(n) +
                           (0.5 * d - n) * std::log(q);
      const LogEstimate r = log_kernel_integral(FlatPrior{}, center, q, curv, n, opts);
      CHECK(r.value == doctest::Approx(exact).epsilon(1e-10));
      CHECK(r.se == 0.0);
    }
  }
  CHECK_THROWS_AS(log_kernel_integral(FlatPrior{}, Vec{0.0, 0.0}, 1.0, 1.0, 1.0, opts), NumericalError);
}

TEST_CASE("harmonic kernel integral against quadrature in polar coordinates") {
  IntegrationOptions opts;
  opts.is_draws = 200000;
  for (double m : {0.0, 0.4, 2.5}) {
    for (double n : {2.0, 4.5}) {
      const double q = 1.3, curv = 2.0;
      const LogEstimate r = log_kernel_integral(HarmonicPrior{}, Vec{m, 0.0, 0.0}, q, curv, n, opts);
      CAPTURE(m);
      CAPTURE(n);
      CHECK(r.se < 0.01);
      CHECK(std::abs(r.value - std::log(harmonic_kernel_3d(m, q, curv, n))) < 4.0 * r.se + 1e-6);
    }
  }
  CHECK_THROWS_AS(log_kernel_integral(HarmonicPrior{}, Vec{0.0, 0.0}, 1.0, 1.0, 3.0, opts), InvalidArgument);
}

TEST_CASE("harmonic importance sampling is reproducible and converges") {
  IntegrationOptions a;
  a.is_draws = 50000;
  const Vec center{0.7, -0.2, 0.1, 0.4};
  const LogEstimate r1 = log_kernel_integral(HarmonicPrior{}, center, 2.0, 1.5, 4.0, a);
  const LogEstimate r2 = log_kernel_integral(HarmonicPrior{}, center, 2.0, 1.5, 4.0, a);
  CHECK(r1.value == r2.value);
  IntegrationOptions b = a;
  b.is_draws = 800000;
  b.seed = 99;
  const LogEstimate r3 = log_kernel_integral(HarmonicPrior{}, center, 2.0, 1.5, 4.0, b);
  CHECK(r3.se < r1.se);
  CHECK(std::abs(r1.value - r3.value) < 4.0 * std::hypot(r1.se, r3.se));
}

TEST_CASE("counting priors sum their atoms") {
  const IntegrationOptions opts;
  const Vec c{0.5, 0.0};
  const LogEstimate r = log_kernel_integral(TwoPointPrior{1.5}, c, 1.0, 2.0, 3.0, opts);
  const double exact = 0.5 * std::pow(1.0 + 2.0 * 4.0, -3.0) + 0.5 * std::pow(1.0 + 2.0 * 1.0, -3.0);
  CHECK(r.value == doctest::Approx(std::log(exact)).epsilon(1e-14));
  const GridPrior g{{Vec{0.0, 1.0}, Vec{2.0, 0.0}}, {0.25, 0.75}};
  const LogEstimate s = log_kernel_integral(g, c, 1.0, 1.0, 2.0, opts);
  CHECK(s.value ==
        doctest::Approx(std::log(0.25 * std::pow(1.0 + 1.25, -2.0) + 0.75 * std::pow(1.0 + 2.25, -2.0))).epsilon(1e-14));
}

TEST_CASE("prior validation") {
  CHECK_THROWS_AS(validate(PriorSpec{TwoPointPrior{0.0}, -1.0}, 1), InvalidArgument);
  CHECK_THROWS_AS(validate(PriorSpec{HarmonicPrior{}, -1.0}, 2), InvalidArgument);
  CHECK_THROWS_AS(validate(PriorSpec{GridPrior{{Vec{0.0}}, {0.5, 0.5}}, -1.0}, 1), InvalidArgument);
  CHECK_NOTHROW(validate(PriorSpec{HarmonicPrior{}, -1.0}, 3));
  CHECK(exponent_n(3, 5, -1.0) == doctest::Approx(5.5));
  CHECK(prior_label(PriorSpec{TwoPointPrior{1.5}, -1.0}) == "two-point(1.5);a=-1");
  CHECK(log_prior_weight(TwoPointPrior{1.0}, Vec{0.5}) == -kInf);
}

TEST_CASE("flat-prior Bayes density equals its Student closed form") {
  const Vec xs{0.7, -0.4, 0.2}, us{1.1, -0.6, 0.8, 0.3, -0.9};
  for (int d : {1, 2, 3}) {
    for (int k : {2, 5}) {
      for (double a : {-1.0, 0.0, 1.0}) {
        for (double c : {0.5, 2.0}) {
          const Vec x(xs.begin(), xs.begin() + d), u(us.begin(), us.begin() + k);
          const PredictiveDensity h = PredictiveDensity::bayes(PriorSpec{FlatPrior{}, a}, x, u, c, k);
          const double nu = k + 2.0 * a + 2.0;
          const Vec xi = scaled(x, c);
          const double sigma = std::sqrt((1 + c * c) * squared_norm(u) / nu);
          const StudentParams p = pi0a_params(x, u, c, k, a);
          CHECK(p.nu == nu);
          CHECK(p.sigma == doctest::Approx(sigma).epsilon(1e-14));
          for (double t : {-3.0, 0.0, 1.5}) {
            Vec y = xi;
            y[0] += t * sigma;
            CHECK(h.log_pdf(y) == doctest::Approx(student_by_hand(nu, xi, sigma, y)).epsilon(1e-9));
          }
        }
      }
    }
  }
  CHECK_THROWS_AS(pi0a_params(Vec{0.0}, Vec{1.0}, 1.0, 1, -1.6), InvalidArgument);
}

TEST_CASE("d = 1 Bayes densities integrate to one") {
  const Vec x{0.4}, u{0.9, -0.5};
  for (const PriorSpec& p : {PriorSpec{FlatPrior{}, -1.0}, PriorSpec{TwoPointPrior{1.5}, -1.0},
                             PriorSpec{TwoPointPrior{0.3}, 0.5}, PriorSpec{GridPrior{{Vec{-1.0}, Vec{0.2}, Vec{3.0}}, {0.2, 0.5, 0.3}}, 0.0}}) {
    CAPTURE(prior_label(p));
    const PredictiveDensity h = PredictiveDensity::bayes(p, x, u, 1.3, 2);
    CHECK(predictive_mass_d1(h) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("harmonic Bayes density integrates to one") {
  const Vec x{0.8, -0.3, 0.5}, u{0.6, 1.0, -0.4, 0.2, 0.7};
  IntegrationOptions opts;
  opts.is_draws = 200000;
  const PredictiveDensity h = PredictiveDensity::bayes(PriorSpec{HarmonicPrior{}, -1.0}, x, u, 1.0, 5, opts);
  CHECK(h.log_normalizer().se < opts.se_target);
  // E_t[q / t] under the reference Student t
  StudentParams ref = h.reference_student();
  ref.nu = 3.0;
  Rng rng(RngStream{77, 0});
  Vec y(3);
  double s = 0, s2 = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    sample_student(ref, rng, y);
    const double w = std::exp(h.log_pdf(y) - student_logpdf(ref, y));
    s += w;
    s2 += w * w;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - 1.0) < 4.0 * se + 0.01);
}

TEST_CASE("Bayes predictive density does not depend on f") {
  ModelSpec base;
  base.d = 1;
  base.k = 2;
  base.c = 1.2;
  base.theta = {0.0};
  std::vector<ModelSpec> models;
  for (const RadialFamily& f : {RadialFamily{NormalRadial{}}, RadialFamily{StudentRadial{3.0}},
                                RadialFamily{DiscreteRadial{{{0.5, 0.3}, {2.0, 0.7}}}}}) {
    ModelSpec m = base;
    m.radial = f;
    models.push_back(m);
  }
  const Vec y{-2.0, 0.0, 0.8, 3.0};
  for (const PriorSpec& p : {PriorSpec{FlatPrior{}, -1.0}, PriorSpec{TwoPointPrior{1.5}, -1.0}, PriorSpec{FlatPrior{}, 0.2}}) {
    const FIndependenceReport r = f_independence_check(p, models, Vec{0.7}, Vec{1.1, -0.6}, y);
    CAPTURE(prior_label(p));
    CHECK(r.max_discrepancy < 1e-7);
    CHECK(r.max_formula_error < 1e-7);
  }
  // Student(3) has too heavy a tail for a = 0.5
  CHECK_THROWS_AS(f_independence_check(PriorSpec{FlatPrior{}, 0.5}, models, Vec{0.7}, Vec{1.1, -0.6}, y), NumericalError);
}
