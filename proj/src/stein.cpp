#include "pdelab/stein.hpp"

#include <cmath>
#include <limits>

#include "pdelab/error.hpp"
#include "pdelab/quadrature.hpp"
#include "pdelab/rng.hpp"

namespace pdelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double fd_divergence(const SteinField& field, ConstSpan z, ConstSpan u) {
  const double h = 1e-5 * std::max(1.0, std::sqrt(squared_norm(z)));
  Vec zp(z.begin(), z.end());
  Vec zm(z.begin(), z.end());
  double div = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    zp[i] = z[i] + h;
    zm[i] = z[i] - h;
    div += (field.g(zp, u)[i] - field.g(zm, u)[i]) / (2.0 * h);
    zp[i] = z[i];
    zm[i] = z[i];
  }
  return div;
}

// Tensor product of adaptive Gauss-Kronrod rules over R^dim.
double integrate_nd(const std::function<double(ConstSpan)>& f, int dim, double rel_tol) {
  Vec v(static_cast<std::size_t>(dim), 0.0);
  std::function<double(int)> level = [&](int i) -> double {
    auto inner = [&](double t) {
      v[static_cast<std::size_t>(i)] = t;
      return i + 1 == dim ? f(v) : level(i + 1);
    };
    return quad::integrate(inner, -kInf, kInf, rel_tol, 15).value;
  };
  return level(0);
}

}  // namespace

SteinField linear_field(int d) {
  return {"z", [](ConstSpan z, ConstSpan) { return Vec(z.begin(), z.end()); },
          [d](ConstSpan, ConstSpan) { return static_cast<double>(d); }};
}

SteinField constant_field(Vec v) {
  return {"constant", [v](ConstSpan, ConstSpan) { return v; }, [](ConstSpan, ConstSpan) { return 0.0; }};
}

SteinField js_type_field(int d) {
  return {"js-type",
          [d](ConstSpan z, ConstSpan u) { return scaled(z, -(d - 2.0) / (squared_norm(z) + squared_norm(u))); },
          [d](ConstSpan z, ConstSpan u) {
            const double r2 = squared_norm(z) + squared_norm(u);
            return -(d - 2.0) * (d / r2 - 2.0 * squared_norm(z) / (r2 * r2));
          }};
}

SteinReport stein_identity_check(const RadialFamily& family, int d, int k, const SteinField& field,
                                 const SteinOptions& opts) {
  require(d >= 1 && k >= 0, "stein_identity_check: need d >= 1 and k >= 0");
  require(static_cast<bool>(field.g), "stein_identity_check: field needs g");
  const int dim = d + k;
  const RadialDensity f(family, dim);
  const std::size_t du = static_cast<std::size_t>(d);
  auto div = [&](ConstSpan z, ConstSpan u) { return field.div ? field.div(z, u) : fd_divergence(field, z, u); };

  SteinReport rep;
  rep.family = family_label(family);
  rep.field = field.label;
  rep.d = d;
  rep.k = k;
  rep.gamma = is_scale_mixture(family) ? f.mixing_mean() : f.mean_squared_radius() / dim;
  if (!std::isfinite(rep.gamma)) {
    throw NumericalError("stein_identity_check: gamma = integral of F diverges for " + rep.family);
  }

  if (dim <= 2 && !opts.force_monte_carlo) {
    rep.quadrature = true;
    rep.lhs = integrate_nd(
        [&](ConstSpan v) {
          const ConstSpan z = v.first(du);
          const ConstSpan u = v.subspan(du);
          return dot(z, field.g(z, u)) * std::exp(f.log_f(squared_norm(v)));
        },
        dim, opts.rel_tol);
    rep.rhs_no_gamma = integrate_nd(
        [&](ConstSpan v) {
          const ConstSpan z = v.first(du);
          const ConstSpan u = v.subspan(du);
          return div(z, u) * f.tail_F(squared_norm(v));
        },
        dim, opts.rel_tol);
  } else {
    if (!is_scale_mixture(family)) {
      throw InvalidArgument("stein_identity_check: Monte Carlo route needs a scale-mixture family");
    }
    // V ~ f: Z ~ G, V | Z ~ N(0, Z I).  W ~ F / gamma: Z ~ z dG(z) / E[Z].
    Rng rng_f(RngStream{opts.seed, 1});
    Rng rng_F(RngStream{opts.seed, 2});
    Vec v(static_cast<std::size_t>(dim));
    double m1 = 0.0, s1 = 0.0, m2 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < opts.n; ++i) {
      const double n1 = static_cast<double>(i + 1);
      rng_f.fill_normal(v);
      const double a = std::sqrt(f.draw_mixing(rng_f));
      for (double& x : v) x *= a;
      const ConstSpan z = ConstSpan(v).first(du);
      const ConstSpan u = ConstSpan(v).subspan(du);
      const double x1 = dot(z, field.g(z, u));
      const double d1 = x1 - m1;
      m1 += d1 / n1;
      s1 += d1 * (x1 - m1);

      rng_F.fill_normal(v);
      const double b = std::sqrt(f.draw_size_biased_mixing(rng_F));
      for (double& x : v) x *= b;
      const double x2 = div(ConstSpan(v).first(du), ConstSpan(v).subspan(du));
      const double d2 = x2 - m2;
      m2 += d2 / n1;
      s2 += d2 * (x2 - m2);
    }
    const double n = static_cast<double>(opts.n);
    rep.lhs = m1;
    rep.rhs_no_gamma = rep.gamma * m2;
    const double se1 = std::sqrt(s1 / (n - 1.0) / n);
    const double se2 = rep.gamma * std::sqrt(s2 / (n - 1.0) / n);
    rep.se = std::hypot(se1, se2);
  }
  rep.rhs_with_gamma = rep.rhs_no_gamma / rep.gamma;
  rep.discrepancy_no_gamma = std::abs(rep.lhs - rep.rhs_no_gamma);
  rep.discrepancy_with_gamma = std::abs(rep.lhs - rep.rhs_with_gamma);
  rep.passed = rep.discrepancy_no_gamma < std::max(1e-6, 3.0 * rep.se);
  return rep;
}

}  // namespace pdelab
