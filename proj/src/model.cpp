#include "pdelab/model.hpp"

#include <cmath>
#include <limits>

#include "pdelab/error.hpp"
#include "pdelab/quadrature.hpp"

namespace pdelab {

void validate(const ModelSpec& spec) {
  require(spec.d >= 1, "model.d must be >= 1");
  require(spec.k >= 1, "model.k must be >= 1");
  require(std::isfinite(spec.c) && spec.c > 0.0, "model.c must be > 0");
  require(std::isfinite(spec.eta) && spec.eta > 0.0, "model.eta must be > 0");
  require(spec.theta.size() == static_cast<std::size_t>(spec.d),
          "model.theta must have exactly d coordinates");
  require(all_finite(spec.theta), "model.theta must be finite");
  validate(spec.radial);
}

ModelSpec with_theta_norm(ModelSpec spec, double norm) {
  spec.theta = along_first_axis(spec.d, norm);
  return spec;
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  joint_ = std::make_shared<RadialDensity>(spec_.radial, total_dim());
  if (is_scale_mixture(spec_.radial)) {
    marginal_ = std::make_shared<RadialDensity>(spec_.radial, spec_.d + spec_.k);
  }
}

double Model::log_marginal_radial(double t) const {
  if (marginal_) return marginal_->log_f(t);
  // Integrate the d coordinates of y out of the joint profile:
  //   f_{d+k}(t) = |S^{d-1}| * int_0^inf r^{d-1} f(t + r^2) dr.
  const double dm1 = spec_.d - 1;
  auto log_g = [&](double r) { return dm1 * std::log(r) + joint_->log_f(t + r * r); };
  return log_unit_sphere_area(spec_.d) +
         quad::log_integrate_half_line(log_g, "marginal radial profile", 1e-9).value;
}

double Model::joint_log_density(ConstSpan x, ConstSpan u, ConstSpan y) const {
  const double q = squared_distance(x, spec_.theta) + squared_norm(u) +
                   squared_distance_scaled(y, spec_.c, spec_.theta);
  return 0.5 * total_dim() * std::log(spec_.eta) + joint_->log_f(spec_.eta * q);
}

double Model::marginal_log_density(ConstSpan x, ConstSpan u) const {
  const double q = squared_distance(x, spec_.theta) + squared_norm(u);
  return 0.5 * (spec_.d + spec_.k) * std::log(spec_.eta) + log_marginal_radial(spec_.eta * q);
}

double Model::conditional_log_density(ConstSpan x, ConstSpan u, ConstSpan y) const {
  if (std::holds_alternative<NormalRadial>(spec_.radial)) {
    // Independent coordinates: Y ~ N_d(c theta, I / eta).
    const double q = squared_distance_scaled(y, spec_.c, spec_.theta);
    return 0.5 * spec_.d * std::log(spec_.eta / (2.0 * std::numbers::pi)) - 0.5 * spec_.eta * q;
  }
  return joint_log_density(x, u, y) - marginal_log_density(x, u);
}

SampleTriple Model::make_buffer() const {
  return SampleTriple{Vec(static_cast<std::size_t>(spec_.d)), Vec(static_cast<std::size_t>(spec_.k)),
                      Vec(static_cast<std::size_t>(spec_.d))};
}

void Model::sample_into(Rng& rng, SampleTriple& out) const {
  const std::size_t d = static_cast<std::size_t>(spec_.d);
  const std::size_t k = static_cast<std::size_t>(spec_.k);
  out.x.resize(d);
  out.u.resize(k);
  out.y.resize(d);
  if (!marginal_) {
    // Direction uniform on S^{2d+k-1}, radius from the tabulated inverse CDF.
    Vec v(2 * d + k);
    joint_->draw(rng, v);
    const double s = 1.0 / std::sqrt(spec_.eta);
    for (std::size_t i = 0; i < d; ++i) out.x[i] = spec_.theta[i] + s * v[i];
    for (std::size_t i = 0; i < k; ++i) out.u[i] = s * v[d + i];
    for (std::size_t i = 0; i < d; ++i) out.y[i] = spec_.c * spec_.theta[i] + s * v[d + k + i];
    return;
  }
  const double sd = std::sqrt(joint_->draw_mixing(rng) / spec_.eta);
  rng.fill_normal(out.x);
  rng.fill_normal(out.u);
  rng.fill_normal(out.y);
  for (std::size_t i = 0; i < d; ++i) out.x[i] = spec_.theta[i] + sd * out.x[i];
  for (std::size_t i = 0; i < k; ++i) out.u[i] *= sd;
  for (std::size_t i = 0; i < d; ++i) out.y[i] = spec_.c * spec_.theta[i] + sd * out.y[i];
}

std::vector<SampleTriple> sample_triples(const ModelSpec& spec, std::size_t n, RngStream stream) {
  require(n >= 1, "sample_triples needs n >= 1");
  const Model model(spec);
  Rng rng(stream);
  std::vector<SampleTriple> out(n, model.make_buffer());
  for (SampleTriple& t : out) model.sample_into(rng, t);
  return out;
}

std::vector<double> sample_mixing(const ModelSpec& spec, std::size_t n, RngStream stream) {
  require(n >= 1, "sample_mixing needs n >= 1");
  validate(spec);
  if (!is_scale_mixture(spec.radial)) {
    throw InvalidArgument("sample_mixing: numeric radial profile has no mixing representation");
  }
  const RadialDensity radial(spec.radial, 2 * spec.d + spec.k);
  Rng rng(stream);
  std::vector<double> out(n);
  for (double& z : out) z = radial.draw_mixing(rng);
  return out;
}

double joint_density(const ModelSpec& spec, const SampleTriple& t) {
  const Model model(spec);
  return std::exp(model.joint_log_density(t.x, t.u, t.y));
}

}  // namespace pdelab
