#include "pdelab/density.hpp"

#include <cmath>
#include <numbers>

#include "pdelab/error.hpp"

namespace pdelab {

void validate(const StudentParams& p) {
  require(std::isfinite(p.nu) && p.nu > 0.0, "Student degrees of freedom must be > 0");
  require(std::isfinite(p.sigma) && p.sigma > 0.0, "Student scale must be > 0");
  require(!p.xi.empty(), "Student location must have at least one coordinate");
  require(all_finite(p.xi), "Student location must be finite");
}

double student_log_constant(double nu, int d) {
  return log_gamma(0.5 * (nu + d)) - log_gamma(0.5 * nu) - 0.5 * d * std::log(std::numbers::pi * nu);
}

double student_logpdf(const StudentParams& p, ConstSpan t) {
  const int d = p.d();
  const double r2 = squared_distance(t, p.xi);
  return student_log_constant(p.nu, d) - d * std::log(p.sigma) -
         0.5 * (d + p.nu) * std::log1p(r2 / (p.nu * p.sigma * p.sigma));
}

double student_pdf(const StudentParams& p, ConstSpan t) { return std::exp(student_logpdf(p, t)); }

void sample_student(const StudentParams& p, Rng& rng, std::span<double> out) {
  rng.fill_normal(out);
  const double w = std::sqrt(p.nu / rng.chi_square(p.nu));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p.xi[i] + p.sigma * w * out[i];
}

StudentParams mre_params(ConstSpan x, ConstSpan u, double c, int k) {
  require(u.size() == static_cast<std::size_t>(k), "mre_params: u must have k coordinates");
  require(c > 0.0, "mre_params: c must be > 0");
  const double s = squared_norm(u);
  require(s > 0.0, "mre_params: ||u|| must be > 0 (the predictive scale degenerates)");
  return StudentParams{static_cast<double>(k), scaled(x, c), std::sqrt((1.0 + c * c) * s / k)};
}

double conditional_density(const ModelSpec& spec, ConstSpan x, ConstSpan u, ConstSpan y) {
  const Model model(spec);
  return std::exp(model.conditional_log_density(x, u, y));
}

}  // namespace pdelab
