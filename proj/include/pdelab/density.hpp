#pragma once

#include "pdelab/model.hpp"
#include "pdelab/rng.hpp"
#include "pdelab/vec.hpp"

namespace pdelab {

/// d-variate Student T_d(nu, xi, sigma) with density
///   Gamma((nu+d)/2) / (Gamma(nu/2) (pi nu)^{d/2} sigma^d)
///     * (1 + ||t - xi||^2 / (nu sigma^2))^{-(nu+d)/2}.
struct StudentParams {
  double nu = 1.0;
  Vec xi{0.0};
  double sigma = 1.0;

  int d() const { return static_cast<int>(xi.size()); }
};

void validate(const StudentParams& p);

/// log of the normalizing constant Gamma((nu+d)/2) / (Gamma(nu/2) (pi nu)^{d/2}).
double student_log_constant(double nu, int d);

double student_logpdf(const StudentParams& p, ConstSpan t);
double student_pdf(const StudentParams& p, ConstSpan t);

/// Draws from T_d(nu, xi, sigma) into `out` (size d).
void sample_student(const StudentParams& p, Rng& rng, std::span<double> out);

/// Minimum risk equivariant predictive density: T_d(k, c x, sqrt((1+c^2)||u||^2 / k)).
StudentParams mre_params(ConstSpan x, ConstSpan u, double c, int k);

/// True conditional density q_{theta,eta}(y | x, u) of the model.
double conditional_density(const ModelSpec& spec, ConstSpan x, ConstSpan u, ConstSpan y);

}  // namespace pdelab
