#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "pdelab/density.hpp"
#include "pdelab/model.hpp"
#include "pdelab/vec.hpp"

namespace pdelab {

/// pi_1 = 1 with Lebesgue measure.
struct FlatPrior {};
/// pi_1(theta) = ||theta||^{2-d} with Lebesgue measure; needs d >= 3.
struct HarmonicPrior {};
/// Counting measure on {-m e_1, +m e_1} with weights 1/2.
struct TwoPointPrior {
  double m = 1.0;
};
/// Counting measure on user points with positive weights.
struct GridPrior {
  std::vector<Vec> points;
  std::vector<double> weights;
};

using ThetaPrior = std::variant<FlatPrior, HarmonicPrior, TwoPointPrior, GridPrior>;

/// Separable prior pi_1(theta) eta^a.
struct PriorSpec {
  ThetaPrior pi1 = FlatPrior{};
  double a = -1.0;
};

std::string prior_label(const PriorSpec& p);
void validate(const PriorSpec& p, int d);
bool is_lebesgue(const ThetaPrior& p);

/// log pi_1(theta); -inf outside the support of counting priors.
double log_prior_weight(const ThetaPrior& p, ConstSpan theta);

/// n = d + k/2 + a + 1.
double exponent_n(int d, int k, double a);

/// Flat-prior Bayes predictive density T_d(k+2a+2, c x, sqrt((1+c^2)||u||^2/(k+2a+2))).
StudentParams pi0a_params(ConstSpan x, ConstSpan u, double c, int k, double a);

struct IntegrationOptions {
  std::size_t is_draws = 200000;
  std::uint64_t seed = 20240611;
  double rel_tol = 1e-10;
  /// Largest acceptable standard error of a log normalizer.
  double se_target = 0.01;
};

/// Estimate of a log quantity with its standard error (0 when deterministic).
struct LogEstimate {
  double value = 0.0;
  double se = 0.0;
};

/// log of the integral of pi_1(theta) (offset + curvature ||theta - center||^2)^{-power} dnu(theta).
/// Lebesgue priors integrate radially about `center`; the harmonic prior uses
/// a Student importance sampler whose angular part is averaged exactly.
LogEstimate log_kernel_integral(const ThetaPrior& prior, ConstSpan center, double offset, double curvature,
                                double power, const IntegrationOptions& opts);

/// Predictive density handle: either a closed-form Student or the f-free Bayes
/// predictive density for a separable prior at fixed (x, u).
class PredictiveDensity {
 public:
  static PredictiveDensity student(StudentParams p);
  static PredictiveDensity bayes(const PriorSpec& prior, ConstSpan x, ConstSpan u, double c, int k,
                                 const IntegrationOptions& opts = {});

  bool is_closed_form() const { return std::holds_alternative<StudentParams>(state_); }
  const StudentParams& student_params() const { return std::get<StudentParams>(state_); }

  double log_pdf(ConstSpan y) const { return log_pdf_estimate(y).value; }
  /// log density and the standard error from the numerator and the cached normalizer.
  LogEstimate log_pdf_estimate(ConstSpan y) const;
  /// Cached log normalizer (integral over y of the numerator kernel).
  LogEstimate log_normalizer() const;
  /// The Student itself, or the flat-prior Student with the same (x, u, a);
  /// used as a location and scale reference.
  StudentParams reference_student() const;

 private:
  struct Bayes {
    PriorSpec prior;
    Vec x;
    double s = 0.0;
    double c = 1.0;
    double n = 0.0;
    int k = 1;
    IntegrationOptions opts;
    LogEstimate log_norm;
  };
  explicit PredictiveDensity(std::variant<StudentParams, Bayes> s) : state_(std::move(s)) {}
  std::variant<StudentParams, Bayes> state_;
};

double numeric_predictive_logpdf(const PredictiveDensity& h, ConstSpan y);

struct FIndependenceReport {
  Vec y_grid;
  std::vector<std::string> labels;
  /// Brute-force log predictive density per model (rows) on y_grid (columns).
  std::vector<Vec> log_density;
  /// f-free formula on the same grid.
  Vec formula;
  double max_discrepancy = 0.0;   ///< across models
  double max_formula_error = 0.0; ///< brute force vs formula
};

/// Bayes predictive density by direct quadrature over (theta, eta) of the
/// model's joint and marginal densities, for each model; d = 1 only.
FIndependenceReport f_independence_check(const PriorSpec& prior, const std::vector<ModelSpec>& models,
                                         ConstSpan x, ConstSpan u, const Vec& y_grid);

/// Integral over y of a predictive density by quadrature (d = 1).
double predictive_mass_d1(const PredictiveDensity& h);

}  // namespace pdelab
