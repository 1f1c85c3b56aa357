#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "pdelab/density.hpp"
#include "pdelab/vec.hpp"

namespace pdelab {

/// g(t) = -(d-2) t / ||t||^2.
struct JamesStein {};

/// Truncated James-Stein field g(t) = -min((d-2)/||t||^2, 1/kappa) t. With
/// kappa = a ||u||^2 / ((k+2) c) the estimator x + a ||u||^2/(k+2) g(x/c) is the
/// positive-part rule x * max(0, 1 - a c (d-2) ||u||^2 / ((k+2) ||x||^2)).
/// The field has a kink on the sphere ||t||^2 = (d-2) kappa.
struct PositivePart {};

/// g(t) = -r(||t||^2) (d-2) t / ||t||^2 for a user supplied r.
struct Baranchik {
  std::function<double(double)> r;
  std::string label = "baranchik";
};

/// Arbitrary vector field.
struct UserField {
  std::function<Vec(ConstSpan)> g;
  std::string label = "user";
};

using ShrinkageField = std::variant<JamesStein, PositivePart, Baranchik, UserField>;

struct ShrinkageSpec {
  ShrinkageField field = JamesStein{};
  double a = 0.5;
};

std::string field_label(const ShrinkageField& field);

/// Upper end of the tuning interval 0 < a < (1+c^2) / (c^2 (1+c)) attached to
/// the plug-in Student dominance result.
double shrinkage_a_max(double c);

/// Upper end 1/c implied by mapping the model onto the point-prediction form
/// with beta = 1/c^2 (see transform_to_prediction_form). Coincides with
/// shrinkage_a_max at c = 1.
double prediction_form_a_max(double c);

/// min of the two bounds above; dominance verdicts are only claimed below it.
double dominance_a_max(double c);

/// Evaluates g at t. `kappa` is the truncation scale of PositivePart and is
/// ignored by the other fields. Throws InvalidArgument at t = 0 for fields
/// that are singular there.
Vec g_eval(const ShrinkageSpec& s, ConstSpan t, double kappa = 1.0);

struct SuperharmonicReport {
  std::vector<double> values;  ///< ||g||^2 + 2 div g at each grid point
  double max_value = 0.0;
  Vec argmax;
  bool passed = false;  ///< max_value <= tolerance
};

/// ||g||^2 + 2 div g on a grid, divergence by central differences with step
/// h = 1e-5 max(1, ||t||). Within 2h of the PositivePart kink sphere both
/// one-sided divergences are evaluated and the larger value is reported.
SuperharmonicReport check_superharmonic_condition(const ShrinkageSpec& s, int d,
                                                  const std::vector<Vec>& grid,
                                                  double kappa = 1.0, double tolerance = 1e-6);

/// Baranchik field accepted only if ||g||^2 + 2 div g <= 0 holds on `grid`.
ShrinkageSpec make_baranchik(std::function<double(double)> r, double a, int d,
                             const std::vector<Vec>& grid, std::string label = "baranchik");

/// theta_hat(x, u) = x + a ||u||^2/(k+2) g(x/c). Falls back to x (with a
/// warning) when g is singular at x/c.
Vec theta_hat(const ShrinkageSpec& s, ConstSpan x, ConstSpan u, double c, int k);

/// T_d(k, c theta_hat, sqrt((1+c^2)||u||^2 / k)).
StudentParams plugin_density_params(const ShrinkageSpec& s, ConstSpan x, ConstSpan u, double c, int k);

struct LogLoss {};
struct PowerLoss {
  double p = 0.5;
};
struct ReflectedNormalLoss {
  double alpha = 1.0;
};
struct SquaredErrorLoss {};

using LossSpec = std::variant<LogLoss, PowerLoss, ReflectedNormalLoss, SquaredErrorLoss>;

void validate(const LossSpec& l);
std::string loss_label(const LossSpec& l);

/// rho(t) for the concave families; SquaredError returns t unchanged.
double rho(const LossSpec& l, double t);

/// rho(||y - delta||^2 + (1+c^2)||u||^2); SquaredError returns ||y - delta||^2.
double rho_loss(const LossSpec& l, ConstSpan delta, ConstSpan y, ConstSpan u, double c);

struct PredictionForm {
  Vec x;
  Vec y;
  Vec u;
  double beta = 1.0;
};

/// (x, y, u) -> (x/c, y/c^2, sqrt(1+c^2)/c^2 u). The image of the model has
/// location mu = theta/c, eta_1 = c^2 eta and beta = 1/c^2.
PredictionForm transform_to_prediction_form(ConstSpan x, ConstSpan y, ConstSpan u, double c);

/// Inverse of transform_to_prediction_form; returns (x, y, u).
SampleTriple transform_from_prediction_form(const PredictionForm& t, double c);

}  // namespace pdelab
