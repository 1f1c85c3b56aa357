#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "pdelab/rng.hpp"

namespace pdelab {

/// f(t) proportional to exp(-t/2).
struct NormalRadial {};

/// Scale mixture of normals with inverse-gamma(df/2, df/2) mixing variable;
/// the marginal in any dimension is multivariate Student with `df` degrees
/// of freedom.
struct StudentRadial {
  double df = 5.0;
};

struct MixtureAtom {
  double scale = 1.0;   ///< mixing variance multiplier z > 0
  double weight = 1.0;  ///< probability w > 0
};

/// Finite scale mixture of normals; weights must sum to 1.
struct DiscreteRadial {
  std::vector<MixtureAtom> atoms;
};

/// Arbitrary radial profile t -> f(t) >= 0, normalized numerically.
struct NumericRadial {
  std::function<double(double)> f;
  std::string label = "numeric";
};

using RadialFamily = std::variant<NormalRadial, StudentRadial, DiscreteRadial, NumericRadial>;

std::string family_label(const RadialFamily& family);
bool is_scale_mixture(const RadialFamily& family);
void validate(const RadialFamily& family);

/// Normalized spherical density v -> f(||v||^2) on R^dim for one radial
/// family. Mixture families have closed forms in every dimension; numeric
/// profiles are normalized by adaptive quadrature on the radius.
class RadialDensity {
 public:
  RadialDensity(RadialFamily family, int dim);

  int dim() const { return dim_; }
  const RadialFamily& family() const { return family_; }

  /// log f(t), normalized so that the density integrates to one over R^dim.
  double log_f(double t) const;

  /// F(t) = (1/2) * integral_t^inf f(s) ds.
  double tail_F(double t) const;

  /// E ||V||^2 under the density (infinite when the second moment diverges).
  double mean_squared_radius() const;

  /// Draws the mixing variance Z (1 for the normal family). Throws for
  /// numeric profiles.
  double draw_mixing(Rng& rng) const;

  /// Draws Z from the size-biased mixing law z dG(z) / E[Z], which is the
  /// mixing law of the density F / integral(F).
  double draw_size_biased_mixing(Rng& rng) const;

  /// Mean of the mixing variable, E[Z].
  double mixing_mean() const;

  /// Draws V from the density (radius by inverse CDF for numeric profiles).
  void draw(Rng& rng, std::span<double> out) const;

 private:
  struct NumericTables;
  RadialFamily family_;
  int dim_;
  std::shared_ptr<const NumericTables> numeric_;
};

}  // namespace pdelab
