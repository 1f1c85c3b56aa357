#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "pdelab/radial.hpp"
#include "pdelab/vec.hpp"

namespace pdelab {

/// Vector field g(z, u) in R^d with its z-divergence. A missing divergence is
/// replaced by central differences.
struct SteinField {
  std::string label;
  std::function<Vec(ConstSpan z, ConstSpan u)> g;
  std::function<double(ConstSpan z, ConstSpan u)> div;
};

/// g(z, u) = z, div = d.
SteinField linear_field(int d);
/// g(z, u) = v, div = 0.
SteinField constant_field(Vec v);
/// g(z, u) = -(d-2) z / (||z||^2 + ||u||^2).
SteinField js_type_field(int d);

struct SteinOptions {
  std::size_t n = 1000000;
  std::uint64_t seed = 7;
  /// Monte Carlo even when d + k <= 2.
  bool force_monte_carlo = false;
  double rel_tol = 1e-11;
};

struct SteinReport {
  std::string family;
  std::string field;
  int d = 1;
  int k = 0;
  bool quadrature = false;
  double lhs = 0.0;           ///< integral of z'g f(||z||^2 + ||u||^2)
  double rhs_no_gamma = 0.0;  ///< integral of div_z g F(||z||^2 + ||u||^2)
  double gamma = 1.0;         ///< integral of F
  double rhs_with_gamma = 0.0;
  double se = 0.0;  ///< combined standard error of lhs - rhs_no_gamma (0 for quadrature)
  double discrepancy_no_gamma = 0.0;
  double discrepancy_with_gamma = 0.0;
  bool passed = false;  ///< |lhs - rhs_no_gamma| < max(1e-6, 3 se)
};

/// Both sides of the integration-by-parts identity for a spherical density
/// f on R^{d+k} with F(t) = (1/2) integral_t^inf f. Quadrature for d + k <= 2,
/// otherwise Monte Carlo with V ~ f and W ~ F / gamma (size-biased mixing).
SteinReport stein_identity_check(const RadialFamily& family, int d, int k, const SteinField& field,
                                 const SteinOptions& opts = {});

}  // namespace pdelab
