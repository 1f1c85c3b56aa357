#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "pdelab/quadrature.hpp"

namespace pdelab {

/// Tabulated inverse CDF of a positive random variable with a smooth,
/// unnormalized log-density. The support is trimmed where the mass beyond
/// falls below 1e-13, the trimmed range is covered by a log-spaced grid and
/// the CDF is integrated segment by segment. Quantiles interpolate log(x)
/// against the CDF with a monotone cubic (PCHIP) interpolant.
class InverseCdfTable {
 public:
  explicit InverseCdfTable(const quad::Fn& log_density, std::size_t points = 4096);

  /// Quantile for u in (0, 1).
  double quantile(double u) const;

  /// log of the integral of exp(log_density) over (0, inf).
  double log_normalizer() const { return log_normalizer_; }

  double lower() const { return grid_.front(); }
  double upper() const { return grid_.back(); }
  std::size_t size() const { return grid_.size(); }

 private:
  struct Interp;
  std::vector<double> grid_;
  std::vector<double> cdf_;
  double log_normalizer_ = 0.0;
  std::shared_ptr<const Interp> interp_;
};

}  // namespace pdelab
