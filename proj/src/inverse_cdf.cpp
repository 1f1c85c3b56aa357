#include "pdelab/inverse_cdf.hpp"

#include <algorithm>
#include <cmath>

// pchip.hpp calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pdelab/error.hpp"

namespace pdelab {

struct InverseCdfTable::Interp {
  boost::math::interpolators::pchip<std::vector<double>> log_x_of_cdf;
  double cdf_lo;
  double cdf_hi;
};

namespace {

// Mass of exp(log_density(e^v) + v - ref) over [v0, v1].
double segment_mass(const quad::Fn& log_density, double ref, double v0, double v1) {
  auto g = [&](double v) {
    const double h = log_density(std::exp(v)) + v - ref;
    return std::isfinite(h) ? std::exp(h) : 0.0;
  };
  return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(g, v0, v1, 6, 1e-12);
}

}  // namespace

InverseCdfTable::InverseCdfTable(const quad::Fn& log_density, std::size_t points) {
  require(points >= 16, "inverse CDF table needs at least 16 points");
  const quad::Result total = quad::log_integrate_half_line(log_density, "inverse CDF table");
  log_normalizer_ = total.value;
  const double ref = total.value;

  // Coarse pass in v = log x to locate the range holding all but 1e-13 of the mass.
  double mode_v = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = -400; i <= 400; ++i) {
    const double v = 0.25 * i;
    const double h = log_density(std::exp(v)) + v;
    if (h > best) {
      best = h;
      mode_v = v;
    }
  }
  const double step = 0.25;
  double v_lo = mode_v;
  double below = 1.0;
  while (below > 1e-13 && v_lo > mode_v - 200.0) {
    v_lo -= step;
    below = segment_mass(log_density, ref, v_lo - 400.0, v_lo);
  }
  double v_hi = mode_v;
  double above = 1.0;
  while (above > 1e-13 && v_hi < mode_v + 200.0) {
    v_hi += step;
    above = segment_mass(log_density, ref, v_hi, v_hi + 400.0);
  }

  grid_.resize(points);
  cdf_.resize(points);
  const double dv = (v_hi - v_lo) / static_cast<double>(points - 1);
  double acc = below;
  for (std::size_t i = 0; i < points; ++i) {
    const double v = v_lo + dv * static_cast<double>(i);
    if (i > 0) acc += segment_mass(log_density, ref, v - dv, v);
    grid_[i] = std::exp(v);
    cdf_[i] = acc;
  }
  // Renormalize against the accumulated total so the table ends exactly at 1.
  const double norm = acc + above;
  for (double& c : cdf_) c /= norm;

  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(points);
  ys.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    if (!xs.empty() && cdf_[i] <= xs.back() * (1.0 + 1e-15) + 1e-300) continue;
    xs.push_back(cdf_[i]);
    ys.push_back(std::log(grid_[i]));
  }
  if (xs.size() < 4) throw NumericalError("inverse CDF table degenerated (density too concentrated)");
  const double lo = xs.front();
  const double hi = xs.back();
  interp_ = std::make_shared<Interp>(
      Interp{boost::math::interpolators::pchip<std::vector<double>>(std::move(xs), std::move(ys)), lo,
             hi});
}

double InverseCdfTable::quantile(double u) const {
  if (u <= interp_->cdf_lo) return grid_.front() * std::max(u / interp_->cdf_lo, 1e-300);
  if (u >= interp_->cdf_hi) return grid_.back();
  return std::exp(interp_->log_x_of_cdf(u));
}

}  // namespace pdelab
