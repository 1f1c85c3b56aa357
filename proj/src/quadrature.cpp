#include "pdelab/quadrature.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pdelab/error.hpp"

namespace pdelab::quad {

Result integrate(const Fn& f, double a, double b, double rel_tol, unsigned max_depth) {
  Result r;
  double l1 = 0.0;
  r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, max_depth, rel_tol, &r.error, &l1);
  return r;
}

Result integrate_checked(const Fn& f, double a, double b, const std::string& what,
                         double rel_tol, double accept_rel) {
  Result r = integrate(f, a, b, rel_tol);
  if (!std::isfinite(r.value) || !std::isfinite(r.error) ||
      r.error > accept_rel * std::abs(r.value) + 1e-300) {
    std::ostringstream msg;
    msg << "quadrature for " << what << " did not converge (value=" << r.value
        << ", error estimate=" << r.error << ")";
    throw NumericalError(msg.str());
  }
  return r;
}

Result log_integrate_half_line(const Fn& log_f, const std::string& what, double rel_tol) {
  // h(v) = log_f(e^v) + v is the log-integrand in v = log t.
  auto log_h = [&](double v) { return log_f(std::exp(v)) + v; };
  double best_v = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = -400; i <= 400; ++i) {
    const double v = 0.25 * i;
    const double h = log_h(v);
    if (h > best) {
      best = h;
      best_v = v;
    }
  }
  if (!std::isfinite(best)) {
    throw NumericalError("integrand for " + what + " is not finite on the scan grid");
  }
  auto g = [&](double w) {
    const double h = log_h(best_v + w);
    return std::isfinite(h) ? std::exp(h - best) : 0.0;
  };
  Result r = integrate(g, -std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity(), rel_tol, 25);
  if (!std::isfinite(r.value) || r.value <= 0.0 || r.error > 1e-6 * r.value) {
    std::ostringstream msg;
    msg << "integral for " << what << " is not finite or did not converge (scaled value="
        << r.value << ", error=" << r.error << ")";
    throw NumericalError(msg.str());
  }
  return {best + std::log(r.value), r.error / r.value};
}

double log_slope(const Fn& log_h, double t) {
  return (log_h(2.0 * t) - log_h(t)) / std::log(2.0);
}

std::string half_line_integrability(const Fn& log_h) {
  for (double t : {1e8, 1e12}) {
    const double s = log_slope(log_h, t);
    if (std::isfinite(s) && s >= -1.0) return "upper tail decays too slowly";
  }
  for (double t : {1e-12, 1e-8}) {
    const double s = log_slope(log_h, t);
    if (std::isfinite(s) && s <= -1.0) return "singularity at zero is not integrable";
  }
  return {};
}

}  // namespace pdelab::quad
