#pragma once

#include <functional>
#include <string>

namespace pdelab::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

using Fn = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (31-point) on [a, b]; either bound may be infinite.
/// `rel_tol` is relative to the L1 norm of the integrand.
Result integrate(const Fn& f, double a, double b, double rel_tol = 1e-10,
                 unsigned max_depth = 20);

/// Same as `integrate` but throws NumericalError naming `what` when the
/// result is not finite or the error estimate exceeds `accept_rel` of |value|.
Result integrate_checked(const Fn& f, double a, double b, const std::string& what,
                         double rel_tol = 1e-10, double accept_rel = 1e-6);

/// log of the integral over (0, inf) of exp(log_f(t)). Integrates in log t,
/// re-centred at the mode found on a coarse scan so that integrands living at
/// very different scales are handled without tuning. Throws NumericalError if
/// the integral is not finite or positive.
Result log_integrate_half_line(const Fn& log_f, const std::string& what,
                               double rel_tol = 1e-11);

/// Local power-law exponent d log h / d log t between t and 2t, given log h.
double log_slope(const Fn& log_h, double t);

/// Numeric integrability check of a positive function on (0, inf) given as
/// log h: the local exponent must be < -1 at large t and > -1 near 0.
/// Returns an empty string when both ends pass, otherwise which end fails.
std::string half_line_integrability(const Fn& log_h);

}  // namespace pdelab::quad
