#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "avl/errors.hpp"

namespace avl::quad {

// Adaptive Gauss-Kronrod for integrands that are smooth on [a, b].
template <class F>
double smooth(F&& f, double a, double b, double rel_tol = 1e-13) {
  if (a == b) return 0.0;
  // Integrate over [0, 1]: boost compares an unscaled error estimate with a
  // scaled tolerance, which misbehaves on short intervals.
  const double h = b - a;
  auto g = [&](double x) { return f(a + h * x); };
  double err = 0.0, l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
      g, 0.0, 1.0, 15, rel_tol, &err, &l1);
  if (!std::isfinite(v) || err > 1e-8 * std::max(l1, std::numeric_limits<double>::min()))
    throw NumericalError("quadrature did not converge on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "]");
  return v * h;
}

// Double-exponential rule for integrands with integrable endpoint
// singularities. f receives (x, xc) where xc is the signed distance to the
// nearer endpoint, which keeps b - x accurate near b.
template <class F>
double endpoint_singular(F&& f, double a, double b, double rel_tol = 1e-13) {
  if (a == b) return 0.0;
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
  double err = 0.0, l1 = 0.0;
  const double v = integrator.integrate(f, a, b, rel_tol, &err, &l1);
  if (!std::isfinite(v) || err > 1e4 * rel_tol * std::max(l1, std::numeric_limits<double>::min()))
    throw NumericalError("singular quadrature did not converge on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "]");
  return v;
}

} // namespace avl::quad
