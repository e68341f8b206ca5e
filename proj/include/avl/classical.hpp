#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>

namespace avl::classical {

using cplx = std::complex<double>;

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Black-Scholes call with zero rates; total_var = sigma^2 T.
inline double bs_call_total_var(double s0, double strike, double total_var) {
  if (total_var <= 0.0) return std::max(s0 - strike, 0.0);
  const double sd = std::sqrt(total_var);
  const double d1 = (std::log(s0 / strike) + 0.5 * total_var) / sd;
  return s0 * norm_cdf(d1) - strike * norm_cdf(d1 - sd);
}

inline double bs_call(double s0, double strike, double t, double vol) {
  return bs_call_total_var(s0, strike, vol * vol * t);
}

inline double bs_vega(double s0, double strike, double t, double vol) {
  const double sd = vol * std::sqrt(t);
  if (sd <= 0.0) return 0.0;
  const double d1 = (std::log(s0 / strike) + 0.5 * sd * sd) / sd;
  return s0 * std::sqrt(t) * std::exp(-0.5 * d1 * d1) / std::sqrt(2.0 * M_PI);
}

// Classical Heston: dV = kappa (theta - V) dt + sigma sqrt(V) dB. For
// E[exp(u log(S_T / S_0))] = exp(phi(T) + psi(T) V_0), psi solves
// psi' = (u^2 - u)/2 + (rho sigma u - kappa) psi + sigma^2 psi^2 / 2, psi(0) = 0,
// and phi' = kappa theta psi. Closed form in the branch-stable "little trap" form.
struct HestonRiccati {
  cplx psi;
  cplx phi;
};

inline HestonRiccati heston_riccati(cplx u, double t, double kappa, double theta, double sigma, double rho) {
  if (sigma <= 0.0) throw std::invalid_argument("classical heston: sigma must be positive");
  const double s2 = sigma * sigma;
  const cplx beta = kappa - rho * sigma * u;
  const cplx d = std::sqrt(beta * beta - s2 * (u * u - u));
  const cplx g = (beta - d) / (beta + d);
  const cplx e = std::exp(-d * t);
  HestonRiccati out;
  out.psi = (beta - d) / s2 * (1.0 - e) / (1.0 - g * e);
  out.phi = kappa * theta / s2 * ((beta - d) * t - 2.0 * std::log((1.0 - g * e) / (1.0 - g)));
  return out;
}

inline cplx heston_transform(cplx u, double t, double v0, double kappa, double theta, double sigma, double rho) {
  const auto r = heston_riccati(u, t, kappa, theta, sigma, rho);
  return std::exp(r.phi + r.psi * v0);
}

// Call price from the original two-probability representation
// C = S0 P1 - K P2 with P_j = 1/2 + (1/pi) int_0^inf Re[...] dw.
inline double heston_call(double s0, double strike, double t, double v0, double kappa, double theta, double sigma,
                          double rho) {
  const double k = std::log(strike / s0);
  auto cf = [&](cplx w) { return heston_transform(cplx(0.0, 1.0) * w, t, v0, kappa, theta, sigma, rho); };
  boost::math::quadrature::exp_sinh<double> integrator;
  const cplx i(0.0, 1.0);
  auto p1_integrand = [&](double w) {
    if (w == 0.0) return 0.0;
    return std::real(std::exp(-i * w * k) * cf(cplx(w, -1.0)) / (i * w));
  };
  auto p2_integrand = [&](double w) {
    if (w == 0.0) return 0.0;
    return std::real(std::exp(-i * w * k) * cf(cplx(w, 0.0)) / (i * w));
  };
  const double p1 = 0.5 + integrator.integrate(p1_integrand, 1e-13) / M_PI;
  const double p2 = 0.5 + integrator.integrate(p2_integrand, 1e-13) / M_PI;
  return s0 * p1 - strike * p2;
}

} // namespace avl::classical
