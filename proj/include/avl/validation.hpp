#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avl/classical.hpp"
#include "avl/pricing.hpp"
#include "avl/resolvents.hpp"
#include "avl/riccati.hpp"
#include "avl/simulate.hpp"
#include "avl/transform.hpp"

namespace avl {

struct CheckResult {
  std::string name;
  double value = 0.0;      // observed discrepancy
  double tolerance = 0.0;  // pass iff value <= tolerance
  bool pass = false;
};

struct ValidationSettings {
  std::size_t paths = 10000;
  std::uint64_t seed = 42;
  int steps = 500;
  HestonScheme scheme = HestonScheme::InverseGaussian;
  unsigned threads = 0;
};

inline std::string format_short(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline CheckResult make_check(std::string name, double value, double tol) {
  return {std::move(name), value, tol, std::isfinite(value) && value <= tol};
}

inline HestonParams reference_classical_heston() {
  HestonParams h;
  h.s0 = 1.0;
  h.v0 = 0.04;
  h.kappa = 1.5;
  h.theta = 0.04;
  h.sigma = 0.3;
  h.rho = -0.7;
  h.kernel = KernelSpec::constant(1.0);
  return h;
}

inline HestonParams reference_rough_heston() {
  HestonParams h;
  h.s0 = 1.0;
  h.v0 = 0.04;
  h.kappa = 1.0;
  h.theta = 0.04;
  h.sigma = 0.3;
  h.rho = -0.7;
  h.kernel = KernelSpec::fractional(1.0, 0.6);
  return h;
}

// K = Constant(1): the Volterra machinery against classical closed forms.
inline std::vector<CheckResult> classical_limit_suite(const ValidationSettings& s) {
  std::vector<CheckResult> out;
  const HestonParams h = reference_classical_heston();
  const double T = 1.0;
  const TimeGrid g(T, 1000);
  Eigen::VectorXd x0(2);
  x0 << 0.0, h.v0;

  double psi_err = 0.0, phi_err = 0.0, tr_err = 0.0;
  for (double v : {1.0, 2.0, 0.5}) {
    RowC u(2);
    u << cplx(0.0, v), 0.0;
    const auto in = TransformInputs::with_u(u, T);
    const auto sol = solve_riccati_heston(h, in, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto ref = classical::heston_riccati(cplx(0.0, v), g.node(i), h.kappa, h.theta, h.sigma, h.rho);
      psi_err = std::max(psi_err, std::abs(sol.psi[i](1) - ref.psi));
      phi_err = std::max(phi_err, std::abs(sol.phi[i] - ref.phi));
    }
    const cplx ref_tr = classical::heston_transform(cplx(0.0, v), T, h.v0, h.kappa, h.theta, h.sigma, h.rho);
    tr_err = std::max(tr_err, std::abs(transform_at_zero(x0, sol, heston_to_affine(h), in) - ref_tr));
  }
  out.push_back(make_check("riccati psi_2 vs classical Heston ODE", psi_err, 1e-5));
  out.push_back(make_check("riccati phi vs classical Heston ODE", phi_err, 1e-5));
  out.push_back(make_check("transform at u_1 in {i, 2i, i/2}", tr_err, 1e-4));

  HestonPricer pricer(h, T, PricingOptions{1000, 0.5, 1e-10, 1e-12, s.threads});
  const std::vector<double> strikes{0.8, 1.0, 1.2};
  const auto calls = pricer.call_prices(strikes);
  double price_err = 0.0;
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    const double ref = classical::heston_call(h.s0, strikes[i], T, h.v0, h.kappa, h.theta, h.sigma, h.rho);
    price_err = std::max(price_err, std::abs(calls[i] - ref) / ref);
  }
  out.push_back(make_check("call price vs classical Heston (relative)", price_err, 1e-5));

  {
    const double c = 1.0;
    const TimeGrid gr(1.0, 1000);
    const auto r = resolvent_second_kind(KernelSpec::constant(c), gr);
    double e = 0.0;
    for (std::size_t i = 0; i < gr.size(); ++i) e = std::max(e, std::abs(r.values[i](0, 0) - c * std::exp(-c * gr.node(i))));
    out.push_back(make_check("second-kind resolvent of K = 1 vs exp(-t)", e, 2e-3));
  }

  {
    // CIR: dX = kappa (theta - X) dt + sigma sqrt(X) dW
    const double kappa = 2.0, theta = 0.05, sigma = 0.3, xi = 0.1;
    auto p = AffineParams::zeros(1, StateSpace::Orthant);
    p.b0(0) = kappa * theta;
    p.B(0, 0) = -kappa;
    p.A[1](0, 0) = sigma * sigma;
    Eigen::VectorXd c0(1);
    c0 << xi;
    SimulationOptions so;
    so.storage = StorageSpec::terminal();
    so.threads = s.threads;
    const auto paths = simulate_volterra_euler(KernelSpec::constant(1.0), p, c0, TimeGrid(1.0, s.steps), s.paths,
                                               s.seed, so);
    double m = 0.0, m2 = 0.0;
    for (std::size_t q = 0; q < paths.n_paths; ++q) {
      const double x = paths.at(q, 1, 0);
      m += x;
      m2 += x * x;
    }
    const double n = static_cast<double>(paths.n_paths);
    m /= n;
    const double se = std::sqrt(std::max(m2 / n - m * m, 0.0) / n);
    const double exact = theta + (xi - theta) * std::exp(-kappa);
    out.push_back(make_check("CIR mean vs closed form (in SE)", std::abs(m - exact) / se, 3.0));
  }

  {
    auto p = AffineParams::zeros(1, StateSpace::RealSpace);
    p.A[0](0, 0) = 1.0;
    Eigen::VectorXd z(1);
    z << 0.0;
    SimulationOptions so;
    so.storage = StorageSpec::terminal();
    so.threads = s.threads;
    const auto paths = simulate_ou_exact(KernelSpec::constant(1.0), p, z, TimeGrid(1.0, 16), s.paths, s.seed, so);
    double m2 = 0.0;
    for (std::size_t q = 0; q < paths.n_paths; ++q) m2 += paths.at(q, 1, 0) * paths.at(q, 1, 0);
    const double n = static_cast<double>(paths.n_paths);
    out.push_back(make_check("Brownian variance at T = 1 (relative, 4/sqrt(n))", std::abs(m2 / n - 1.0),
                             4.0 * std::sqrt(2.0 / n)));
  }
  return out;
}

// Rough Heston transform against Monte Carlo: the central cross-check.
inline std::vector<CheckResult> transform_mc_suite(const ValidationSettings& s, const HestonParams& h, double T) {
  std::vector<CheckResult> out;
  const TimeGrid g(T, s.steps);
  SimulationOptions so;
  so.storage = StorageSpec::terminal();
  so.heston_scheme = s.scheme;
  so.threads = s.threads;
  const auto paths = simulate_heston(h, g, s.paths, s.seed, so);
  Eigen::VectorXd x0(2);
  x0 << std::log(h.s0), h.v0;
  for (double v : {0.5, 1.0, 2.0}) {
    RowC u(2);
    u << cplx(0.0, v), 0.0;
    const auto in = TransformInputs::with_u(u, T);
    const auto sol = solve_riccati_heston(h, in, g);
    const cplx tr = transform_at_zero(x0, sol, heston_to_affine(h), in);
    const auto mc = mc_functional(paths, in);
    const double z = std::max(std::abs(mc.estimate.real() - tr.real()) / mc.se_real,
                              std::abs(mc.estimate.imag() - tr.imag()) / mc.se_imag);
    out.push_back(make_check("transform vs MC at u = (" + format_short(v) + "i, 0) (in SE)", z, 3.0));
  }
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t q = 0; q < paths.n_paths; ++q) {
    const double st = std::exp(paths.at(q, 1, 0));
    sum += st;
    sum2 += st * st;
  }
  const double n = static_cast<double>(paths.n_paths), m = sum / n;
  const double se = std::sqrt(std::max(sum2 / n - m * m, 0.0) / n);
  out.push_back(make_check("martingality |mean S_T - S_0| (in SE)", std::abs(m - h.s0) / se, 3.0));
  return out;
}

} // namespace avl
