#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "avl/errors.hpp"
#include "avl/kernels.hpp"
#include "avl/model.hpp"
#include "avl/resolvents.hpp"
#include "avl/riccati.hpp"
#include "avl/sampled.hpp"

namespace avl {

inline void require_global(const RiccatiSolution& sol) {
  if (!sol.global())
    throw NumericalError("transform unavailable: Riccati solution blows up near t = " +
                         std::to_string(sol.t_max_estimate));
}

// Y_0 = u X_0 + int_0^T (f X_0 + psi b(X_0) + psi a(X_0) psi^T / 2) ds, trapezoid rule.
inline cplx y_zero(const Eigen::VectorXd& x0, const RiccatiSolution& sol, const AffineParams& p,
                   const TransformInputs& in) {
  require_global(sol);
  const auto av = evaluate_affine(p, x0);
  const Eigen::VectorXcd x = x0.cast<cplx>(), b = av.b.cast<cplx>();
  const Eigen::MatrixXcd a = av.a.cast<cplx>();
  const TimeGrid& g = sol.grid;
  auto rate = [&](std::size_t i) -> cplx {
    const RowC& s = sol.psi[i];
    return (in.f_at_node(g, i) * x)(0) + (s * b)(0) + 0.5 * (s * a * s.transpose())(0, 0);
  };
  cplx y = (in.u * x)(0);
  for (std::size_t i = 0; i + 1 < g.size(); ++i) y += 0.5 * g.dt() * (rate(i) + rate(i + 1));
  return y;
}

// E[exp(u X_T + (f * X)_T)] = exp(Y_0).
inline cplx transform_at_zero(const Eigen::VectorXd& x0, const RiccatiSolution& sol, const AffineParams& p,
                              const TransformInputs& in) {
  return std::exp(y_zero(x0, sol, p, in));
}

// The same transform through exp(phi(T) + chi(T) X_0).
inline cplx transform_phi_chi(const Eigen::VectorXd& x0, const RiccatiSolution& sol) {
  require_global(sol);
  const std::size_t n = sol.grid.size() - 1;
  return std::exp(sol.phi[n] + (sol.chi[n] * x0.cast<cplx>())(0));
}

// E[X_t] = (id - int_0^t R_B) X_0 + (int_0^t E_B) b0 on the grid nodes.
inline SampledFunction<Eigen::VectorXd> unconditional_mean(const KernelSpec& k, const AffineParams& p,
                                                           const Eigen::VectorXd& x0, const TimeGrid& g) {
  require_valid(p);
  const auto pair = resolvent_pair_b(k, p.B, g);
  const auto d = static_cast<Eigen::Index>(p.d);
  Eigen::MatrixXd ir = Eigen::MatrixXd::Zero(d, d), ie = Eigen::MatrixXd::Zero(d, d);
  std::vector<Eigen::VectorXd> out(g.size());
  out[0] = x0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    ir += pair.r_b.cell_integral(i - 1);
    ie += pair.e_b.cell_integral(i - 1);
    out[i] = (Eigen::MatrixXd::Identity(d, d) - ir) * x0 + ie * p.b0;
  }
  return SampledFunction<Eigen::VectorXd>(g, std::move(out));
}

// Pi_h(t) = (Delta_h E_B * L)(t) - (id - int_0^{t+h} R_B) for h = lag_steps * dt,
// on nodes t_i with t_i + h <= t_end, together with the pieces of the
// conditional mean formula.
struct PiAdjustment {
  TimeGrid grid;
  std::size_t lag_steps = 0;
  std::vector<Eigen::MatrixXd> pi;       // Pi_h(t_i), i = 0..n
  std::vector<Eigen::MatrixXd> dpi;      // Pi_h(t_{i+1}) - Pi_h(t_i)
  Eigen::MatrixXd shifted_at_zero;       // (Delta_h E_B * L)(0)
  Eigen::MatrixXd integrated_eb;         // (id * E_B)(h)
  Eigen::MatrixXd integrated_rb;         // int_0^h R_B
};

inline PiAdjustment adjustment_pi(const KernelSpec& k, const AffineParams& p, std::size_t lag_steps,
                                  const TimeGrid& g) {
  require_valid(p);
  const auto d = static_cast<Eigen::Index>(p.d);
  const std::size_t n = g.size();
  const std::size_t m = lag_steps;
  const TimeGrid ext(g.dt() * static_cast<double>(g.n_steps() + static_cast<int>(m)),
                     g.n_steps() + static_cast<int>(m));
  const auto pair = resolvent_pair_b(k, p.B, ext);
  const auto l = resolvent_first_kind(KernelSpec::diagonal(k.diagonal_entries(p.d)), g);
  const double dt = g.dt();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);

  std::vector<Eigen::MatrixXd> ebar(ext.size() - 1), cum_r(ext.size(), Eigen::MatrixXd::Zero(d, d)),
      cum_e(ext.size(), Eigen::MatrixXd::Zero(d, d));
  for (std::size_t j = 0; j + 1 < ext.size(); ++j) {
    ebar[j] = pair.e_b.cell_integral(j) / dt;
    cum_r[j + 1] = cum_r[j] + pair.r_b.cell_integral(j);
    cum_e[j + 1] = cum_e[j] + pair.e_b.cell_integral(j);
  }

  PiAdjustment out;
  out.grid = g;
  out.lag_steps = m;
  out.pi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd shifted;
    if (m == 0) {
      shifted = id - cum_r[i];  // (E_B * L)(t) = id - int_0^t R_B
    } else {
      shifted = pair.e_b.values[i + m] * l.atom0;
      for (std::size_t q = 0; q < i; ++q) shifted += ebar[i + m - 1 - q] * l.mass[q];
    }
    if (i == 0) out.shifted_at_zero = shifted;
    out.pi[i] = shifted - (id - cum_r[i + m]);
  }
  out.dpi.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) out.dpi[i] = out.pi[i + 1] - out.pi[i];
  out.integrated_eb = cum_e[m];
  out.integrated_rb = cum_r[m];
  return out;
}

// pi_h(t_i) = (Delta_h psi * L)(t_i) - (psi * L)(t_i + h) for t_i + h <= T.
inline std::vector<RowC> adjustment_pi_psi(const KernelSpec& k, const RiccatiSolution& sol, std::size_t lag_steps) {
  require_global(sol);
  const TimeGrid& g = sol.grid;
  const std::size_t d = static_cast<std::size_t>(sol.psi[0].size());
  const auto l = resolvent_first_kind(KernelSpec::diagonal(k.diagonal_entries(d)), g);
  const std::size_t n = g.size(), m = lag_steps;
  if (m >= n) throw ValidationError("adjustment_pi: lag exceeds the horizon");
  std::vector<RowC> out(n - m);
  for (std::size_t i = 0; i + m < n; ++i) {
    RowC acc = RowC::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t q = i; q < i + m; ++q) acc -= sol.psi[i + m - 1 - q] * l.mass[q].cast<cplx>();
    out[i] = acc;
  }
  return out;
}

// E[X_T | F_t] from the path observed on [0, t]:
// (id * E_B)(h) b0 + (Delta_h E_B * L)(0) X_t - Pi_h(t) X_0 + (dPi_h * X)_t.
inline Eigen::VectorXd conditional_mean_from_path(const PiAdjustment& adj, const AffineParams& p,
                                                  const std::vector<Eigen::VectorXd>& path, std::size_t t_index) {
  if (t_index >= path.size()) throw std::domain_error("conditional mean: path shorter than t");
  if (t_index >= adj.pi.size()) throw std::domain_error("conditional mean: T beyond grid");
  const Eigen::VectorXd& x0 = path[0];
  Eigen::VectorXd out = adj.integrated_eb * p.b0 + adj.shifted_at_zero * path[t_index] - adj.pi[t_index] * x0;
  for (std::size_t q = 0; q < t_index; ++q)
    out += adj.dpi[q] * (0.5 * (path[t_index - q] + path[t_index - q - 1]));
  return out;
}

inline Eigen::VectorXd conditional_mean_from_path(const KernelSpec& k, const AffineParams& p,
                                                  const std::vector<Eigen::VectorXd>& path, const TimeGrid& g,
                                                  double t, double T) {
  if (T < t) throw std::domain_error("conditional mean: T must not precede t");
  const std::size_t ti = g.index_of(t);
  const std::size_t lag = static_cast<std::size_t>(std::llround((T - t) / g.dt()));
  if (std::abs((T - t) / g.dt() - static_cast<double>(lag)) > 1e-9)
    throw std::domain_error("conditional mean: T - t must be a multiple of dt");
  const TimeGrid sub(std::max(t, g.dt()), std::max<int>(static_cast<int>(ti), 1));
  const auto adj = adjustment_pi(k, p, lag, sub);
  return conditional_mean_from_path(adj, p, path, ti);
}

} // namespace avl
