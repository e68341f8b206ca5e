#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avl/errors.hpp"
#include "avl/grid.hpp"
#include "avl/kernels.hpp"
#include "avl/model.hpp"
#include "avl/resolvents.hpp"
#include "avl/sampled.hpp"

namespace avl {

using RowC = Eigen::RowVectorXcd;

// Inputs u and f of the transform E[exp(u X_T + (f * X)_T)]. f is either a
// callable or node samples read as piecewise constant (sample k on
// [t_k, t_{k+1})); absent means f = 0.
struct TransformInputs {
  RowC u;
  std::function<RowC(double)> f_fn;
  std::vector<RowC> f_samples;
  double T = 1.0;

  static TransformInputs with_u(RowC u, double T) {
    TransformInputs in;
    in.u = std::move(u);
    in.T = T;
    return in;
  }

  bool has_f() const { return static_cast<bool>(f_fn) || !f_samples.empty(); }

  RowC f_at_node(const TimeGrid& g, std::size_t i) const {
    if (f_fn) return f_fn(g.node(i));
    if (!f_samples.empty()) return f_samples[std::min(i, f_samples.size() - 1)];
    return RowC::Zero(u.size());
  }
};

enum class RiccatiStatus { Global, BlowUp };

struct RiccatiSolution {
  TimeGrid grid;
  std::vector<RowC> psi;
  std::vector<cplx> phi;
  std::vector<RowC> chi;
  std::vector<RowC> drift;  // f + psi B + A(psi)/2 at the nodes
  RiccatiStatus status = RiccatiStatus::Global;
  double t_max_estimate = std::numeric_limits<double>::infinity();
  std::size_t valid_nodes = 0;

  bool global() const { return status == RiccatiStatus::Global; }

  ComplexFunction component(std::size_t c) const {
    std::vector<cplx> v(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) v[i] = psi[i](static_cast<Eigen::Index>(c));
    return ComplexFunction(grid, std::move(v));
  }
};

struct RiccatiOptions {
  double blowup_threshold = 1e8;
  double growth_threshold = 1e4;
  bool compute_chi = true;
};

namespace detail {

inline RowC riccati_drift(const AffineParams& p, const TransformInputs& in, const TimeGrid& g, std::size_t i,
                          const RowC& psi) {
  return in.f_at_node(g, i) + psi * p.B.cast<cplx>() + 0.5 * quadratic_form(p, psi);
}

// Newton iteration for psi = known + w * F(psi), w the diagonal weights of the
// current node. Started from known, it follows the root that tends to known as w -> 0.
inline std::optional<RowC> newton_corrector(const AffineParams& p, const TransformInputs& in, const TimeGrid& g, std::size_t i,
                            const RowC& known, const std::vector<double>& w, const RowC& start) {
  const auto d = static_cast<Eigen::Index>(p.d);
  if (!start.allFinite()) return std::nullopt;
  const Eigen::MatrixXcd bt = p.B.cast<cplx>().transpose();
  std::vector<Eigen::MatrixXcd> a(p.d);
  for (std::size_t c = 0; c < p.d; ++c) a[c] = p.A[c + 1].cast<cplx>();
  RowC psi = start;
  for (int it = 0; it < 30; ++it) {
    const RowC f = riccati_drift(p, in, g, i, psi);
    Eigen::VectorXcd res(d);
    Eigen::MatrixXcd jac = Eigen::MatrixXcd::Identity(d, d);
    for (Eigen::Index c = 0; c < d; ++c) {
      const double wc = w[static_cast<std::size_t>(c)];
      res(c) = psi(c) - known(c) - wc * f(c);
      jac.row(c) -= wc * (bt.row(c) + psi * a[static_cast<std::size_t>(c)]);
    }
    const Eigen::VectorXcd step = jac.partialPivLu().solve(res);
    if (!step.allFinite()) return std::nullopt;
    psi -= step.transpose();
    if (step.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, psi.cwiseAbs().maxCoeff())) return psi;
  }
  return std::nullopt;
}

} // namespace detail

// Riccati-Volterra equation psi = u K + (f + psi B + A(psi)/2) * K on the grid,
// for K scalar or diagonal. Product-trapezoid rule with the current node solved by
// Newton's method, falling back to a left-endpoint predictor and one corrector
// step; phi by the trapezoid rule and chi = psi * L.
inline RiccatiSolution solve_riccati(const KernelSpec& k, const AffineParams& p, const TransformInputs& in,
                                     const TimeGrid& g, const RiccatiOptions& opt = {}) {
  require_valid(p);
  const std::size_t d = p.d;
  if (static_cast<std::size_t>(in.u.size()) != d) throw ValidationError("riccati: u has wrong length");
  if (std::abs(in.T - g.t_end()) > 1e-12 * std::max(1.0, g.t_end()))
    throw ValidationError("riccati: grid must end at the horizon T");
  const auto entries = k.diagonal_entries(d);
  std::vector<KernelMoments> km;
  for (const auto& e : entries) km.push_back(kernel_moments(e, g));

  const std::size_t n = g.size();
  RiccatiSolution sol;
  sol.grid = g;
  const RowC nan_row = RowC::Constant(static_cast<Eigen::Index>(d), cplx(std::nan(""), std::nan("")));
  sol.psi.assign(n, nan_row);
  sol.drift.assign(n, nan_row);
  sol.phi.assign(n, cplx(std::nan(""), std::nan("")));

  auto kernel_row = [&](std::size_t i) {
    RowC r(static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < d; ++c) r(static_cast<Eigen::Index>(c)) = in.u(static_cast<Eigen::Index>(c)) * km[c].nodes[i];
    return r;
  };
  auto scale = [&](const RowC& x, auto&& weight) {
    RowC r(x.size());
    for (Eigen::Index c = 0; c < x.size(); ++c) r(c) = x(c) * weight(static_cast<std::size_t>(c));
    return r;
  };

  std::vector<double> w_last(d);
  for (std::size_t c = 0; c < d; ++c) w_last[c] = km[c].m1[0] - km[c].mu[0];

  sol.psi[0] = kernel_row(0);
  sol.drift[0] = detail::riccati_drift(p, in, g, 0, sol.psi[0]);
  std::vector<std::vector<cplx>> fc(d, std::vector<cplx>(n));
  auto store_drift = [&](std::size_t i) {
    for (std::size_t c = 0; c < d; ++c) fc[c][i] = sol.drift[i](static_cast<Eigen::Index>(c));
  };
  store_drift(0);
  std::size_t valid = 1;
  RowC pred(static_cast<Eigen::Index>(d)), corr(static_cast<Eigen::Index>(d));
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      const auto& m1 = km[c].m1;
      const auto& mu = km[c].mu;
      const auto& f = fc[c];
      cplx sp = 0.0, sc = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        sp += m1[i - 1 - j] * f[j];
        sc += mu[i - 1 - j] * f[j];
      }
      for (std::size_t j = 1; j < i; ++j) sc += (m1[i - j] - mu[i - j]) * f[j];
      const cplx base = in.u(static_cast<Eigen::Index>(c)) * km[c].nodes[i];
      pred(static_cast<Eigen::Index>(c)) = base + sp;
      corr(static_cast<Eigen::Index>(c)) = base + sc;
    }
    const RowC f_pred = detail::riccati_drift(p, in, g, i, pred);
    const RowC known = corr;
    corr += scale(f_pred, [&](std::size_t c) { return km[c].m1[0] - km[c].mu[0]; });
    if (auto r = detail::newton_corrector(p, in, g, i, known, w_last, known)) corr = *r;
    else if (auto r1 = detail::newton_corrector(p, in, g, i, known, w_last, corr)) corr = *r1;

    const double mag = corr.cwiseAbs().maxCoeff();
    const double prev = sol.psi[i - 1].cwiseAbs().maxCoeff();
    if (!std::isfinite(mag) || mag > opt.blowup_threshold || mag > opt.growth_threshold * std::max(prev, 1.0)) {
      sol.status = RiccatiStatus::BlowUp;
      sol.t_max_estimate = g.node(i);
      break;
    }
    sol.psi[i] = corr;
    sol.drift[i] = detail::riccati_drift(p, in, g, i, corr);
    store_drift(i);
    valid = i + 1;
  }
  sol.valid_nodes = valid;

  const Eigen::MatrixXcd a0 = p.A[0].cast<cplx>();
  const Eigen::VectorXcd b0 = p.b0.cast<cplx>();
  auto phi_rate = [&](std::size_t i) -> cplx {
    const RowC& s = sol.psi[i];
    return (s * b0)(0) + 0.5 * (s * a0 * s.transpose())(0, 0);
  };
  sol.phi[0] = 0.0;
  for (std::size_t i = 1; i < valid; ++i)
    sol.phi[i] = sol.phi[i - 1] + 0.5 * g.dt() * (phi_rate(i - 1) + phi_rate(i));

  if (sol.global() && opt.compute_chi) {
    const auto l = resolvent_first_kind(KernelSpec::diagonal(entries), g);
    std::vector<Eigen::MatrixXcd> psi_m(n);
    for (std::size_t i = 0; i < n; ++i) psi_m[i] = sol.psi[i];
    const auto chi = convolve(ComplexMatrixFunction(g, psi_m), l);
    sol.chi.resize(n);
    for (std::size_t i = 0; i < n; ++i) sol.chi[i] = chi.values[i];
  } else {
    sol.chi.assign(n, nan_row);
  }
  return sol;
}

// Heston system in (log S, V): psi_1 = u_1 + 1 * f_1 exactly, psi_2 from the
// fractional-type equation with kernel K.
inline RiccatiSolution solve_riccati_heston(const HestonParams& h, const TransformInputs& in, const TimeGrid& g,
                                            const RiccatiOptions& opt = {}) {
  return solve_riccati(heston_kernel(h), heston_to_affine(h), in, g, opt);
}

struct SignCheck {
  bool ok = true;
  std::vector<std::string> reasons;
};

// Hypotheses guaranteeing a global solution with Re psi <= 0 (orthant) or
// Re psi_1 in [0, 1], Re psi_2 <= 0 (heston).
inline SignCheck check_sign_conditions(const AffineParams& p, const TransformInputs& in, const TimeGrid& g) {
  SignCheck out;
  const auto d = static_cast<Eigen::Index>(p.d);
  auto fail = [&](const std::string& r) {
    out.ok = false;
    out.reasons.push_back(r);
  };
  if (p.state_space == StateSpace::Orthant) {
    for (Eigen::Index c = 0; c < d; ++c)
      if (in.u(c).real() > 0.0) fail("Re u_" + std::to_string(c + 1) + " > 0");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const RowC f = in.f_at_node(g, i);
      for (Eigen::Index c = 0; c < d; ++c)
        if (f(c).real() > 0.0) {
          fail("Re f_" + std::to_string(c + 1) + " > 0 at t = " + std::to_string(g.node(i)));
          return out;
        }
    }
    return out;
  }
  if (p.state_space == StateSpace::HestonSpace && p.d == 2) {
    if (in.u(1).real() > 0.0) fail("Re u_2 > 0");
    double psi1 = in.u(0).real();
    bool exits = psi1 < 0.0 || psi1 > 1.0;
    bool f2_pos = false;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      const RowC fa = in.f_at_node(g, i), fb = in.f_at_node(g, i + 1);
      psi1 += 0.5 * g.dt() * (fa(0).real() + fb(0).real());
      exits = exits || psi1 < 0.0 || psi1 > 1.0;
      f2_pos = f2_pos || fa(1).real() > 0.0 || fb(1).real() > 0.0;
    }
    if (exits) fail("Re psi_1 exits [0,1]");
    if (f2_pos) fail("Re f_2 > 0");
    return out;
  }
  fail("no sign result available for state space " + to_string(p.state_space));
  return out;
}

struct OrderProbe {
  bool conclusive = false;
  double order = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> errors;
};

// Empirical order from successive grid refinements. solve(n) returns the
// solution sampled on a fixed set of comparison times; errors are taken
// against truth when given, otherwise against the finest solve.
inline OrderProbe convergence_order_probe(const std::function<std::vector<cplx>(int)>& solve,
                                          const std::vector<int>& steps,
                                          const std::vector<cplx>* truth = nullptr) {
  OrderProbe out;
  if (steps.size() < (truth ? 2u : 3u)) return out;
  std::vector<std::vector<cplx>> sols;
  for (int n : steps) sols.push_back(solve(n));
  const std::vector<cplx>& ref = truth ? *truth : sols.back();
  const std::size_t m = truth ? steps.size() : steps.size() - 1;
  for (std::size_t s = 0; s < m; ++s) {
    double e = 0.0;
    for (std::size_t j = 0; j < ref.size(); ++j) e = std::max(e, std::abs(sols[s][j] - ref[j]));
    out.errors.push_back(e);
  }
  for (std::size_t s = 1; s < out.errors.size(); ++s)
    if (!(out.errors[s] < out.errors[s - 1])) return out;
  // least-squares slope of log error against log dt
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(out.errors.size());
  for (std::size_t s = 0; s < out.errors.size(); ++s) {
    const double x = std::log(1.0 / steps[s]), y = std::log(out.errors[s]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.order = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  out.conclusive = std::isfinite(out.order);
  return out;
}

} // namespace avl
