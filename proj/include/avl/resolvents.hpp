#pragma once

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "avl/errors.hpp"
#include "avl/grid.hpp"
#include "avl/kernels.hpp"
#include "avl/sampled.hpp"

namespace avl {

// Matrix kernel K(t) = sum_m M_m g_m(t) with g_m unit-weight gamma terms.
// Covers scalar kernels (1 x 1), diagonal kernels and products K * B.
struct TermKernel {
  std::size_t dim = 1;
  std::vector<std::pair<Eigen::MatrixXd, GammaTerm>> parts;

  static TermKernel from_spec(const KernelSpec& k, std::size_t d) {
    TermKernel out;
    out.dim = d;
    const auto entries = k.diagonal_entries(d);
    for (std::size_t i = 0; i < d; ++i)
      for (const auto& g : gamma_terms(entries[i])) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
        m(i, i) = g.c;
        out.parts.push_back({m, GammaTerm{1.0, g.alpha, g.lambda}});
      }
    return out;
  }

  TermKernel times_right(const Eigen::MatrixXd& b) const {
    TermKernel out = *this;
    for (auto& p : out.parts) p.first = p.first * b;
    return out;
  }

  bool singular() const {
    for (const auto& p : parts)
      if (p.second.singular() && p.first.cwiseAbs().maxCoeff() > 0.0) return true;
    return false;
  }
};

namespace detail {

struct TermMoments {
  std::vector<double> m1, mu, nodes;
};

inline TermMoments term_moments(const GammaTerm& g, const TimeGrid& grid) {
  const std::size_t n = static_cast<std::size_t>(grid.n_steps());
  TermMoments t{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n + 1)};
  for (std::size_t k = 0; k < n; ++k) {
    const double a = grid.node(k), b = grid.node(k + 1);
    try {
      t.m1[k] = term_integral(g, a, b);
      t.mu[k] = term_first_moment(g, a, b);
    } catch (const NumericalError& e) {
      throw NumericalError("kernel moments: cell " + std::to_string(k) + ": " + e.what());
    }
  }
  t.nodes[0] = g.singular() ? t.m1[0] / grid.dt() : g(0.0);
  for (std::size_t i = 1; i <= n; ++i) t.nodes[i] = g(grid.node(i));
  return t;
}

// Matrix-valued moments of a TermKernel on a grid.
struct MatrixMoments {
  std::vector<Eigen::MatrixXd> m1, mu, nodes;
};

inline MatrixMoments matrix_moments(const TermKernel& k, const TimeGrid& grid) {
  const std::size_t n = static_cast<std::size_t>(grid.n_steps());
  const std::size_t d = k.dim;
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(d, d);
  MatrixMoments out{std::vector<Eigen::MatrixXd>(n, z), std::vector<Eigen::MatrixXd>(n, z),
                    std::vector<Eigen::MatrixXd>(n + 1, z)};
  std::map<std::pair<double, double>, TermMoments> cache;
  for (const auto& [m, g] : k.parts) {
    auto key = std::make_pair(g.alpha, g.lambda);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, term_moments(g, grid)).first;
    const auto& tm = it->second;
    for (std::size_t j = 0; j < n; ++j) {
      out.m1[j] += m * tm.m1[j];
      out.mu[j] += m * tm.mu[j];
    }
    for (std::size_t i = 0; i <= n; ++i) out.nodes[i] += m * tm.nodes[i];
  }
  return out;
}

// Node values of K1 * M * K2 for term kernels, i.e. sum_{p,q} P_p M Q_q (g_p * g_q)(t_i).
inline std::vector<Eigen::MatrixXd> sandwich_convolution(const TermKernel& k1, const Eigen::MatrixXd& mid,
                                                         const TermKernel& k2, const TimeGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<Eigen::MatrixXd> out(n, Eigen::MatrixXd::Zero(k1.dim, k2.dim));
  for (const auto& [mp, gp] : k1.parts)
    for (const auto& [mq, gq] : k2.parts) {
      const Eigen::MatrixXd coef = mp * mid * mq;
      if (coef.cwiseAbs().maxCoeff() == 0.0) continue;
      for (std::size_t i = 1; i < n; ++i) out[i] += coef * term_convolution(gp, gq, grid.node(i));
    }
  return out;
}

// Product-trapezoid approximation of int_0^{t_i} W(t_i - s) g(s) ds with g
// linear between nodes; the weight on g(t_i) is returned separately.
template <class T, bool KernelLeft>
T product_trapezoid(const MatrixMoments& w, const std::vector<T>& g, std::size_t i) {
  T acc = zero_like(g[0]);
  for (std::size_t k = 0; k < i; ++k) {
    const Eigen::MatrixXd right = w.m1[k] - w.mu[k];
    if constexpr (KernelLeft) {
      acc += w.mu[k] * g[i - k - 1];
      if (k > 0) acc += right * g[i - k];
    } else {
      acc += g[i - k - 1] * w.mu[k];
      if (k > 0) acc += g[i - k] * right;
    }
  }
  return acc;
}

inline Eigen::MatrixXd solve_block(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs, std::size_t i) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-14)
    throw NumericalError("resolvent: singular diagonal block at step " + std::to_string(i));
  return lu.solve(rhs);
}

} // namespace detail

// Resolvent of the second kind R of a term kernel K: K * R = R * K = K - R.
// Solved in the form R = K - G, G = K * K - K * G, with exact convolutions
// K * K and product-trapezoid weights for K * G. The singular part of R is
// carried by K exactly; cell integrals of R are returned alongside.
inline MatrixFunction resolvent_second_kind(const TermKernel& k, const TimeGrid& grid) {
  const std::size_t n = grid.size(), d = k.dim;
  const auto w = detail::matrix_moments(k, grid);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  const auto c = detail::sandwich_convolution(k, id, k, grid);
  std::vector<Eigen::MatrixXd> g(n, Eigen::MatrixXd::Zero(d, d));
  const Eigen::MatrixXd diag = id + w.m1[0] - w.mu[0];
  for (std::size_t i = 1; i < n; ++i) {
    const Eigen::MatrixXd rhs = c[i] - detail::product_trapezoid<Eigen::MatrixXd, true>(w, g, i);
    g[i] = detail::solve_block(diag, rhs, i);
  }
  std::vector<Eigen::MatrixXd> r(n), ci(n - 1);
  for (std::size_t i = 0; i < n; ++i) r[i] = w.nodes[i] - g[i];
  for (std::size_t j = 0; j + 1 < n; ++j) ci[j] = w.m1[j] - (g[j] + g[j + 1]) * (0.5 * grid.dt());
  MatrixFunction out(grid, std::move(r), std::move(ci));
  if (!out.finite()) throw NumericalError("resolvent: non-finite values");
  return out;
}

inline MatrixFunction resolvent_second_kind(const KernelSpec& k, const TimeGrid& grid) {
  return resolvent_second_kind(TermKernel::from_spec(k, k.dimension()), grid);
}

// Second-kind resolvent of a sampled (matrix) kernel by forward substitution
// R_i = K_i - sum_{j<i} w_{i-1-j} R_j, w = cell integrals of K.
inline MatrixFunction resolvent_second_kind(const MatrixFunction& k) {
  const std::size_t n = k.size();
  std::vector<Eigen::MatrixXd> r(n);
  std::vector<Eigen::MatrixXd> w(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) w[j] = k.cell_integral(j);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd acc = k.values[i];
    for (std::size_t j = 0; j < i; ++j) acc -= w[i - 1 - j] * r[j];
    r[i] = acc;
  }
  MatrixFunction out(k.grid, std::move(r));
  if (!out.finite()) throw NumericalError("resolvent: non-finite values");
  return out;
}

struct ResolventPairB {
  MatrixFunction r_b;
  MatrixFunction e_b;
};

// R_B = resolvent of -K B and E_B = K - R_B * K, for scalar or diagonal K.
inline ResolventPairB resolvent_pair_b(const KernelSpec& k, const Eigen::MatrixXd& b, const TimeGrid& grid) {
  const std::size_t d = static_cast<std::size_t>(b.rows());
  if (b.rows() != b.cols()) throw ValidationError("resolvent_pair_b: B must be square");
  const TermKernel kk = TermKernel::from_spec(k, d);
  const TermKernel kb = kk.times_right(-b);
  const std::size_t n = grid.size();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);

  const auto wk = detail::matrix_moments(kk, grid);
  const auto wb = detail::matrix_moments(kb, grid);
  const auto c = detail::sandwich_convolution(kb, id, kb, grid);
  std::vector<Eigen::MatrixXd> g(n, Eigen::MatrixXd::Zero(d, d));
  const Eigen::MatrixXd diag = id + wb.m1[0] - wb.mu[0];
  for (std::size_t i = 1; i < n; ++i) {
    const Eigen::MatrixXd rhs = c[i] - detail::product_trapezoid<Eigen::MatrixXd, true>(wb, g, i);
    g[i] = detail::solve_block(diag, rhs, i);
  }
  std::vector<Eigen::MatrixXd> r(n), rci(n - 1);
  for (std::size_t i = 0; i < n; ++i) r[i] = wb.nodes[i] - g[i];
  for (std::size_t j = 0; j + 1 < n; ++j) rci[j] = wb.m1[j] - (g[j] + g[j + 1]) * (0.5 * grid.dt());

  // R_B * K = (-K B) * K - G * K
  const auto kbk = detail::sandwich_convolution(kk, -b, kk, grid);
  std::vector<Eigen::MatrixXd> e(n), eci(n - 1), diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = Eigen::MatrixXd::Zero(d, d);
    if (i > 0) {
      Eigen::MatrixXd gk = detail::product_trapezoid<Eigen::MatrixXd, false>(wk, g, i);
      gk += g[i] * (wk.m1[0] - wk.mu[0]);
      diff[i] = -(kbk[i] - gk);
    }
    e[i] = wk.nodes[i] + diff[i];
  }
  for (std::size_t j = 0; j + 1 < n; ++j) eci[j] = wk.m1[j] + (diff[j] + diff[j + 1]) * (0.5 * grid.dt());
  ResolventPairB out{MatrixFunction(grid, std::move(r), std::move(rci)),
                     MatrixFunction(grid, std::move(e), std::move(eci))};
  if (!out.r_b.finite() || !out.e_b.finite()) throw NumericalError("resolvent_pair_b: non-finite values");
  return out;
}

namespace detail {

inline MeasureRepr first_kind_numeric(double k0, const std::vector<double>& knodes,
                                      const std::vector<double>& m1, const TimeGrid& grid) {
  const std::size_t n = grid.size();
  const double dt = grid.dt();
  MeasureRepr out{grid, Eigen::MatrixXd::Constant(1, 1, std::isfinite(k0) ? 1.0 / k0 : 0.0), {}};
  const double atom = out.atom0(0, 0);
  std::vector<double> ell(n - 1, 0.0);
  if (!(m1[0] > 0.0)) throw NumericalError("first-kind resolvent: kernel has zero mass on the first cell");
  for (std::size_t i = 1; i < n; ++i) {
    double s = atom * knodes[i];
    for (std::size_t k = 0; k + 1 < i; ++k) s += ell[k] / dt * m1[i - 1 - k];
    ell[i - 1] = (1.0 - s) * dt / m1[0];
  }
  for (double l : ell) out.mass.push_back(Eigen::MatrixXd::Constant(1, 1, l));
  return out;
}

inline double lower_gamma(double s, double x) { return x > 0.0 ? boost::math::tgamma_lower(s, x) : 0.0; }

// Cell masses of the first-kind resolvent of a gamma term c e^{-lt} t^{a-1}/Gamma(a), a < 1, l > 0.
inline std::vector<double> gamma_first_kind_masses(double c, double a, double l, const TimeGrid& grid) {
  const double s = 1.0 - a;
  const double g1a = std::tgamma(s);
  auto q_cum = [&](double t) { return std::pow(l, a - 1.0) * lower_gamma(s, l * t); };
  auto int_lower = [&](double x) { return x * lower_gamma(s, x) - lower_gamma(s + 1.0, x); };
  auto p_cum = [&](double t) { return std::pow(l, a - 1.0) * int_lower(l * t); };
  std::vector<double> out(static_cast<std::size_t>(grid.n_steps()));
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t0 = grid.node(k), t1 = grid.node(k + 1);
    out[k] = (q_cum(t1) - q_cum(t0) + p_cum(t1) - p_cum(t0)) / (c * g1a);
  }
  return out;
}

inline MeasureRepr first_kind_scalar(const KernelSpec& k, const TimeGrid& grid) {
  const std::size_t n = static_cast<std::size_t>(grid.n_steps());
  const double dt = grid.dt();
  auto atom_only = [&](double atom, double density) {
    MeasureRepr m{grid, Eigen::MatrixXd::Constant(1, 1, atom), {}};
    m.mass.assign(n, Eigen::MatrixXd::Constant(1, 1, density * dt));
    return m;
  };
  auto from_masses = [&](const std::vector<double>& ms) {
    MeasureRepr m{grid, Eigen::MatrixXd::Zero(1, 1), {}};
    for (double x : ms) m.mass.push_back(Eigen::MatrixXd::Constant(1, 1, x));
    return m;
  };
  auto fractional = [&](double c, double a) {
    std::vector<double> ms(n);
    for (std::size_t j = 0; j < n; ++j)
      ms[j] = pow_diff(grid.node(j), grid.node(j + 1), 1.0 - a) / (c * std::tgamma(2.0 - a));
    return from_masses(ms);
  };
  const auto& v = k.variant();
  if (auto* x = std::get_if<ConstantKernel>(&v)) return atom_only(1.0 / x->c, 0.0);
  if (auto* x = std::get_if<ExponentialKernel>(&v)) return atom_only(1.0 / x->c, x->lambda / x->c);
  if (auto* x = std::get_if<FractionalKernel>(&v)) {
    if (x->alpha == 1.0) return atom_only(1.0 / x->c, 0.0);
    return fractional(x->c, x->alpha);
  }
  if (auto* x = std::get_if<GammaKernel>(&v)) {
    if (x->alpha == 1.0) return atom_only(1.0 / x->c, x->lambda / x->c);
    if (x->lambda == 0.0) return fractional(x->c, x->alpha);
    return from_masses(gamma_first_kind_masses(x->c, x->alpha, x->lambda, grid));
  }
  const auto km = kernel_moments(k, grid);
  const double k0 = singular_at_zero(k) ? std::numeric_limits<double>::infinity() : eval_kernel(k, 0.0);
  return first_kind_numeric(k0, km.nodes, km.m1, grid);
}

} // namespace detail

// Resolvent of the first kind L: K * L = L * K = id. Closed forms for the
// constant, exponential, fractional and gamma families; a forward solve of
// (K * L)(t_i) = 1 for sums.
inline MeasureRepr resolvent_first_kind(const KernelSpec& k, const TimeGrid& grid) {
  if (k.is_scalar()) return detail::first_kind_scalar(k, grid);
  const auto entries = k.diagonal_entries(k.dimension());
  const std::size_t d = entries.size();
  MeasureRepr out{grid, Eigen::MatrixXd::Zero(d, d),
                  std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(grid.n_steps()),
                                               Eigen::MatrixXd::Zero(d, d))};
  for (std::size_t i = 0; i < d; ++i) {
    const auto s = detail::first_kind_scalar(entries[i], grid);
    out.atom0(i, i) = s.atom0(0, 0);
    for (std::size_t j = 0; j < out.mass.size(); ++j) out.mass[j](i, i) = s.mass[j](0, 0);
  }
  return out;
}

// First-kind resolvent of a sampled scalar kernel. The kernel must be
// nonnegative, non-increasing and not identically zero.
inline MeasureRepr resolvent_first_kind(const RealFunction& k) {
  bool nonzero = false;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k.values[i] < 0.0) throw ValidationError("first-kind resolvent: kernel must be nonnegative");
    if (i > 0 && k.values[i] > k.values[i - 1])
      throw ValidationError("first-kind resolvent: kernel must be non-increasing");
    nonzero = nonzero || k.values[i] > 0.0;
  }
  if (!nonzero) throw ValidationError("first-kind resolvent: kernel is identically zero");
  std::vector<double> m1(k.size() - 1);
  for (std::size_t j = 0; j < m1.size(); ++j) m1[j] = k.cell_integral(j);
  return detail::first_kind_numeric(k.values[0], k.values, m1, k.grid);
}

// Discrete convolutions. Argument order is the order of the matrix factors.

// (K * g)(t_i) = sum_{j<i} m1_{i-1-j} g_j
template <class T>
SampledFunction<T> convolve(const KernelMoments& k, const SampledFunction<T>& g) {
  if (!(k.grid == g.grid)) throw ValidationError("convolve: grid mismatch");
  std::vector<T> out(g.size(), detail::zero_like(g[0]));
  for (std::size_t i = 1; i < g.size(); ++i) {
    T acc = detail::zero_like(g[0]);
    for (std::size_t j = 0; j < i; ++j) acc += T(g[j] * k.m1[i - 1 - j]);
    out[i] = acc;
  }
  return SampledFunction<T>(g.grid, std::move(out));
}

// (L * g)(t_i) = atom g_i + sum_{k<i} mass_k g_{i-1-k}
template <class T>
SampledFunction<T> convolve(const MeasureRepr& l, const SampledFunction<T>& g) {
  if (!(l.grid == g.grid)) throw ValidationError("convolve: grid mismatch");
  auto mul = [&](const Eigen::MatrixXd& m, const T& x) -> T {
    if constexpr (detail::is_eigen<T>::value) {
      if (m.cols() != x.rows()) throw ValidationError("convolve: dimension mismatch");
      return T(m.cast<typename T::Scalar>() * x);
    } else {
      if (m.size() != 1) throw ValidationError("convolve: scalar function against matrix measure");
      return T(m(0, 0) * x);
    }
  };
  std::vector<T> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    T acc = mul(l.atom0, g[i]);
    for (std::size_t k = 0; k < i; ++k) acc += mul(l.mass[k], g[i - 1 - k]);
    out[i] = acc;
  }
  return SampledFunction<T>(g.grid, std::move(out));
}

// (g * L)(t_i) = g_i atom + sum_{k<i} g_{i-1-k} mass_k
template <class T>
SampledFunction<T> convolve(const SampledFunction<T>& g, const MeasureRepr& l) {
  if (!(l.grid == g.grid)) throw ValidationError("convolve: grid mismatch");
  auto mul = [&](const T& x, const Eigen::MatrixXd& m) -> T {
    if constexpr (detail::is_eigen<T>::value) {
      if (x.cols() != m.rows()) throw ValidationError("convolve: dimension mismatch");
      return T(x * m.cast<typename T::Scalar>());
    } else {
      if (m.size() != 1) throw ValidationError("convolve: scalar function against matrix measure");
      return T(x * m(0, 0));
    }
  };
  std::vector<T> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    T acc = mul(g[i], l.atom0);
    for (std::size_t k = 0; k < i; ++k) acc += mul(g[i - 1 - k], l.mass[k]);
    out[i] = acc;
  }
  return SampledFunction<T>(g.grid, std::move(out));
}

// (a * b)(t_i) = sum_{j<i} dt/2 (a_{i-j} b_j + a_{i-1-j} b_{j+1}): the trapezoid
// rule on each cell of s -> a(t_i - s) b(s), symmetric in a and b for scalars.
template <class T>
SampledFunction<T> convolve(const SampledFunction<T>& a, const SampledFunction<T>& b) {
  if (!(a.grid == b.grid)) throw ValidationError("convolve: grid mismatch");
  const double h = 0.5 * a.grid.dt();
  std::vector<T> out(b.size());
  out[0] = T(detail::zero_like(a[0]) * detail::zero_like(b[0]));
  for (std::size_t i = 1; i < b.size(); ++i) {
    T acc = T(a[i] * b[0]);
    for (std::size_t j = 1; j < i; ++j) acc += T(a[i - j] * b[j] * 2.0);
    acc += T(a[0] * b[i]);
    out[i] = T(acc * h);
  }
  return SampledFunction<T>(b.grid, std::move(out));
}

// Nodal residual (K * R)(t_i) + R(t_i) - K(t_i) of a scalar resolvent, with
// K * R by the left-endpoint rule with exact kernel cell integrals. K(t_0)
// is the first-cell mean when K is singular.
inline RealFunction second_kind_residual(const KernelMoments& k, const MatrixFunction& r) {
  std::vector<double> rv(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) rv[i] = r.values[i](0, 0);
  const auto kr = convolve(k, RealFunction(r.grid, rv));
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = kr[i] + rv[i] - k.nodes[i];
  return RealFunction(r.grid, std::move(out));
}

// Integrated residual int_0^{t_i} (K * R + R - K) of a scalar resolvent:
// (K * R1)(t_i) + R1(t_i) - K1(t_i) with R1, K1 the running integrals, and
// K * R1 by product-trapezoid weights on exact kernel moments.
inline RealFunction second_kind_integrated_residual(const KernelMoments& k, const MatrixFunction& r) {
  const std::size_t n = r.size();
  std::vector<double> r1(n, 0.0), k1(n, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    r1[j + 1] = r1[j] + r.cell_integral(j)(0, 0);
    k1[j + 1] = k1[j] + k.m1[j];
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t q = 0; q < i; ++q) acc += k.mu[q] * r1[i - q - 1] + (k.m1[q] - k.mu[q]) * r1[i - q];
    out[i] = acc + r1[i] - k1[i];
  }
  return RealFunction(r.grid, std::move(out));
}

// (K * L)(t_i) - 1 with exact kernel cell integrals against the cell masses of L.
inline RealFunction first_kind_residual(const KernelMoments& k, const MeasureRepr& l) {
  const std::size_t n = k.nodes.size();
  const double dt = k.grid.dt();
  const double atom = l.atom0(0, 0);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    double s = atom * k.nodes[i];
    for (std::size_t q = 0; q < i; ++q) s += l.mass[q](0, 0) / dt * k.m1[i - 1 - q];
    out[i] = s - 1.0;
  }
  return RealFunction(k.grid, std::move(out));
}

// Integrated first-kind residual ((K * L) * 1)(t_i) - t_i, i.e. (K1 * L)(t_i) - t_i
// with K1 the running integral of K, averaged over each cell by the trapezoid rule.
inline RealFunction first_kind_integrated_residual(const KernelMoments& k, const MeasureRepr& l) {
  const std::size_t n = k.nodes.size();
  std::vector<double> k1(n, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j) k1[j + 1] = k1[j] + k.m1[j];
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    double s = l.atom0(0, 0) * k1[i];
    for (std::size_t q = 0; q < i; ++q) s += l.mass[q](0, 0) * 0.5 * (k1[i - 1 - q] + k1[i - q]);
    out[i] = s - k.grid.node(i);
  }
  return RealFunction(k.grid, std::move(out));
}

// (Delta_h K * L)(t_i) = atom K(t_i + h) + sum_{q<i} mass_q mean_{cell}(K(t_i + h - .)),
// h = m dt, for a scalar kernel. Requires kernel moments on a grid reaching t_end + h.
inline RealFunction shifted_kernel_against_l(const KernelMoments& k_ext, const MeasureRepr& l, std::size_t m) {
  const std::size_t n = l.grid.size();
  if (k_ext.nodes.size() < n + m) throw ValidationError("shifted convolution: extended grid too short");
  const double dt = l.grid.dt();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = l.atom0(0, 0) * k_ext.nodes[i + m];
    for (std::size_t q = 0; q < i; ++q) s += l.mass[q](0, 0) / dt * k_ext.m1[i + m - 1 - q];
    out[i] = s;
  }
  return RealFunction(l.grid, std::move(out));
}

} // namespace avl
