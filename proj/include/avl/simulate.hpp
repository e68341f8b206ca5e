#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avl/errors.hpp"
#include "avl/grid.hpp"
#include "avl/kernels.hpp"
#include "avl/model.hpp"
#include "avl/parallel.hpp"
#include "avl/resolvents.hpp"
#include "avl/riccati.hpp"
#include "avl/rng.hpp"
#include "avl/transform.hpp"

namespace avl {

// Which grid nodes a PathEnsemble keeps: every stride-th node plus the last.
struct StorageSpec {
  std::size_t stride = 1;
  bool terminal_only = false;

  static StorageSpec all() { return {}; }
  static StorageSpec terminal() { return {1, true}; }
  static StorageSpec every(std::size_t k) { return {k, false}; }
};

struct PathEnsemble {
  TimeGrid grid;
  std::size_t n_paths = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::string scheme_tag;
  std::vector<std::size_t> stored_nodes;
  std::vector<double> data;  // [path][stored node][component]
  double psd_clip = 0.0;     // magnitude of clipped covariance eigenvalues (exact OU sampler)

  std::size_t n_stored() const { return stored_nodes.size(); }
  double at(std::size_t path, std::size_t k, std::size_t c) const {
    return data[(path * n_stored() + k) * d + c];
  }
  double& at(std::size_t path, std::size_t k, std::size_t c) { return data[(path * n_stored() + k) * d + c]; }

  bool stores_all_nodes() const { return stored_nodes.size() == grid.size(); }

  // Stored position of grid node i, or throws.
  std::size_t slot_of(std::size_t i) const {
    auto it = std::lower_bound(stored_nodes.begin(), stored_nodes.end(), i);
    if (it == stored_nodes.end() || *it != i) throw std::domain_error("node " + std::to_string(i) + " not stored");
    return static_cast<std::size_t>(it - stored_nodes.begin());
  }

  std::vector<Eigen::VectorXd> path(std::size_t p) const {
    std::vector<Eigen::VectorXd> out(n_stored(), Eigen::VectorXd(static_cast<Eigen::Index>(d)));
    for (std::size_t k = 0; k < n_stored(); ++k)
      for (std::size_t c = 0; c < d; ++c) out[k](static_cast<Eigen::Index>(c)) = at(p, k, c);
    return out;
  }
};

enum class HestonScheme { Euler, InverseGaussian };

inline std::string to_string(HestonScheme s) { return s == HestonScheme::Euler ? "euler" : "inverse-gaussian"; }

inline HestonScheme heston_scheme_from_string(const std::string& s) {
  if (s == "euler") return HestonScheme::Euler;
  if (s == "inverse-gaussian" || s == "ig") return HestonScheme::InverseGaussian;
  throw ValidationError("unknown heston scheme '" + s + "' (expected euler or inverse-gaussian)");
}

struct SimulationOptions {
  StorageSpec storage;
  HestonScheme heston_scheme = HestonScheme::Euler;
  unsigned threads = 0;  // 0: worker_count()
};

namespace detail {

inline std::vector<std::size_t> storage_nodes(const TimeGrid& g, const StorageSpec& s) {
  std::vector<std::size_t> out;
  const std::size_t n = g.size() - 1;
  if (s.terminal_only) return {0, n};
  const std::size_t stride = std::max<std::size_t>(s.stride, 1);
  for (std::size_t i = 0; i <= n; i += stride) out.push_back(i);
  if (out.back() != n) out.push_back(n);
  return out;
}

// Coefficients of dZ = b(x^) dt + sigma(x^) dW with the state-space truncation x^.
struct Dynamics {
  std::size_t d = 1;
  StateSpace space = StateSpace::RealSpace;
  Eigen::MatrixXd B, sigma0;
  Eigen::VectorXd b0;
  std::vector<double> diag_sigma;  // orthant: sigma_i; lifted heston: sigma on coordinate 2
  double r = 0.0, s_perp = 0.0;    // heston: rho sigma and sigma sqrt(1 - rho^2)
  std::vector<bool> truncate;

  explicit Dynamics(const AffineParams& p) : d(p.d), space(p.state_space), B(p.B), b0(p.b0) {
    truncate.assign(d, false);
    diag_sigma.assign(d, 0.0);
    switch (space) {
      case StateSpace::RealSpace:
        sigma0 = diffusion(p, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)));
        break;
      case StateSpace::Orthant:
        for (std::size_t i = 0; i < d; ++i) {
          truncate[i] = true;
          diag_sigma[i] = std::sqrt(p.A[i + 1](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
        }
        break;
      case StateSpace::HestonSpace:
        if (d == 2) {
          truncate[1] = true;
          r = p.A[2](0, 1);
          s_perp = std::sqrt(std::max(p.A[2](1, 1) - r * r, 0.0));
        } else {
          truncate[1] = truncate[2] = true;
          diag_sigma[1] = std::sqrt(p.A[2](1, 1));
        }
        break;
    }
  }

  // x: state, dw: Brownian increments, out: dZ. All arrays of length d.
  void increment(const double* x, const double* dw, double dt, double* out) const {
    double xh[8] = {};
    for (std::size_t i = 0; i < d; ++i) xh[i] = truncate[i] ? std::max(x[i], 0.0) : x[i];
    for (std::size_t i = 0; i < d; ++i) {
      double b = b0(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < d; ++j) b += B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * xh[j];
      out[i] = b * dt;
    }
    switch (space) {
      case StateSpace::RealSpace:
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j)
            out[i] += sigma0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * dw[j];
        break;
      case StateSpace::Orthant:
        for (std::size_t i = 0; i < d; ++i) out[i] += diag_sigma[i] * std::sqrt(xh[i]) * dw[i];
        break;
      case StateSpace::HestonSpace:
        if (d == 2) {
          const double sv = std::sqrt(xh[1]);
          out[0] += sv * dw[0];
          out[1] += sv * (r * dw[0] + s_perp * dw[1]);
        } else {
          out[0] += std::sqrt(xh[2]) * dw[0];
          out[1] += diag_sigma[1] * std::sqrt(xh[1]) * dw[1];
        }
        break;
    }
  }
};

constexpr std::size_t kBlock = 64;

} // namespace detail

// Convolution Euler scheme
//   X(t_i) = X0 + sum_{j<i} (m1_{i-1-j} / dt) [b(X^_j) dt + sigma(X^_j) dW_j]
// with exact kernel cell integrals m1 per component and truncation inside the
// coefficients. Normals are indexed by (seed, path, step), so results do not
// depend on the number of worker threads.
inline PathEnsemble simulate_volterra_euler(const KernelSpec& k, const AffineParams& p, const Eigen::VectorXd& x0,
                                            const TimeGrid& g, std::size_t n_paths, std::uint64_t seed,
                                            const SimulationOptions& opt = {}) {
  require_valid(p);
  const std::size_t d = p.d;
  if (d > 8) throw ValidationError("simulate: dimension above 8 is not supported");
  if (static_cast<std::size_t>(x0.size()) != d) throw ValidationError("simulate: X0 has wrong length");
  if (n_paths == 0) throw ValidationError("simulate: n_paths must be positive");
  const auto entries = k.diagonal_entries(d);
  std::vector<std::vector<double>> w(d);
  std::vector<bool> constant(d);
  std::vector<double> const_w(d);
  for (std::size_t c = 0; c < d; ++c) {
    const auto km = kernel_moments(entries[c], g);
    w[c].resize(km.m1.size());
    for (std::size_t j = 0; j < km.m1.size(); ++j) w[c][j] = km.m1[j] / g.dt();
    constant[c] = std::holds_alternative<ConstantKernel>(entries[c].variant());
    const_w[c] = w[c][0];
  }
  const detail::Dynamics dyn(p);

  PathEnsemble out;
  out.grid = g;
  out.n_paths = n_paths;
  out.d = d;
  out.seed = seed;
  out.scheme_tag = "volterra-euler";
  out.stored_nodes = detail::storage_nodes(g, opt.storage);
  out.data.assign(n_paths * out.n_stored() * d, 0.0);

  const std::size_t n = g.size() - 1;
  const double dt = g.dt(), sdt = std::sqrt(dt);
  const std::size_t n_blocks = (n_paths + detail::kBlock - 1) / detail::kBlock;
  const std::size_t slots = (d + 1) / 2;

  parallel_for(
      n_blocks,
      [&](std::size_t blk) {
        const std::size_t p0 = blk * detail::kBlock;
        const std::size_t np = std::min(detail::kBlock, n_paths - p0);
        constexpr std::size_t P = detail::kBlock;
        std::vector<std::vector<double>> dz(d, std::vector<double>(n * P, 0.0));
        std::vector<double> x(d * P), xs(d), dw(2 * slots), inc(d);
        for (std::size_t q = 0; q < np; ++q)
          for (std::size_t c = 0; c < d; ++c) x[c * P + q] = x0(static_cast<Eigen::Index>(c));
        std::size_t next_store = 0;
        auto store = [&](std::size_t i) {
          if (next_store < out.stored_nodes.size() && out.stored_nodes[next_store] == i) {
            for (std::size_t q = 0; q < np; ++q)
              for (std::size_t c = 0; c < d; ++c) out.at(p0 + q, next_store, c) = x[c * P + q];
            ++next_store;
          }
        };
        store(0);
        std::vector<double> acc(P);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t q = 0; q < np; ++q) {
            for (std::size_t s = 0; s < slots; ++s) {
              const auto z = normal_pair(seed, p0 + q, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(s));
              dw[2 * s] = z[0] * sdt;
              dw[2 * s + 1] = z[1] * sdt;
            }
            for (std::size_t c = 0; c < d; ++c) xs[c] = x[c * P + q];
            dyn.increment(xs.data(), dw.data(), dt, inc.data());
            for (std::size_t c = 0; c < d; ++c) dz[c][i * P + q] = inc[c];
          }
          for (std::size_t c = 0; c < d; ++c) {
            double* xc = &x[c * P];
            const double* dzc = dz[c].data();
            if (constant[c]) {
              const double wc = const_w[c];
              for (std::size_t q = 0; q < P; ++q) xc[q] += wc * dzc[i * P + q];
              continue;
            }
            std::fill(acc.begin(), acc.end(), 0.0);
            const double* wc = w[c].data();
            for (std::size_t j = 0; j <= i; ++j) {
              const double wj = wc[i - j];
              const double* row = dzc + j * P;
              for (std::size_t q = 0; q < P; ++q) acc[q] += wj * row[q];
            }
            const double base = x0(static_cast<Eigen::Index>(c));
            for (std::size_t q = 0; q < P; ++q) xc[q] = base + acc[q];
          }
          store(i + 1);
        }
      },
      opt.threads);
  return out;
}

// Inverse Gaussian draw (Michael, Schucany and Haas) from a standard normal z and a uniform w.
inline double inverse_gaussian(double mean, double shape, double z, double w) {
  const double phi = mean * z * z / (2.0 * shape);
  const double x = mean / (1.0 + phi + std::sqrt(phi * (phi + 2.0)));
  return w * (mean + x) <= mean ? x : mean * mean / x;
}

namespace detail {

// Integrated-variance scheme: with U = int V and Z = int sqrt(V) dW, the
// increment over cell i solves dU_i (1 + kappa Kbar_0) - sigma Kbar_0 dZ_i = a_i,
// where a_i collects the past increments. dZ is Brownian in the clock U, so dU_i
// is a first passage time and has an Inverse Gaussian law.
inline PathEnsemble simulate_heston_ig(const HestonParams& h, const TimeGrid& g, std::size_t n_paths,
                                       std::uint64_t seed, const SimulationOptions& opt) {
  require_valid(h);
  if (!h.kernel.is_scalar()) throw ValidationError("heston: kernel must be scalar");
  const std::size_t n = g.size() - 1;
  const double dt = g.dt();
  const auto km = kernel_moments(h.kernel, g);
  // Q_k = int over cell k of int_0^r K, so Kbar_k dt is the double cell integral at lag k
  std::vector<double> cum(n + 1, 0.0), q(n), kbar(n), w(n);
  for (std::size_t k = 0; k < n; ++k) {
    cum[k + 1] = cum[k] + km.m1[k];
    q[k] = dt * (cum[k] + km.m1[k] - km.mu[k]);
    kbar[k] = (k == 0 ? q[0] : q[k] - q[k - 1]) / dt;
    w[k] = km.m1[k] / dt;
  }
  const double k0 = kbar[0];
  const double rho_perp = std::sqrt(1.0 - h.rho * h.rho);
  const bool noiseless = h.sigma == 0.0;

  PathEnsemble out;
  out.grid = g;
  out.n_paths = n_paths;
  out.d = 2;
  out.seed = seed;
  out.scheme_tag = "heston-inverse-gaussian";
  out.stored_nodes = storage_nodes(g, opt.storage);
  out.data.assign(n_paths * out.n_stored() * 2, 0.0);

  const std::size_t n_blocks = (n_paths + kBlock - 1) / kBlock;
  parallel_for(
      n_blocks,
      [&](std::size_t blk) {
        const std::size_t p0 = blk * kBlock;
        const std::size_t np = std::min(kBlock, n_paths - p0);
        constexpr std::size_t P = kBlock;
        std::vector<double> dy(n * P, 0.0), a(P), vacc(P), logs(P, std::log(h.s0)), v(P, h.v0);
        std::size_t next_store = 0;
        auto store = [&](std::size_t i) {
          if (next_store < out.stored_nodes.size() && out.stored_nodes[next_store] == i) {
            for (std::size_t p = 0; p < np; ++p) {
              out.at(p0 + p, next_store, 0) = logs[p];
              out.at(p0 + p, next_store, 1) = v[p];
            }
            ++next_store;
          }
        };
        store(0);
        for (std::size_t i = 0; i < n; ++i) {
          std::fill(a.begin(), a.end(), h.v0 * dt + h.kappa * h.theta * q[i]);
          for (std::size_t j = 0; j < i; ++j) {
            const double wj = kbar[i - j];
            const double* row = &dy[j * P];
            for (std::size_t p = 0; p < P; ++p) a[p] += wj * row[p];
          }
          for (std::size_t p = 0; p < np; ++p) {
            const auto z = normal_pair(seed, p0 + p, static_cast<std::uint32_t>(i), 0);
            const double ai = std::max(a[p], 0.0);
            double du = 0.0, dz = 0.0;
            if (noiseless) {
              du = ai / (1.0 + h.kappa * k0);
            } else if (ai > 0.0) {
              const double wu = uniform_draw(seed, p0 + p, static_cast<std::uint32_t>(i), 1);
              du = inverse_gaussian(ai / (1.0 + h.kappa * k0), std::pow(ai / (h.sigma * k0), 2), z[0], wu);
              dz = (du * (1.0 + h.kappa * k0) - ai) / (h.sigma * k0);
            }
            dy[i * P + p] = -h.kappa * du + h.sigma * dz;
            logs[p] += -0.5 * du + h.rho * dz + rho_perp * std::sqrt(du) * z[1];
          }
          std::fill(vacc.begin(), vacc.end(), h.v0 + h.kappa * h.theta * cum[i + 1]);
          for (std::size_t j = 0; j <= i; ++j) {
            const double wj = w[i - j];
            const double* row = &dy[j * P];
            for (std::size_t p = 0; p < P; ++p) vacc[p] += wj * row[p];
          }
          std::copy(vacc.begin(), vacc.end(), v.begin());
          store(i + 1);
        }
      },
      opt.threads);
  return out;
}

} // namespace detail

// Volterra Heston paths of (log S, V). The default Euler scheme applies the
// convolution Euler step to (log S, V) with sqrt(V+) diffusion; the Inverse
// Gaussian scheme keeps the integrated variance nonnegative.
inline PathEnsemble simulate_heston(const HestonParams& h, const TimeGrid& g, std::size_t n_paths,
                                    std::uint64_t seed, const SimulationOptions& opt = {}) {
  if (opt.heston_scheme == HestonScheme::InverseGaussian) return detail::simulate_heston_ig(h, g, n_paths, seed, opt);
  require_valid(h);
  Eigen::VectorXd x0(2);
  x0 << std::log(h.s0), h.v0;
  auto out = simulate_volterra_euler(heston_kernel(h), heston_to_affine(h), x0, g, n_paths, seed, opt);
  out.scheme_tag = "heston-euler";
  return out;
}

namespace detail {

// Integral over cell j of K_p K_q for scalar kernels.
inline std::vector<double> cross_m2(const KernelSpec& kp, const KernelSpec& kq, const TimeGrid& g) {
  std::vector<double> out(static_cast<std::size_t>(g.n_steps()), 0.0);
  for (const auto& a : gamma_terms(kp))
    for (const auto& b : gamma_terms(kq)) {
      const auto t = product_term(a, b);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += term_integral(t, g.node(j), g.node(j + 1));
    }
  return out;
}

} // namespace detail

struct GaussianLaw {
  std::vector<Eigen::VectorXd> mean;  // nodes 0..n
  Eigen::MatrixXd cov;                // nodes 1..n stacked, (n d) x (n d)
};

// Mean and covariance of the Volterra OU process on the grid nodes:
// Cov(X_{t_i}, X_{t_j}) = sum over common cells of int E_B(t_i - s) A^0 E_B(t_j - s)^T ds.
inline GaussianLaw ou_gaussian_law(const KernelSpec& k, const AffineParams& p, const Eigen::VectorXd& x0,
                                   const TimeGrid& g) {
  require_valid(p);
  if (p.state_space != StateSpace::RealSpace || !p.gaussian())
    throw ValidationError("exact OU sampling requires a real state space with A^1 = ... = A^d = 0");
  const auto d = static_cast<Eigen::Index>(p.d);
  const std::size_t n = static_cast<std::size_t>(g.n_steps());
  const double dt = g.dt();
  const auto pair = resolvent_pair_b(k, p.B, g);
  const auto entries = k.diagonal_entries(p.d);
  std::vector<KernelMoments> km;
  for (const auto& e : entries) km.push_back(kernel_moments(e, g));
  std::vector<std::vector<std::vector<double>>> m2(p.d, std::vector<std::vector<double>>(p.d));
  for (std::size_t a = 0; a < p.d; ++a)
    for (std::size_t b = 0; b < p.d; ++b) m2[a][b] = detail::cross_m2(entries[a], entries[b], g);

  const Eigen::MatrixXd& a0 = p.A[0];
  std::vector<Eigen::MatrixXd> ebar(n), same(n);
  for (std::size_t j = 0; j < n; ++j) {
    ebar[j] = pair.e_b.cell_integral(j) / dt;
    Eigen::MatrixXd m1d = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd kak(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
      m1d(a, a) = km[static_cast<std::size_t>(a)].m1[j];
      for (Eigen::Index b = 0; b < d; ++b) kak(a, b) = a0(a, b) * m2[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)][j];
    }
    const Eigen::MatrixXd dbar = ebar[j] - m1d / dt;
    same[j] = kak + m1d * a0 * dbar.transpose() + dbar * a0 * m1d + dt * dbar * a0 * dbar.transpose();
  }

  GaussianLaw law;
  const auto mean = unconditional_mean(k, p, x0, g);
  law.mean = mean.values;
  law.cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * d, static_cast<Eigen::Index>(n) * d);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = i; j <= n; ++j) {
      Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
      for (std::size_t q = 0; q < i; ++q) {
        const std::size_t ai = i - 1 - q, bj = j - 1 - q;
        if (ai == bj)
          c += same[ai];
        else
          c += dt * ebar[ai] * a0 * ebar[bj].transpose();
      }
      const auto ri = static_cast<Eigen::Index>(i - 1) * d, rj = static_cast<Eigen::Index>(j - 1) * d;
      law.cov.block(ri, rj, d, d) = c;
      law.cov.block(rj, ri, d, d) = c.transpose();
    }
  return law;
}

// Exact joint Gaussian sampling of the Volterra OU process on the grid nodes.
inline PathEnsemble simulate_ou_exact(const KernelSpec& k, const AffineParams& p, const Eigen::VectorXd& x0,
                                      const TimeGrid& g, std::size_t n_paths, std::uint64_t seed,
                                      const SimulationOptions& opt = {}) {
  const auto law = ou_gaussian_law(k, p, x0, g);
  if (!law.cov.allFinite()) throw NumericalError("exact OU: covariance assembly produced non-finite values");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(law.cov);
  Eigen::VectorXd ev = es.eigenvalues();
  double clip = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) < 0.0) {
      clip = std::max(clip, -ev(i));
      ev(i) = 0.0;
    }
  const Eigen::MatrixXd root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  const std::size_t d = p.d, n = static_cast<std::size_t>(g.n_steps());
  const auto big_n = static_cast<Eigen::Index>(n * d);

  PathEnsemble out;
  out.grid = g;
  out.n_paths = n_paths;
  out.d = d;
  out.seed = seed;
  out.scheme_tag = "ou-exact";
  out.psd_clip = clip;
  out.stored_nodes = detail::storage_nodes(g, opt.storage);
  out.data.assign(n_paths * out.n_stored() * d, 0.0);
  const std::size_t n_blocks = (n_paths + detail::kBlock - 1) / detail::kBlock;
  parallel_for(
      n_blocks,
      [&](std::size_t blk) {
        const std::size_t p0 = blk * detail::kBlock;
        const std::size_t np = std::min(detail::kBlock, n_paths - p0);
        Eigen::VectorXd z(big_n);
        for (std::size_t q = 0; q < np; ++q) {
          for (Eigen::Index m = 0; m < big_n; m += 2) {
            const auto pr = normal_pair(seed, p0 + q, static_cast<std::uint32_t>(m / 2), 0xA5u);
            z(m) = pr[0];
            if (m + 1 < big_n) z(m + 1) = pr[1];
          }
          const Eigen::VectorXd y = root * z;
          for (std::size_t s = 0; s < out.n_stored(); ++s) {
            const std::size_t i = out.stored_nodes[s];
            for (std::size_t c = 0; c < d; ++c) {
              double v = law.mean[i](static_cast<Eigen::Index>(c));
              if (i > 0) v += y(static_cast<Eigen::Index>((i - 1) * d + c));
              out.at(p0 + q, s, c) = v;
            }
          }
        }
      },
      opt.threads);
  return out;
}

struct McEstimate {
  cplx estimate;
  double se_real = 0.0;
  double se_imag = 0.0;
};

// Sample mean of exp(u X_T + (f * X)_T), (f * X)_T = int_0^T f(T - s) X_s ds by the trapezoid rule.
inline McEstimate mc_functional(const PathEnsemble& paths, const TransformInputs& in) {
  const TimeGrid& g = paths.grid;
  if (in.T > g.t_end() * (1.0 + 1e-12)) throw std::domain_error("mc_functional: T beyond the simulated grid");
  const std::size_t it = g.index_of(in.T);
  if (static_cast<std::size_t>(in.u.size()) != paths.d) throw ValidationError("mc_functional: u has wrong length");
  const bool with_f = in.has_f();
  std::vector<std::size_t> slots;
  std::vector<RowC> f_rev;
  if (with_f) {
    for (std::size_t i = 0; i <= it; ++i) slots.push_back(paths.slot_of(i));
    const TimeGrid sub = it > 0 ? TimeGrid(g.node(it), static_cast<int>(it)) : g;
    for (std::size_t i = 0; i <= it; ++i) f_rev.push_back(in.f_at_node(sub, it - i));
  }
  const std::size_t st = paths.slot_of(it);
  const double dt = g.dt();
  std::vector<cplx> values(paths.n_paths);
  for (std::size_t q = 0; q < paths.n_paths; ++q) {
    cplx e = 0.0;
    for (std::size_t c = 0; c < paths.d; ++c) e += in.u(static_cast<Eigen::Index>(c)) * paths.at(q, st, c);
    if (with_f) {
      for (std::size_t i = 0; i <= it; ++i) {
        const double wt = (i == 0 || i == it) ? 0.5 * dt : dt;
        for (std::size_t c = 0; c < paths.d; ++c)
          e += wt * f_rev[i](static_cast<Eigen::Index>(c)) * paths.at(q, slots[i], c);
      }
    }
    values[q] = std::exp(e);
  }
  const double n = static_cast<double>(paths.n_paths);
  cplx sum = 0.0;
  for (const cplx& v : values) sum += v;
  McEstimate out;
  out.estimate = sum / n;
  if (paths.n_paths > 1) {
    double vr = 0.0, vi = 0.0;
    for (const cplx& v : values) {
      const cplx dv = v - out.estimate;
      vr += dv.real() * dv.real();
      vi += dv.imag() * dv.imag();
    }
    out.se_real = std::sqrt(vr / (n - 1.0) / n);
    out.se_imag = std::sqrt(vi / (n - 1.0) / n);
  }
  return out;
}

struct HolderEstimate {
  double exponent = 0.0;
  std::vector<double> lags;
  std::vector<double> statistic;
};

// Log-regression of the mean (over paths) maximal increment against the lag.
inline HolderEstimate holder_diagnostic(const PathEnsemble& paths, std::size_t component = 0,
                                        std::size_t max_lag_steps = 0) {
  if (!paths.stores_all_nodes()) throw ValidationError("holder_diagnostic: paths must store every node");
  const std::size_t n = paths.grid.size() - 1;
  if (max_lag_steps == 0) max_lag_steps = std::max<std::size_t>(n / 8, 2);
  HolderEstimate out;
  for (std::size_t lag = 1; lag <= max_lag_steps && lag < n; lag *= 2) {
    double mean_max = 0.0;
    for (std::size_t q = 0; q < paths.n_paths; ++q) {
      double m = 0.0;
      for (std::size_t i = 0; i + lag <= n; ++i)
        m = std::max(m, std::abs(paths.at(q, i + lag, component) - paths.at(q, i, component)));
      mean_max += m;
    }
    out.lags.push_back(static_cast<double>(lag) * paths.grid.dt());
    out.statistic.push_back(mean_max / static_cast<double>(paths.n_paths));
  }
  if (out.lags.size() < 2) throw ValidationError("holder_diagnostic: need at least two lag levels");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(out.lags.size());
  for (std::size_t s = 0; s < out.lags.size(); ++s) {
    const double x = std::log(out.lags[s]), y = std::log(std::max(out.statistic[s], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.exponent = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return out;
}

} // namespace avl
