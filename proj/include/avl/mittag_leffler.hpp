#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "avl/errors.hpp"

namespace avl {

namespace detail::ml {

using cplx = std::complex<double>;

inline cplx series(double a, double b, cplx z) {
  cplx sum = 0.0, zk = 1.0;
  for (int k = 0; k < 2000; ++k) {
    const double arg = a * k + b;
    const cplx term = zk / std::tgamma(arg);
    if (!std::isfinite(std::abs(term))) break;
    sum += term;
    if (k > 4 && std::abs(term) <= 1e-17 * std::abs(sum)) break;
    zk *= z;
  }
  return sum;
}

struct ContourParams {
  double mu = 0.0, h = 0.0, n = std::numeric_limits<double>::infinity();
};

inline ContourParams optimal_bounded(double t, double phi_j, double phi_j1, double pj, double qj,
                                     double log_epsilon) {
  const double log_eps = std::log(std::numeric_limits<double>::epsilon());
  const double fac = 1.01;
  const double f_max = std::exp(log_epsilon - log_eps);
  const double sq_j = std::sqrt(phi_j);
  const double threshold = 2.0 * std::sqrt((log_epsilon - log_eps) / t);
  const double sq_j1 = std::min(std::sqrt(phi_j1), threshold - sq_j);
  double sb_j = 0.0, sb_j1 = 0.0, f_bar = 1.0;
  bool adm = false;
  if (pj < 1e-14 && qj < 1e-14) {
    sb_j = sq_j;
    sb_j1 = sq_j1;
    adm = true;
  } else if (pj < 1e-14) {
    sb_j = sq_j;
    const double f_min = sq_j > 0.0 ? fac * std::pow(sq_j / (sq_j1 - sq_j), qj) : fac;
    if (f_min < f_max) {
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fq = std::pow(f_bar, -1.0 / qj);
      sb_j1 = (2.0 * sq_j1 - fq * sq_j) / (2.0 + fq);
      adm = true;
    }
  } else if (qj < 1e-14) {
    sb_j1 = sq_j1;
    const double f_min = fac * std::pow(sq_j1 / (sq_j1 - sq_j), pj);
    if (f_min < f_max) {
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fp = std::pow(f_bar, -1.0 / pj);
      sb_j = (2.0 * sq_j + fp * sq_j1) / (2.0 - fp);
      adm = true;
    }
  } else {
    double f_min = fac * (sq_j + sq_j1) / std::pow(sq_j1 - sq_j, std::max(pj, qj));
    if (f_min < f_max) {
      f_min = std::max(f_min, 1.5);
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fp = std::pow(f_bar, -1.0 / pj);
      const double fq = std::pow(f_bar, -1.0 / qj);
      const double w = -phi_j1 * t / log_epsilon;
      const double den = 2.0 + w - (1.0 + w) * fp + fq;
      sb_j = ((2.0 + w + fq) * sq_j + fp * sq_j1) / den;
      sb_j1 = (-(1.0 + w) * fq * sq_j + (2.0 + w - (1.0 + w) * fp) * sq_j1) / den;
      adm = true;
    }
  }
  ContourParams out;
  if (!adm) return out;
  const double le = log_epsilon - std::log(f_bar);
  const double w = -sb_j1 * sb_j1 * t / le;
  out.mu = std::pow(((1.0 + w) * sb_j + sb_j1) / (2.0 + w), 2);
  out.h = -2.0 * std::numbers::pi / le * (sb_j1 - sb_j) / ((1.0 + w) * sb_j + sb_j1);
  out.n = std::ceil(std::sqrt(1.0 - le / t / out.mu) / out.h);
  return out;
}

inline ContourParams optimal_unbounded(double t, double phi_j, double pj, double log_epsilon) {
  const double sq_j = std::sqrt(phi_j);
  double phibar = phi_j > 0.0 ? phi_j * 1.01 : 0.01;
  double sq_bar = std::sqrt(phibar);
  const double f_min = 1.0, f_max = 10.0, f_tar = 5.0;
  double n = 0.0, a = 0.0, sq_mu = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double phi_t = phibar * t;
    const double lept = log_epsilon / phi_t;
    n = std::ceil(phi_t / std::numbers::pi * (1.0 - 1.5 * lept + std::sqrt(1.0 - 2.0 * lept)));
    a = std::numbers::pi * n / phi_t;
    sq_mu = sq_bar * std::abs(4.0 - a) / std::abs(7.0 - std::sqrt(1.0 + 12.0 * a));
    const double fbar = std::pow((sq_bar - sq_j) / sq_mu, -pj);
    if (pj < 1e-14 || (f_min < fbar && fbar < f_max)) break;
    sq_bar = std::pow(f_tar, -1.0 / pj) * sq_mu + sq_j;
    phibar = sq_bar * sq_bar;
  }
  ContourParams out;
  out.mu = sq_mu * sq_mu;
  out.h = (-3.0 * a - 2.0 + 2.0 * std::sqrt(1.0 + 12.0 * a)) / (4.0 - a) / n;
  out.n = n;
  const double log_eps = std::log(std::numeric_limits<double>::epsilon());
  const double threshold = (log_epsilon - log_eps) / t;
  if (out.mu > threshold) {
    const double q = std::abs(pj) < 1e-14 ? 0.0 : std::pow(f_tar, -1.0 / pj) * std::sqrt(out.mu);
    const double pb = std::pow(q + sq_j, 2);
    if (pb < threshold) {
      const double w = std::sqrt(log_eps / (log_eps - log_epsilon));
      const double u = std::sqrt(-pb * t / log_eps);
      out.mu = threshold;
      out.n = std::ceil(w * log_epsilon / 2.0 / std::numbers::pi / (u * w - 1.0));
      out.h = std::sqrt(log_eps / (log_eps - log_epsilon)) / out.n;
    } else {
      out.n = std::numeric_limits<double>::infinity();
      out.h = 0.0;
    }
  }
  return out;
}

// Inverse Laplace transform of s^(a-b)/(s^a - z) at t = 1 on an optimal
// parabolic contour, plus residues of the poles left of the contour.
inline cplx laplace_inversion(double a, double b, cplx z) {
  const double pi = std::numbers::pi;
  double log_epsilon = std::log(1e-15);
  const double t = 1.0;
  const double theta = std::arg(z);
  const int kmin = static_cast<int>(std::ceil(-a / 2.0 - theta / (2.0 * pi)));
  const int kmax = static_cast<int>(std::floor(a / 2.0 - theta / (2.0 * pi)));
  struct Pole {
    cplx s;
    double phi;
  };
  std::vector<Pole> poles;
  for (int k = kmin; k <= kmax; ++k) {
    const cplx s = std::pow(std::abs(z), 1.0 / a) * std::exp(cplx(0.0, (theta + 2.0 * k * pi) / a));
    const double phi = (s.real() + std::abs(s)) / 2.0;
    if (phi > 1e-15) poles.push_back({s, phi});
  }
  std::sort(poles.begin(), poles.end(), [](const Pole& x, const Pole& y) { return x.phi < y.phi; });
  std::vector<cplx> s_star{0.0};
  std::vector<double> phi_star{0.0};
  for (const auto& p : poles) {
    s_star.push_back(p.s);
    phi_star.push_back(p.phi);
  }
  const std::size_t j1 = s_star.size();
  std::vector<double> p(j1), q(j1);
  p[0] = std::max(0.0, -2.0 * (a - b + 1.0));
  for (std::size_t j = 1; j < j1; ++j) p[j] = 1.0;
  for (std::size_t j = 0; j + 1 < j1; ++j) q[j] = 1.0;
  q[j1 - 1] = std::numeric_limits<double>::infinity();
  phi_star.push_back(std::numeric_limits<double>::infinity());

  const double log_eps = std::log(std::numeric_limits<double>::epsilon());
  std::vector<std::size_t> regions;
  for (std::size_t j = 0; j < j1; ++j)
    if (phi_star[j] < (log_epsilon - log_eps) / t && phi_star[j] < phi_star[j + 1])
      regions.push_back(j);
  if (regions.empty()) throw NumericalError("mittag_leffler: no admissible contour region");

  std::vector<ContourParams> params(j1);
  for (int attempt = 0; attempt < 20; ++attempt) {
    double nmin = std::numeric_limits<double>::infinity();
    for (std::size_t j : regions) {
      params[j] = j + 1 < j1 ? optimal_bounded(t, phi_star[j], phi_star[j + 1], p[j], q[j], log_epsilon)
                             : optimal_unbounded(t, phi_star[j], p[j], log_epsilon);
      nmin = std::min(nmin, params[j].n);
    }
    if (nmin <= 200) break;
    log_epsilon += std::log(10.0);
  }
  std::size_t best = regions.front();
  for (std::size_t j : regions)
    if (params[j].n < params[best].n) best = j;
  const auto& cp = params[best];
  if (!std::isfinite(cp.n)) throw NumericalError("mittag_leffler: contour selection failed");

  const int n = static_cast<int>(cp.n);
  cplx integral = 0.0;
  for (int k = -n; k <= n; ++k) {
    const double u = cp.h * k;
    const cplx s = cp.mu * std::pow(cplx(1.0, u), 2);
    const cplx ds = cplx(-2.0 * cp.mu * u, 2.0 * cp.mu);
    const cplx f = std::pow(s, a - b) / (std::pow(s, a) - z) * ds;
    integral += std::exp(s * t) * f;
  }
  integral *= cp.h / (2.0 * pi * cplx(0.0, 1.0));
  cplx residues = 0.0;
  for (std::size_t j = best + 1; j < j1; ++j)
    residues += std::pow(s_star[j], 1.0 - b) * std::exp(t * s_star[j]) / a;
  return integral + residues;
}

} // namespace detail::ml

// Two-parameter Mittag-Leffler function E_{a,b}(z) = sum_n z^n / Gamma(a n + b).
inline std::complex<double> mittag_leffler(double alpha, double beta, std::complex<double> z) {
  using cplx = std::complex<double>;
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw ValidationError("mittag_leffler: alpha and beta must be positive");
  if (z == cplx(0.0)) return 1.0 / std::tgamma(beta);
  if (alpha == 1.0 && beta == 1.0) return std::exp(z);
  if (alpha == 1.0 && beta == 2.0) {
    if (z.imag() == 0.0) return std::expm1(z.real()) / z.real();
    return (std::exp(z) - 1.0) / z;
  }
  if (alpha == 2.0 && beta == 1.0) {
    if (z.imag() == 0.0)
      return z.real() >= 0.0 ? std::cosh(std::sqrt(z.real())) : std::cos(std::sqrt(-z.real()));
    return std::cosh(std::sqrt(z));
  }
  if (alpha == 2.0 && beta == 2.0) {
    if (z.imag() == 0.0) {
      const double x = z.real();
      return x >= 0.0 ? std::sinh(std::sqrt(x)) / std::sqrt(x) : std::sin(std::sqrt(-x)) / std::sqrt(-x);
    }
    const cplx r = std::sqrt(z);
    return std::sinh(r) / r;
  }
  const double r = std::abs(z);
  const bool real_nonneg = z.imag() == 0.0 && z.real() > 0.0;
  if (r <= 1.0 || (real_nonneg && r <= 10.0)) return detail::ml::series(alpha, beta, z);
  cplx e = detail::ml::laplace_inversion(alpha, beta, z);
  if (z.imag() == 0.0) e = e.real();
  return e;
}

inline double mittag_leffler(double alpha, double beta, double x) {
  return mittag_leffler(alpha, beta, std::complex<double>(x, 0.0)).real();
}

} // namespace avl
