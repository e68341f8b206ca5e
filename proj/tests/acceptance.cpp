#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "avl/avl.hpp"
#include "avl/cli.hpp"

using namespace avl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void info(const std::string& what) { notes.push_back("     " + what); }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[192];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

RowC row2(cplx a, cplx b) {
  RowC r(2);
  r << a, b;
  return r;
}

// ---- 1: resolvent identities ----

Outcome resolvent_identities() {
  Outcome o;
  Stopwatch sw;
  const double c = 1.0, a = 0.75, l = 2.0;
  auto ml = [&](double t) { return std::pow(t, a - 1.0) * mittag_leffler(a, a, -c * std::pow(t, a)); };
  struct Row {
    const char* name;
    KernelSpec k;
    std::function<double(double)> closed;
  };
  const std::vector<Row> rows{
      {"constant", KernelSpec::constant(c), [&](double t) { return c * std::exp(-c * t); }},
      {"fractional", KernelSpec::fractional(c, a), [&](double t) { return c * ml(t); }},
      {"exponential", KernelSpec::exponential(c, l), [&](double t) { return c * std::exp(-l * t) * std::exp(-c * t); }},
      {"gamma", KernelSpec::gamma(c, a, l), [&](double t) { return c * std::exp(-l * t) * ml(t); }},
  };
  auto max_abs = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  for (const auto& r : rows) {
    const TimeGrid g1(1.0, 1000), g2(1.0, 2000);
    const auto r1 = resolvent_second_kind(r.k, g1);
    double err = 0.0;
    for (std::size_t i = 1; i < g1.size(); ++i) err = std::max(err, std::abs(r1.values[i](0, 0) - r.closed(g1.node(i))));
    o.check(err <= 2e-3, std::string(r.name) + fmt(": max |R - closed form| = %.3e (tol 2e-3)", err));
    const auto r2 = resolvent_second_kind(r.k, g2);
    const double e1 = max_abs(second_kind_residual(kernel_moments(r.k, g1), r1).values);
    const double e2 = max_abs(second_kind_residual(kernel_moments(r.k, g2), r2).values);
    const double order = std::log2(e1 / e2);
    o.check(order >= 0.9, std::string(r.name) + fmt(": residual K*R + R - K %.3e -> %.3e, order %.2f (need >= 0.9)", e1, e2, order));
    const double i1 = max_abs(second_kind_integrated_residual(kernel_moments(r.k, g1), r1).values);
    const double i2 = max_abs(second_kind_integrated_residual(kernel_moments(r.k, g2), r2).values);
    o.info(std::string(r.name) + fmt(": integrated residual %.3e -> %.3e, order %.2f", i1, i2, std::log2(i1 / i2)));
  }
  const double s = sw.seconds();
  o.check(s < 5.0, fmt("runtime %.2f s (limit 5 s)", s));
  return o;
}

// ---- 2: Mittag-Leffler ----

Outcome mittag_leffler_values() {
  Outcome o;
  double e_exp = 0.0, e_cosh = 0.0;
  for (int j = 0; j <= 3500; ++j) {
    const double x = -30.0 + 0.01 * j;
    e_exp = std::max(e_exp, std::abs(mittag_leffler(1.0, 1.0, x) - std::exp(x)) / std::exp(x));
    const double ref = x >= 0.0 ? std::cosh(std::sqrt(x)) : std::cos(std::sqrt(-x));
    e_cosh = std::max(e_cosh, std::abs(mittag_leffler(2.0, 1.0, x) - ref) / std::max(std::abs(ref), 1e-300));
  }
  o.check(e_exp <= 1e-12, fmt("E_{1,1}(x) vs exp(x) on [-30, 5]: max relative error %.2e", e_exp));
  o.check(e_cosh <= 1e-12, fmt("E_{2,1}(x) vs cosh(sqrt(x)) on [-30, 5]: max relative error %.2e", e_cosh));
  double e0 = 0.0;
  for (double al : {0.55, 0.6, 0.75, 0.9, 1.0, 1.5, 2.0})
    for (double be : {0.6, 0.75, 1.0, 1.5, 2.0, 3.0})
      e0 = std::max(e0, std::abs(mittag_leffler(al, be, 0.0) - 1.0 / boost::math::tgamma(be)));
  o.check(e0 <= 1e-14, fmt("E_{a,b}(0) vs 1/Gamma(b): max error %.2e", e0));
  return o;
}

// ---- 3: classical limit ----

Outcome classical_limit() {
  Outcome o;
  Stopwatch sw;
  const HestonParams h = reference_classical_heston();
  const double T = 1.0;
  const TimeGrid g(T, 1000);
  Eigen::VectorXd x0(2);
  x0 << 0.0, h.v0;
  double psi_err = 0.0, phi_err = 0.0, tr_err = 0.0;
  for (double v : {1.0, 2.0, 0.5}) {
    const auto in = TransformInputs::with_u(row2(cplx(0.0, v), 0.0), T);
    const auto sol = solve_riccati_heston(h, in, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto ref = classical::heston_riccati(cplx(0.0, v), g.node(i), h.kappa, h.theta, h.sigma, h.rho);
      psi_err = std::max(psi_err, std::abs(sol.psi[i](1) - ref.psi));
      phi_err = std::max(phi_err, std::abs(sol.phi[i] - ref.phi));
    }
    const cplx ref_tr = classical::heston_transform(cplx(0.0, v), T, h.v0, h.kappa, h.theta, h.sigma, h.rho);
    tr_err = std::max(tr_err, std::abs(transform_at_zero(x0, sol, heston_to_affine(h), in) - ref_tr));
  }
  o.check(psi_err <= 1e-5, fmt("psi_2 vs classical Heston ODE: max error %.2e (tol 1e-5)", psi_err));
  o.check(phi_err <= 1e-5, fmt("phi vs classical Heston ODE: max error %.2e (tol 1e-5)", phi_err));
  o.check(tr_err <= 1e-4, fmt("transform at u_1 in {i, 2i, i/2}: max error %.2e (tol 1e-4)", tr_err));
  const double s = sw.seconds();
  o.check(s < 10.0, fmt("runtime %.2f s (limit 10 s)", s));
  return o;
}

// ---- 4: sign invariants over a random sweep ----

struct SweepCase {
  KernelSpec kernel = KernelSpec::constant(1.0);
  AffineParams params;
  std::optional<HestonParams> heston;
  TransformInputs in;
  std::string label;
};

KernelSpec random_kernel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> alpha(0.55, 0.95), c(0.5, 2.0), lam(0.1, 3.0);
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: return KernelSpec::constant(c(rng));
    case 1: return KernelSpec::fractional(c(rng), alpha(rng));
    case 2: return KernelSpec::exponential(c(rng), lam(rng));
    default: return KernelSpec::gamma(c(rng), alpha(rng), lam(rng));
  }
}

std::vector<SweepCase> sign_sweep() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * unit(rng); };
  std::vector<SweepCase> out;
  for (int n = 0; n < 25; ++n) {
    SweepCase sc;
    const std::size_t d = 1 + static_cast<std::size_t>(n % 3);
    sc.params = AffineParams::zeros(d, StateSpace::Orthant);
    std::vector<KernelSpec> ks;
    for (std::size_t i = 0; i < d; ++i) ks.push_back(random_kernel(rng));
    sc.kernel = d == 1 ? ks[0] : KernelSpec::diagonal(ks);
    RowC u(static_cast<Eigen::Index>(d)), f(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      sc.params.b0(ii) = uni(0.0, 0.2);
      sc.params.A[i + 1](ii, ii) = std::pow(uni(0.1, 1.0), 2);
      for (std::size_t j = 0; j < d; ++j)
        sc.params.B(ii, static_cast<Eigen::Index>(j)) = i == j ? uni(-2.0, 0.5) : uni(0.0, 0.5);
      u(ii) = cplx(uni(-2.0, 0.0), uni(-10.0, 10.0));
      f(ii) = unit(rng) < 0.5 ? cplx(0.0, 0.0) : cplx(uni(-1.0, 0.0), uni(-2.0, 2.0));
    }
    sc.in = TransformInputs::with_u(u, uni(0.5, 2.0));
    sc.in.f_fn = [f](double) { return f; };
    sc.label = "orthant d=" + std::to_string(d) + " " + sc.kernel.describe();
    out.push_back(std::move(sc));
  }
  for (int n = 0; n < 25; ++n) {
    HestonParams h;
    h.s0 = 1.0;
    h.v0 = uni(0.01, 0.1);
    h.kappa = uni(0.3, 3.0);
    h.theta = uni(0.01, 0.1);
    h.sigma = uni(0.1, 0.8);
    h.rho = uni(-0.9, 0.3);
    h.kernel = random_kernel(rng);
    SweepCase sc;
    sc.heston = h;
    sc.kernel = heston_kernel(h);
    sc.params = heston_to_affine(h);
    const RowC u = row2(cplx(uni(0.0, 1.0), uni(-10.0, 10.0)), cplx(uni(-1.0, 0.0), uni(-2.0, 2.0)));
    const RowC f = row2(0.0, unit(rng) < 0.5 ? cplx(0.0, 0.0) : cplx(uni(-0.5, 0.0), uni(-1.0, 1.0)));
    sc.in = TransformInputs::with_u(u, uni(0.5, 2.0));
    sc.in.f_fn = [f](double) { return f; };
    sc.label = "heston " + h.kernel.describe();
    out.push_back(std::move(sc));
  }
  return out;
}

Outcome sign_invariants(const std::vector<SweepCase>& sweep) {
  Outcome o;
  double worst = -1e300;
  std::size_t blowups = 0, off_hypothesis = 0;
  std::string worst_label;
  for (const auto& sc : sweep) {
    const TimeGrid g(sc.in.T, 400);
    if (!check_sign_conditions(sc.params, sc.in, g).ok) ++off_hypothesis;
    RiccatiOptions opt;
    opt.compute_chi = false;
    const auto sol = solve_riccati(sc.kernel, sc.params, sc.in, g, opt);
    if (!sol.global()) {
      ++blowups;
      continue;
    }
    const std::size_t first = sc.heston ? 1 : 0;
    for (const auto& psi : sol.psi)
      for (Eigen::Index c = static_cast<Eigen::Index>(first); c < psi.size(); ++c)
        if (psi(c).real() > worst) {
          worst = psi(c).real();
          worst_label = sc.label;
        }
  }
  o.check(off_hypothesis == 0, std::to_string(sweep.size()) + " configurations, " + std::to_string(off_hypothesis) +
                                   " outside the sign hypotheses");
  o.check(worst <= 1e-9, fmt("max Re psi over square-root components and nodes: %.3e (tol 1e-9)", worst) +
                             " [" + worst_label + "]");
  o.check(blowups == 0, std::to_string(blowups) + " blow-ups (need 0)");
  return o;
}

// ---- 5: transform vs Monte Carlo ----

Outcome transform_vs_mc() {
  Outcome o;
  const HestonParams h = reference_rough_heston();
  ValidationSettings s;
  s.paths = 100000;
  s.steps = 500;
  s.seed = 42;
  s.scheme = HestonScheme::InverseGaussian;
  Stopwatch sw;
  auto checks = transform_mc_suite(s, h, 1.0);
  const double secs = sw.seconds();
  for (std::size_t i = 0; i < 3; ++i)
    o.check(checks[i].pass, checks[i].name + fmt(" [inverse-gaussian]: z = %.2f (tol 3)", checks[i].value));
  o.check(secs < 120.0, fmt("runtime %.1f s (limit 120 s)", secs));
  s.scheme = HestonScheme::Euler;
  checks = transform_mc_suite(s, h, 1.0);
  for (std::size_t i = 0; i < 3; ++i) o.info(checks[i].name + fmt(" [euler, reference only]: z = %.2f", checks[i].value));
  return o;
}

// ---- 6: Volterra OU exactness ----

Outcome ou_exactness() {
  Outcome o;
  const auto cfg = load_config(std::string(AVL_SOURCE_DIR) + "/configs/volterra_ou.toml");
  const auto& m = *cfg.affine;
  const TimeGrid g(1.0, 10);
  const std::size_t n_paths = 100000;
  const auto law = ou_gaussian_law(m.kernel, m.params, m.x0, g);
  const auto paths = simulate_ou_exact(m.kernel, m.params, m.x0, g, n_paths, 42);
  const std::size_t d = m.params.d, n = static_cast<std::size_t>(g.n_steps()), dim = n * d;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
  for (std::size_t q = 0; q < n_paths; ++q) {
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t c = 0; c < d; ++c) x(static_cast<Eigen::Index>((i - 1) * d + c)) = paths.at(q, i, c);
    mean += x;
  }
  mean /= static_cast<double>(n_paths);
  for (std::size_t q = 0; q < n_paths; ++q) {
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t c = 0; c < d; ++c) x(static_cast<Eigen::Index>((i - 1) * d + c)) = paths.at(q, i, c);
    x -= mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n_paths - 1);
  const double k = 4.0 / std::sqrt(static_cast<double>(n_paths));
  double worst_mean = 0.0, worst_cov = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      const auto r = static_cast<Eigen::Index>((i - 1) * d + c);
      worst_mean = std::max(worst_mean, std::abs(mean(r) - law.mean[i](static_cast<Eigen::Index>(c))) /
                                            (k * std::sqrt(law.cov(r, r))));
    }
  for (Eigen::Index a = 0; a < cov.rows(); ++a)
    for (Eigen::Index b = 0; b < cov.cols(); ++b)
      worst_cov = std::max(worst_cov, std::abs(cov(a, b) - law.cov(a, b)) / (k * std::sqrt(law.cov(a, a) * law.cov(b, b))));
  o.check(worst_mean <= 1.0, fmt("means: worst |m_hat - m| / (4 sqrt(C_ii / n)) = %.3f over %g entries", worst_mean,
                                 static_cast<double>(dim)));
  o.check(worst_cov <= 1.0, fmt("covariances: worst |C_hat - C| / (4 sqrt(C_ii C_jj / n)) = %.3f over %g entries",
                                worst_cov, static_cast<double>(dim * dim)));
  o.info(fmt("n = %g paths, %g nodes", static_cast<double>(n_paths), static_cast<double>(n)) +
         fmt(", eigenvalue clip %.1e", paths.psd_clip));
  return o;
}

// ---- 7: martingality ----

Outcome martingality(const std::vector<SweepCase>& sweep) {
  Outcome o;
  std::size_t used = 0;
  double worst = 0.0;
  for (const auto& sc : sweep) {
    if (!sc.heston || used == 10) continue;
    ++used;
    SimulationOptions so;
    so.storage = StorageSpec::terminal();
    so.heston_scheme = HestonScheme::Euler;
    const auto paths = simulate_heston(*sc.heston, TimeGrid(sc.in.T, 200), 100000, 1000 + used, so);
    double s = 0.0, s2 = 0.0;
    for (std::size_t q = 0; q < paths.n_paths; ++q) {
      const double st = std::exp(paths.at(q, 1, 0));
      s += st;
      s2 += st * st;
    }
    const double n = static_cast<double>(paths.n_paths), m = s / n;
    const double se = std::sqrt((s2 / n - m * m) / n);
    const double z = std::abs(m - sc.heston->s0) / se;
    worst = std::max(worst, z);
    o.check(z <= 3.0, sc.label + fmt(": mean S_T %.5f, se %.1e, z = %.2f", m, se, z));
  }
  o.info(fmt("worst z = %.2f over %g configurations (euler, 200 steps, 1e5 paths)", worst, static_cast<double>(used)));
  return o;
}

// ---- 8: pricing ----

Outcome pricing() {
  Outcome o;
  const std::vector<double> strikes{0.8, 0.9, 1.0, 1.1, 1.2};
  {
    HestonParams h = reference_rough_heston();
    h.sigma = 0.0;
    h.v0 = h.theta = 0.04;
    HestonPricer pricer(h, 1.0);
    const auto calls = pricer.call_prices(strikes);
    double e = 0.0;
    for (std::size_t i = 0; i < strikes.size(); ++i) {
      const double ref = classical::bs_call(h.s0, strikes[i], 1.0, std::sqrt(h.theta));
      e = std::max(e, std::abs(calls[i] - ref) / ref);
    }
    o.check(e <= 1e-6, fmt("sigma = 0 vs Black-Scholes: max relative error %.2e (tol 1e-6)", e));
  }
  {
    const HestonParams h = reference_rough_heston();
    PricingOptions pc, pp;
    pp.contour = 0.3;
    HestonPricer calls(h, 1.0, pc), puts(h, 1.0, pp);
    double e = 0.0;
    for (double k : strikes) e = std::max(e, std::abs(calls.price(k, OptionKind::Call) - puts.price(k, OptionKind::Put) - (h.s0 - k)));
    o.check(e <= 1e-8 * h.s0, fmt("put-call parity (call on Re u = 0.5, put on Re u = 0.3): max error %.2e (tol 1e-8)", e));
  }
  {
    const HestonParams h = reference_rough_heston();
    PricingOptions opt;
    opt.steps = 500;
    HestonPricer pricer(h, 1.0, opt);
    const auto calls = pricer.call_prices(strikes);
    for (auto scheme : {HestonScheme::InverseGaussian, HestonScheme::Euler}) {
      SimulationOptions so;
      so.storage = StorageSpec::terminal();
      so.heston_scheme = scheme;
      const auto paths = simulate_heston(h, TimeGrid(1.0, 500), 100000, 7, so);
      const auto mc = mc_prices(paths, strikes, 1.0);
      double worst = 0.0;
      for (std::size_t i = 0; i < strikes.size(); ++i)
        worst = std::max(worst, std::abs(mc[i][0].price - calls[i]) / mc[i][0].se);
      if (scheme == HestonScheme::InverseGaussian)
        o.check(worst <= 3.0, fmt("Fourier vs MC calls [inverse-gaussian, 1e5 paths]: worst z = %.2f (tol 3)", worst));
      else
        o.info(fmt("Fourier vs MC calls [euler, reference only]: worst z = %.2f", worst));
    }
  }
  {
    const HestonParams h = reference_classical_heston();
    HestonPricer pricer(h, 1.0);
    const auto calls = pricer.call_prices(strikes);
    double e = 0.0;
    for (std::size_t i = 0; i < strikes.size(); ++i) {
      const double ref = classical::heston_call(h.s0, strikes[i], 1.0, h.v0, h.kappa, h.theta, h.sigma, h.rho);
      e = std::max(e, std::abs(calls[i] - ref) / ref);
    }
    o.check(e <= 1e-5, fmt("constant kernel vs classical Heston closed form: max relative error %.2e (tol 1e-5)", e));
  }
  return o;
}

// ---- 9: chi = I^{1-alpha} psi ----

// Riemann-Liouville integral of order b of the piecewise-linear interpolant
// of f, exact on each cell.
std::vector<cplx> rl_integral(const std::vector<cplx>& f, double b, double dt) {
  const std::size_t n = f.size();
  std::vector<cplx> out(n, 0.0);
  const double scale = std::pow(dt, b) / boost::math::tgamma(b + 2.0);
  for (std::size_t m = 1; m < n; ++m) {
    const double md = static_cast<double>(m);
    cplx acc = (std::pow(md - 1.0, b + 1.0) - (md - 1.0 - b) * std::pow(md, b)) * f[0] + f[m];
    for (std::size_t j = 1; j < m; ++j) {
      const double q = static_cast<double>(m - j);
      acc += (std::pow(q + 1.0, b + 1.0) + std::pow(q - 1.0, b + 1.0) - 2.0 * std::pow(q, b + 1.0)) * f[j];
    }
    out[m] = scale * acc;
  }
  return out;
}

Outcome fractional_identity() {
  Outcome o;
  const double a = 0.6;
  HestonParams h = reference_rough_heston();
  h.kernel = KernelSpec::fractional(1.0, a);
  const TimeGrid g(1.0, 500);
  const double tol = 5.0 * std::pow(g.dt(), std::min(a, 1.0 - a));
  double worst = 0.0, worst_price = 0.0;
  for (double v : {0.5, 1.0, 2.0}) {
    const auto sol = solve_riccati_heston(h, TransformInputs::with_u(row2(cplx(0.0, v), 0.0), 1.0), g);
    std::vector<cplx> psi(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) psi[i] = sol.psi[i](1);
    const auto ref = rl_integral(psi, 1.0 - a, g.dt());
    for (std::size_t i = 0; i < g.size(); ++i) {
      worst = std::max(worst, std::abs(sol.chi[i](1) - ref[i]));
      worst_price = std::max(worst_price, std::abs(sol.chi[i](0) - sol.psi[i](0)));
    }
  }
  o.check(worst_price <= 1e-12, fmt("log-price component (kernel 1): max |chi_1 - psi_1| = %.3e", worst_price));
  o.check(worst <= tol, fmt("variance component: max |chi_2 - I^(1-alpha) psi_2| = %.3e (tol 5 dt^min(alpha,1-alpha) = %.3e)", worst, tol));
  return o;
}

// ---- 10: reproducibility across worker counts ----

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome reproducibility() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "avl_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg = std::string(AVL_SOURCE_DIR) + "/configs/";
  struct Job {
    std::string name;
    std::vector<std::string> args;
  };
  auto jobs = [&](const std::string& tag) {
    const auto f = [&](const std::string& n) { return (dir / (n + "_" + tag + ".csv")).string(); };
    return std::vector<Job>{
        {"simulate_ig", {"simulate", "--model", cfg + "rough_heston.toml", "--paths", "500", "--steps", "40",
                         "--out-paths", f("simulate_ig")}},
        {"simulate_euler", {"simulate", "--model", cfg + "rough_heston.toml", "--paths", "500", "--steps", "40",
                            "--scheme", "euler", "--out-paths", f("simulate_euler")}},
        {"simulate_ou", {"simulate", "--model", cfg + "volterra_ou.toml", "--paths", "500", "--steps", "20",
                         "--out-paths", f("simulate_ou")}},
        {"simulate_cir", {"simulate", "--model", cfg + "volterra_cir.json", "--paths", "500", "--steps", "40",
                          "--out-paths", f("simulate_cir")}},
        {"transform", {"transform", "--model", cfg + "rough_heston.toml", "--u-grid", "0:5:12", "--steps", "100",
                       "--out", f("transform")}},
        {"price", {"price", "--model", cfg + "rough_heston.toml", "--strikes", "0.9,1,1.1", "--paths", "2000",
                   "--steps", "50", "--pricing-steps", "200", "--out", f("price")}},
    };
  };
  std::vector<std::vector<std::string>> outputs;
  for (const char* threads : {"1", "2", "8"}) {
    setenv("AVL_THREADS", threads, 1);
    std::vector<std::string> contents;
    for (const auto& job : jobs(threads)) {
      std::vector<std::string> args{"avl"};
      args.insert(args.end(), job.args.begin(), job.args.end());
      std::vector<const char*> argv;
      for (const auto& s : args) argv.push_back(s.c_str());
      std::ostringstream out, err;
      const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
      if (code != 0) o.check(false, job.name + " exited with " + std::to_string(code) + ": " + err.str());
      contents.push_back(slurp(args.back()) + out.str());
    }
    outputs.push_back(std::move(contents));
  }
  unsetenv("AVL_THREADS");
  const auto names = jobs("");
  for (std::size_t j = 0; j < names.size(); ++j) {
    const bool same = outputs[0][j] == outputs[1][j] && outputs[0][j] == outputs[2][j];
    o.check(same && !outputs[0][j].empty(),
            names[j].name + fmt(": %g bytes, identical for 1, 2, 8 workers", static_cast<double>(outputs[0][j].size())));
  }
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const auto sweep = sign_sweep();
  const std::vector<Criterion> criteria{
      {1, "resolvent identities", resolvent_identities},
      {2, "Mittag-Leffler values", mittag_leffler_values},
      {3, "classical limit", classical_limit},
      {4, "sign invariants", [&] { return sign_invariants(sweep); }},
      {5, "transform vs Monte Carlo", transform_vs_mc},
      {6, "Volterra OU exactness", ou_exactness},
      {7, "martingality", [&] { return martingality(sweep); }},
      {8, "pricing", pricing},
      {9, "fractional identity chi = I^(1-alpha) psi", fractional_identity},
      {10, "reproducibility across worker counts", reproducibility},
  };
  std::vector<std::pair<int, bool>> summary;
  for (const auto& c : criteria) {
    Stopwatch sw;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << c.name
              << fmt("  (%.1f s)", sw.seconds()) << "\n";
    for (const auto& n : o.notes) std::cout << "    " << n << "\n";
    std::cout.flush();
    summary.emplace_back(c.id, o.pass);
  }
  std::cout << "\nsummary\n";
  bool all = true;
  for (const auto& [id, pass] : summary) {
    std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "\n";
    all = all && pass;
  }
  return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
