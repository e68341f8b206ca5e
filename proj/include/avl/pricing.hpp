#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include "avl/classical.hpp"
#include "avl/errors.hpp"
#include "avl/model.hpp"
#include "avl/parallel.hpp"
#include "avl/riccati.hpp"
#include "avl/simulate.hpp"
#include "avl/transform.hpp"

namespace avl {

enum class OptionKind { Call, Put };

struct PricingOptions {
  int steps = 1000;             // Riccati grid on [0, T]
  double contour = 0.5;         // Re u_1 of the inversion contour, inside (0, 1)
  double tail_tolerance = 1e-10;
  double panel_tolerance = 1e-12;
  unsigned threads = 0;
};

// E[exp(u log(S_T / S_0))] for u = (contour + i v, 0) by the Riccati-Volterra
// solver, cached by v; the frequency quadrature is shared by all strikes.
class HestonPricer {
public:
  HestonPricer(HestonParams h, double maturity, PricingOptions opt = {})
      : h_(std::move(h)), t_(maturity), opt_(opt), grid_(checked_maturity(maturity), opt.steps) {
    require_valid(h_);
    if (!(opt_.contour > 0.0 && opt_.contour < 1.0))
      throw ValidationError("pricing: contour Re u_1 = " + std::to_string(opt_.contour) +
                            " lies outside (0, 1), where the transform is not guaranteed");
  }

  const HestonParams& params() const { return h_; }
  double maturity() const { return t_; }

  cplx transform(double v) {
    auto it = cache_.find(v);
    if (it != cache_.end()) return it->second;
    const cplx val = evaluate(v);
    cache_.emplace(v, val);
    return val;
  }

  std::vector<double> call_prices(const std::vector<double>& strikes) {
    for (double k : strikes)
      if (!(k > 0.0)) throw ValidationError("pricing: strikes must be positive");
    if (strikes.empty()) return {};
    build_quadrature(strikes);
    std::vector<double> out;
    for (double k : strikes) out.push_back(call_from_nodes(k));
    return out;
  }

  double call_price(double strike) { return call_prices({strike})[0]; }

  double price(double strike, OptionKind kind) {
    const double c = call_price(strike);
    return kind == OptionKind::Call ? c : c - h_.s0 + strike;
  }

  std::size_t evaluations() const { return cache_.size(); }

private:
  static constexpr int kGauss = 10;
  static constexpr int kMaxRefinements = 4;
  using Gauss = boost::math::quadrature::gauss<double, kGauss>;

  struct Panel {
    double a, b;
    int depth;
  };

  static double checked_maturity(double t) {
    if (!(t > 0.0)) throw ValidationError("pricing: maturity must be positive");
    return t;
  }

  HestonParams h_;
  double t_;
  PricingOptions opt_;
  TimeGrid grid_;
  std::map<double, cplx> cache_;
  std::vector<std::pair<double, double>> nodes_;  // (v, weight)

  // A blow-up report is retried on successively doubled grids.
  cplx evaluate(double v) const {
    RowC u(2);
    u << cplx(opt_.contour, v), 0.0;
    const auto in = TransformInputs::with_u(u, t_);
    RiccatiOptions ropt;
    ropt.compute_chi = false;
    Eigen::VectorXd x0(2);
    x0 << 0.0, h_.v0;
    int steps = opt_.steps;
    for (int attempt = 0; attempt <= kMaxRefinements; ++attempt, steps *= 2) {
      const TimeGrid g = attempt == 0 ? grid_ : TimeGrid(t_, steps);
      const auto sol = solve_riccati_heston(h_, in, g, ropt);
      if (sol.global()) return transform_at_zero(x0, sol, heston_to_affine(h_), in);
    }
    throw NumericalError("pricing: Riccati blow-up on the contour Re u_1 = " + std::to_string(opt_.contour) +
                         " at v = " + std::to_string(v) + " after refining to " + std::to_string(steps / 2) +
                         " steps; try a different damping (contour)");
  }

  // Integrand of S0 E[min(S_T/S0, K/S0)] = (S0/pi) int_0^inf Re[Phi(u) e^{(1-u)k} / (u (1-u))] dv.
  double integrand(double v, cplx phi, double strike) const {
    const double k = std::log(strike / h_.s0);
    const cplx u(opt_.contour, v);
    return h_.s0 / M_PI * std::real(phi * std::exp((1.0 - u) * k) / (u * (1.0 - u)));
  }

  // Gauss-Legendre nodes and weights of a panel; the only place nodes are
  // generated, so cache keys match bitwise.
  static std::vector<std::pair<double, double>> panel_rule(const Panel& p) {
    std::vector<std::pair<double, double>> out;
    const double c = 0.5 * (p.a + p.b), r = 0.5 * (p.b - p.a);
    const auto& xs = Gauss::abscissa();
    const auto& ws = Gauss::weights();
    for (std::size_t j = 0; j < xs.size(); ++j) {
      out.emplace_back(c - r * xs[j], r * ws[j]);
      if (xs[j] != 0.0) out.emplace_back(c + r * xs[j], r * ws[j]);
    }
    return out;
  }

  static std::vector<double> panel_nodes(const Panel& p) {
    std::vector<double> out;
    for (const auto& nw : panel_rule(p)) out.push_back(nw.first);
    return out;
  }

  // Evaluates all missing transform values in parallel; results are
  // independent of the thread count.
  void fill(const std::vector<double>& vs) {
    std::vector<double> missing;
    for (double v : vs)
      if (!cache_.count(v)) missing.push_back(v);
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    std::vector<cplx> vals(missing.size());
    parallel_for(missing.size(), [&](std::size_t i) { vals[i] = evaluate(missing[i]); }, opt_.threads);
    for (std::size_t i = 0; i < missing.size(); ++i) cache_.emplace(missing[i], vals[i]);
  }

  std::vector<double> panel_integrals(const Panel& p, const std::vector<double>& strikes) const {
    std::vector<double> out(strikes.size(), 0.0);
    const auto rule = panel_rule(p);
    for (std::size_t s = 0; s < strikes.size(); ++s)
      for (const auto& [v, w] : rule) out[s] += w * integrand(v, cache_.at(v), strikes[s]);
    return out;
  }

  double panel_peak(const Panel& p, const std::vector<double>& strikes) {
    double m = 0.0;
    for (double v : panel_nodes(p))
      for (double k : strikes) m = std::max(m, std::abs(integrand(v, cache_.at(v), k)));
    return m;
  }

  void build_quadrature(const std::vector<double>& strikes) {
    const double var_scale = std::max({h_.theta, h_.v0, 1e-4}) * t_;
    const double cap = 200.0 / std::sqrt(var_scale);
    const double width0 = std::min(1.0 / std::sqrt(var_scale), cap);
    std::vector<Panel> coarse;
    for (double a = 0.0, w = width0; a < cap; a += w, w *= 2.0) {
      const Panel p{a, std::min(a + w, cap), 0};
      fill(panel_nodes(p));
      coarse.push_back(p);
      if (panel_peak(p, strikes) < opt_.tail_tolerance) break;
    }
    constexpr int max_depth = 14;
    std::vector<Panel> done, work = coarse;
    while (!work.empty()) {
      std::vector<double> need;
      for (const auto& p : work) {
        const double m = 0.5 * (p.a + p.b);
        for (const Panel& half : {Panel{p.a, m, p.depth + 1}, Panel{m, p.b, p.depth + 1}}) {
          const auto ns = panel_nodes(half);
          need.insert(need.end(), ns.begin(), ns.end());
        }
      }
      fill(need);
      std::vector<Panel> next;
      for (const auto& p : work) {
        const double m = 0.5 * (p.a + p.b);
        const Panel l{p.a, m, p.depth + 1}, r{m, p.b, p.depth + 1};
        const auto whole = panel_integrals(p, strikes);
        const auto left = panel_integrals(l, strikes), right = panel_integrals(r, strikes);
        double err = 0.0;
        for (std::size_t s = 0; s < strikes.size(); ++s) err = std::max(err, std::abs(whole[s] - left[s] - right[s]));
        if (err <= opt_.panel_tolerance * std::max(1.0, h_.s0) || p.depth >= max_depth) {
          done.push_back(l);
          done.push_back(r);
        } else {
          next.push_back(l);
          next.push_back(r);
        }
      }
      work = std::move(next);
    }
    std::sort(done.begin(), done.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    nodes_.clear();
    for (const auto& p : done) {
      const auto rule = panel_rule(p);
      nodes_.insert(nodes_.end(), rule.begin(), rule.end());
    }
  }

  double call_from_nodes(double strike) const {
    double covered = 0.0;
    for (const auto& [v, w] : nodes_) covered += w * integrand(v, cache_.at(v), strike);
    return h_.s0 - covered;
  }
};

inline double price_european(const HestonParams& h, double strike, double maturity, OptionKind kind,
                             const PricingOptions& opt = {}) {
  HestonPricer pricer(h, maturity, opt);
  return pricer.price(strike, kind);
}

// Black-Scholes implied volatility by a bracketed root solve.
inline double implied_vol(double price, double s0, double strike, double maturity) {
  if (!(s0 > 0.0 && strike > 0.0 && maturity > 0.0))
    throw ValidationError("implied_vol: s0, strike and maturity must be positive");
  const double lower = std::max(s0 - strike, 0.0);
  const double slack = 1e-12 * s0;
  if (price < lower - slack || price > s0 + slack)
    throw std::domain_error("implied_vol: price " + std::to_string(price) + " outside the no-arbitrage bounds [" +
                            std::to_string(lower) + ", " + std::to_string(s0) + "]");
  if (price <= lower + slack) return 0.0;
  if (price >= s0 - slack) throw std::domain_error("implied_vol: price at the upper bound has no finite volatility");
  auto f = [&](double vol) { return classical::bs_call(s0, strike, maturity, vol) - price; };
  double hi = 1.0;
  while (f(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e3) throw std::domain_error("implied_vol: volatility exceeds 1000");
  }
  std::uintmax_t iters = 200;
  const auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12; };
  const auto r = boost::math::tools::toms748_solve(f, 0.0, hi, f(0.0), f(hi), tol, iters);
  return 0.5 * (r.first + r.second);
}

struct McPrice {
  double price = 0.0;
  double se = 0.0;
};

// Monte Carlo call and put prices from log S values of a Heston ensemble.
inline std::vector<std::array<McPrice, 2>> mc_prices(const PathEnsemble& paths, const std::vector<double>& strikes,
                                                     double maturity) {
  const std::size_t it = paths.grid.index_of(maturity);
  const std::size_t slot = paths.slot_of(it);
  std::vector<std::array<McPrice, 2>> out(strikes.size());
  const double n = static_cast<double>(paths.n_paths);
  for (std::size_t s = 0; s < strikes.size(); ++s) {
    double sc = 0, sc2 = 0, sp = 0, sp2 = 0;
    for (std::size_t q = 0; q < paths.n_paths; ++q) {
      const double st = std::exp(paths.at(q, slot, 0));
      const double c = std::max(st - strikes[s], 0.0), p = std::max(strikes[s] - st, 0.0);
      sc += c;
      sc2 += c * c;
      sp += p;
      sp2 += p * p;
    }
    auto fin = [&](double m1, double m2) {
      McPrice r;
      r.price = m1 / n;
      r.se = n > 1 ? std::sqrt(std::max(0.0, (m2 - n * r.price * r.price) / (n - 1.0)) / n) : 0.0;
      return r;
    };
    out[s] = {fin(sc, sc2), fin(sp, sp2)};
  }
  return out;
}

} // namespace avl
