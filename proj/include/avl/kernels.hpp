#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "avl/errors.hpp"
#include "avl/grid.hpp"
#include "avl/quadrature.hpp"

namespace avl {

class KernelSpec;

struct ConstantKernel {
  double c;
};
// c * t^(alpha-1) / Gamma(alpha)
struct FractionalKernel {
  double c, alpha;
};
// c * exp(-lambda t)
struct ExponentialKernel {
  double c, lambda;
};
// c * exp(-lambda t) * t^(alpha-1) / Gamma(alpha)
struct GammaKernel {
  double c, alpha, lambda;
};
struct SumKernel {
  std::vector<KernelSpec> terms;
};
struct DiagonalKernel {
  std::vector<KernelSpec> entries;
};

// Symbolic convolution kernel. Scalar variants are the four families of
// power/exponential type plus finite sums; DiagonalKernel stacks scalar
// kernels on the diagonal of a d x d matrix kernel.
class KernelSpec {
public:
  using Variant = std::variant<ConstantKernel, FractionalKernel, ExponentialKernel, GammaKernel,
                               SumKernel, DiagonalKernel>;

  static KernelSpec constant(double c) {
    check_c(c);
    return KernelSpec(ConstantKernel{c});
  }
  static KernelSpec fractional(double c, double alpha) {
    check_c(c);
    check_alpha(alpha);
    return KernelSpec(FractionalKernel{c, alpha});
  }
  static KernelSpec exponential(double c, double lambda) {
    check_c(c);
    check_lambda(lambda);
    return KernelSpec(ExponentialKernel{c, lambda});
  }
  static KernelSpec gamma(double c, double alpha, double lambda) {
    check_c(c);
    check_alpha(alpha);
    check_lambda(lambda);
    return KernelSpec(GammaKernel{c, alpha, lambda});
  }
  static KernelSpec sum(std::vector<KernelSpec> terms) {
    if (terms.empty()) throw ValidationError("kernel: sum needs at least one term");
    for (const auto& t : terms)
      if (!t.is_scalar()) throw ValidationError("kernel: sum entries must be scalar kernels");
    return KernelSpec(SumKernel{std::move(terms)});
  }
  static KernelSpec diagonal(std::vector<KernelSpec> entries) {
    if (entries.empty()) throw ValidationError("kernel: diagonal needs at least one entry");
    for (const auto& e : entries)
      if (!e.is_scalar()) throw ValidationError("kernel: diagonal entries must be scalar kernels");
    return KernelSpec(DiagonalKernel{std::move(entries)});
  }

  const Variant& variant() const { return v_; }
  bool is_scalar() const { return !std::holds_alternative<DiagonalKernel>(v_); }

  // Matrix dimension: 1 for scalar kernels.
  std::size_t dimension() const {
    if (auto* d = std::get_if<DiagonalKernel>(&v_)) return d->entries.size();
    return 1;
  }

  // Diagonal entries for a d-dimensional model; a scalar kernel is repeated.
  std::vector<KernelSpec> diagonal_entries(std::size_t d) const {
    if (auto* dk = std::get_if<DiagonalKernel>(&v_)) {
      if (dk->entries.size() != d)
        throw ValidationError("kernel: diagonal has " + std::to_string(dk->entries.size()) +
                              " entries, model dimension is " + std::to_string(d));
      return dk->entries;
    }
    return std::vector<KernelSpec>(d, *this);
  }

  std::string describe() const;

private:
  explicit KernelSpec(Variant v) : v_(std::move(v)) {}

  static void check_c(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("kernel: c must be positive");
  }
  static void check_alpha(double a) {
    if (!(a > 0.5)) throw ValidationError("kernel: alpha must exceed 0.5");
    if (!(a <= 1.0)) throw ValidationError("kernel: alpha must not exceed 1");
  }
  static void check_lambda(double l) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("kernel: lambda must be nonnegative");
  }

  Variant v_;
};

inline std::string KernelSpec::describe() const {
  struct V {
    std::string operator()(const ConstantKernel& k) const {
      return "constant(c=" + std::to_string(k.c) + ")";
    }
    std::string operator()(const FractionalKernel& k) const {
      return "fractional(c=" + std::to_string(k.c) + ", alpha=" + std::to_string(k.alpha) + ")";
    }
    std::string operator()(const ExponentialKernel& k) const {
      return "exponential(c=" + std::to_string(k.c) + ", lambda=" + std::to_string(k.lambda) + ")";
    }
    std::string operator()(const GammaKernel& k) const {
      return "gamma(c=" + std::to_string(k.c) + ", alpha=" + std::to_string(k.alpha) +
             ", lambda=" + std::to_string(k.lambda) + ")";
    }
    std::string operator()(const SumKernel& k) const {
      std::string s = "sum(";
      for (std::size_t i = 0; i < k.terms.size(); ++i) s += (i ? ", " : "") + k.terms[i].describe();
      return s + ")";
    }
    std::string operator()(const DiagonalKernel& k) const {
      std::string s = "diag(";
      for (std::size_t i = 0; i < k.entries.size(); ++i)
        s += (i ? ", " : "") + k.entries[i].describe();
      return s + ")";
    }
  };
  return std::visit(V{}, v_);
}

// Every scalar family is a sum of terms c * exp(-lambda t) t^(alpha-1) / Gamma(alpha).
struct GammaTerm {
  double c, alpha, lambda;

  double operator()(double t) const {
    if (alpha == 1.0) return c * std::exp(-lambda * t);
    return c * std::exp(-lambda * t) * std::pow(t, alpha - 1.0) / std::tgamma(alpha);
  }
  bool singular() const { return alpha < 1.0; }
};

inline std::vector<GammaTerm> gamma_terms(const KernelSpec& k) {
  struct V {
    std::vector<GammaTerm> operator()(const ConstantKernel& x) const { return {{x.c, 1.0, 0.0}}; }
    std::vector<GammaTerm> operator()(const FractionalKernel& x) const {
      return {{x.c, x.alpha, 0.0}};
    }
    std::vector<GammaTerm> operator()(const ExponentialKernel& x) const {
      return {{x.c, 1.0, x.lambda}};
    }
    std::vector<GammaTerm> operator()(const GammaKernel& x) const {
      return {{x.c, x.alpha, x.lambda}};
    }
    std::vector<GammaTerm> operator()(const SumKernel& x) const {
      std::vector<GammaTerm> out;
      for (const auto& t : x.terms) {
        auto sub = gamma_terms(t);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      return out;
    }
    std::vector<GammaTerm> operator()(const DiagonalKernel&) const {
      throw ValidationError("kernel: expected a scalar kernel, got a diagonal matrix kernel");
    }
  };
  return std::visit(V{}, k.variant());
}

inline bool singular_at_zero(const KernelSpec& k) {
  if (!k.is_scalar()) {
    for (const auto& e : std::get<DiagonalKernel>(k.variant()).entries)
      if (singular_at_zero(e)) return true;
    return false;
  }
  for (const auto& t : gamma_terms(k))
    if (t.singular()) return true;
  return false;
}

// Pointwise value of a scalar kernel.
inline double eval_kernel(const KernelSpec& k, double t) {
  if (!(t >= 0.0)) throw std::domain_error("kernel evaluated at negative time");
  const auto terms = gamma_terms(k);
  if (t == 0.0 && singular_at_zero(k))
    throw std::domain_error("kernel " + k.describe() + " is singular at t = 0");
  double s = 0.0;
  for (const auto& term : terms) s += term(t);
  return s;
}

namespace detail {

inline double pow_diff(double a, double b, double p) {
  // b^p - a^p for 0 <= a < b, accurate when b - a << a
  if (a == 0.0) return std::pow(b, p);
  return std::pow(a, p) * std::expm1(p * std::log1p((b - a) / a));
}

// Integral of one term over [a, b].
inline double term_integral(const GammaTerm& g, double a, double b) {
  if (b <= a) return 0.0;
  if (g.lambda == 0.0) return g.c * pow_diff(a, b, g.alpha) / std::tgamma(g.alpha + 1.0);
  if (g.alpha == 1.0) return g.c * std::exp(-g.lambda * a) * (-std::expm1(-g.lambda * (b - a))) / g.lambda;
  if (a == 0.0)
    return quad::endpoint_singular([&](double x, double) { return x > 0.0 ? g(x) : 0.0; }, a, b);
  return quad::smooth([&](double x) { return g(x); }, a, b);
}

// Integral of term(r) * (r - a) / (b - a) over [a, b].
inline double term_first_moment(const GammaTerm& g, double a, double b) {
  if (b <= a) return 0.0;
  const double h = b - a;
  if (a == 0.0 && g.lambda == 0.0)
    return g.c * g.alpha * std::pow(h, g.alpha) / std::tgamma(g.alpha + 2.0);
  if (g.alpha == 1.0) {
    const double x = g.lambda * h;
    if (x == 0.0) return g.c * h / 2.0;
    double f;  // 1 - e^{-x}(1 + x)
    if (x < 0.1) {
      f = 0.0;
      double term = x;
      for (int k = 2; k < 30; ++k) {
        term *= x / k;
        f += ((k % 2) ? -1.0 : 1.0) * (k - 1) * term;
      }
    } else {
      f = -std::expm1(-x) - x * std::exp(-x);
    }
    return g.c * std::exp(-g.lambda * a) * f / (g.lambda * x);
  }
  if (a == 0.0 && g.singular())
    return quad::endpoint_singular([&](double x, double) { return x > 0.0 ? g(x) * x / h : 0.0; },
                                   a, b);
  return quad::smooth([&](double x) { return g(x) * (x - a) / h; }, a, b);
}

// term_p * term_q is again of gamma type (alpha' = ap + aq - 1 > 0).
inline GammaTerm product_term(const GammaTerm& p, const GammaTerm& q) {
  const double ap = p.alpha + q.alpha - 1.0;
  return {p.c * q.c * std::tgamma(ap) / (std::tgamma(p.alpha) * std::tgamma(q.alpha)), ap,
          p.lambda + q.lambda};
}

// (term_p * term_q)(t), convolution.
inline double term_convolution(const GammaTerm& p, const GammaTerm& q, double t) {
  if (t <= 0.0) return 0.0;
  if (p.lambda == q.lambda)
    return p.c * q.c * std::exp(-p.lambda * t) * std::pow(t, p.alpha + q.alpha - 1.0) /
           std::tgamma(p.alpha + q.alpha);
  if (p.alpha == 1.0 && q.alpha == 1.0)
    return p.c * q.c * (std::exp(-q.lambda * t) - std::exp(-p.lambda * t)) / (p.lambda - q.lambda);
  return quad::endpoint_singular(
      [&](double s, double sc) {
        const double rest = sc > 0.0 ? sc : t - s;
        if (s <= 0.0 || rest <= 0.0) return 0.0;
        return p(rest) * q(s);
      },
      0.0, t);
}

} // namespace detail

// Integral of a scalar kernel over [a, b], 0 <= a <= b.
inline double kernel_integral(const KernelSpec& k, double a, double b) {
  double s = 0.0;
  for (const auto& g : gamma_terms(k)) s += detail::term_integral(g, a, b);
  return s;
}

// Pairwise convolution (K1 * K2)(t) of scalar kernels.
inline double kernel_convolution(const KernelSpec& k1, const KernelSpec& k2, double t) {
  double s = 0.0;
  for (const auto& p : gamma_terms(k1))
    for (const auto& q : gamma_terms(k2)) s += detail::term_convolution(p, q, t);
  return s;
}

// Cell integrals of a scalar kernel on a uniform grid.
//   m1[j] = int_{t_j}^{t_{j+1}} K,   m2[j] = int K^2,
//   mu[j] = int K(s) (s - t_j) / dt ds  (weight of the right endpoint under
//           linear interpolation is m1[j] - mu[j], of the left endpoint mu[j]).
// nodes[i] = K(t_i), with nodes[0] replaced by the first-cell mean m1[0]/dt
// when K is singular at the origin.
struct KernelMoments {
  TimeGrid grid;
  std::vector<double> m1;
  std::vector<double> m2;
  std::vector<double> mu;
  std::vector<double> nodes;
};

inline KernelMoments kernel_moments(const KernelSpec& k, const TimeGrid& g) {
  if (!k.is_scalar()) throw ValidationError("kernel_moments: scalar kernel required");
  const auto terms = gamma_terms(k);
  const std::size_t n = static_cast<std::size_t>(g.n_steps());
  KernelMoments out{g, std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                    std::vector<double>(n + 1)};
  std::vector<GammaTerm> squares;
  for (const auto& p : terms)
    for (const auto& q : terms) squares.push_back(detail::product_term(p, q));

  for (std::size_t j = 0; j < n; ++j) {
    const double a = g.node(j), b = g.node(j + 1);
    double m1 = 0.0, mu = 0.0, m2 = 0.0;
    try {
      for (const auto& t : terms) {
        m1 += detail::term_integral(t, a, b);
        mu += detail::term_first_moment(t, a, b);
      }
      for (const auto& t : squares) m2 += detail::term_integral(t, a, b);
    } catch (const NumericalError& e) {
      throw NumericalError("kernel_moments: cell " + std::to_string(j) + ": " + e.what());
    }
    out.m1[j] = m1;
    out.mu[j] = mu;
    out.m2[j] = m2;
  }
  const bool sing = singular_at_zero(k);
  out.nodes[0] = sing ? out.m1[0] / g.dt() : eval_kernel(k, 0.0);
  for (std::size_t i = 1; i <= n; ++i) out.nodes[i] = eval_kernel(k, g.node(i));
  return out;
}

// Holder-type exponent gamma in (0, 2] of the kernel regularity condition.
inline double holder_exponent_estimate(const KernelSpec& k) {
  double gmin = 2.0;
  for (const auto& t : gamma_terms(k)) gmin = std::min(gmin, t.alpha < 1.0 ? 2.0 * t.alpha - 1.0 : 1.0);
  return gmin;
}

} // namespace avl
