#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "avl/errors.hpp"
#include "avl/kernels.hpp"
#include "avl/sampled.hpp"

namespace avl {

enum class StateSpace { RealSpace, Orthant, HestonSpace };

inline std::string to_string(StateSpace s) {
  switch (s) {
    case StateSpace::RealSpace: return "real";
    case StateSpace::Orthant: return "orthant";
    case StateSpace::HestonSpace: return "heston";
  }
  return "unknown";
}

inline StateSpace state_space_from_string(const std::string& s) {
  if (s == "real") return StateSpace::RealSpace;
  if (s == "orthant") return StateSpace::Orthant;
  if (s == "heston") return StateSpace::HestonSpace;
  throw ValidationError("unknown state space '" + s + "' (expected real, orthant or heston)");
}

// Affine characteristics a(x) = A^0 + sum_i x_i A^i and b(x) = b0 + B x.
struct AffineParams {
  std::size_t d = 1;
  std::vector<Eigen::MatrixXd> A;  // A^0 .. A^d
  Eigen::VectorXd b0;
  Eigen::MatrixXd B;
  StateSpace state_space = StateSpace::RealSpace;
  // Square root of A^0 used by the RealSpace diffusion; Cholesky-type root when empty.
  Eigen::MatrixXd sigma0;

  static AffineParams zeros(std::size_t d, StateSpace s) {
    AffineParams p;
    p.d = d;
    p.A.assign(d + 1, Eigen::MatrixXd::Zero(d, d));
    p.b0 = Eigen::VectorXd::Zero(d);
    p.B = Eigen::MatrixXd::Zero(d, d);
    p.state_space = s;
    return p;
  }

  bool gaussian() const {
    for (std::size_t i = 1; i < A.size(); ++i)
      if (A[i].cwiseAbs().maxCoeff() > 0.0) return false;
    return true;
  }
};

struct HestonParams {
  double s0 = 1.0;
  double v0 = 0.04;
  double kappa = 0.0;
  double theta = 0.0;
  double sigma = 0.0;
  double rho = 0.0;
  KernelSpec kernel = KernelSpec::constant(1.0);
};

// Exhaustive list of invariant violations; empty means valid.
inline std::vector<std::string> validate(const AffineParams& p) {
  std::vector<std::string> v;
  const auto d = static_cast<Eigen::Index>(p.d);
  if (p.d == 0) return {"dimension must be positive"};
  if (p.A.size() != p.d + 1)
    v.push_back("expected " + std::to_string(p.d + 1) + " matrices A^0..A^d, got " + std::to_string(p.A.size()));
  for (std::size_t i = 0; i < p.A.size(); ++i) {
    const auto& a = p.A[i];
    if (a.rows() != d || a.cols() != d) {
      v.push_back("A^" + std::to_string(i) + " has wrong shape");
      continue;
    }
    if (!a.allFinite()) v.push_back("A^" + std::to_string(i) + " has non-finite entries");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      v.push_back("A^" + std::to_string(i) + " must be symmetric");
  }
  if (p.b0.size() != d) v.push_back("b0 has wrong length");
  if (p.B.rows() != d || p.B.cols() != d) v.push_back("B has wrong shape");
  if (!v.empty()) return v;

  auto psd = [](const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    return es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
  };
  switch (p.state_space) {
    case StateSpace::RealSpace:
      if (!psd(p.A[0])) v.push_back("a(x) must be psd on E: A^0 is not positive semidefinite");
      for (std::size_t i = 1; i <= p.d; ++i)
        if (p.A[i].cwiseAbs().maxCoeff() > 0.0)
          v.push_back("real state space requires A^" + std::to_string(i) + " = 0");
      if (p.sigma0.size() != 0) {
        if (p.sigma0.rows() != d || p.sigma0.cols() != d)
          v.push_back("sigma0 has wrong shape");
        else if ((p.sigma0 * p.sigma0.transpose() - p.A[0]).cwiseAbs().maxCoeff() > 1e-10)
          v.push_back("sigma0 * sigma0^T must equal A^0");
      }
      break;
    case StateSpace::Orthant:
      if (p.A[0].cwiseAbs().maxCoeff() > 0.0) v.push_back("orthant requires A^0 = 0");
      for (std::size_t i = 1; i <= p.d; ++i) {
        Eigen::MatrixXd off = p.A[i];
        const double s2 = off(i - 1, i - 1);
        off(i - 1, i - 1) = 0.0;
        if (off.cwiseAbs().maxCoeff() > 0.0)
          v.push_back("orthant requires A^" + std::to_string(i) + " to vanish except entry (" +
                      std::to_string(i) + "," + std::to_string(i) + ")");
        if (!(s2 > 0.0))
          v.push_back("orthant requires sigma_" + std::to_string(i) + "^2 > 0 in A^" + std::to_string(i));
      }
      for (Eigen::Index i = 0; i < d; ++i)
        if (p.b0(i) < 0.0) v.push_back("b0 must be nonnegative (component " + std::to_string(i + 1) + ")");
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          if (i != j && p.B(i, j) < 0.0)
            v.push_back("off-diagonal B negative (entry " + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
      break;
    case StateSpace::HestonSpace: {
      if (p.d == 3) {
        Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(3, 3), a3 = Eigen::MatrixXd::Zero(3, 3);
        a2(1, 1) = p.A[2](1, 1);
        a3(0, 0) = 1.0;
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 3);
        b(0, 2) = -0.5;
        b(1, 1) = p.B(1, 1);
        b(2, 1) = 1.0;
        if (p.A[0].cwiseAbs().maxCoeff() > 0.0 || p.A[1].cwiseAbs().maxCoeff() > 0.0 ||
            (p.A[2] - a2).cwiseAbs().maxCoeff() > 0.0 || a2(1, 1) < 0.0 || (p.A[3] - a3).cwiseAbs().maxCoeff() > 0.0)
          v.push_back("lifted heston requires A^2 = diag(0, sigma^2, 0), A^3 = diag(1, 0, 0), A^0 = A^1 = 0");
        if ((p.B - b).cwiseAbs().maxCoeff() > 0.0 || p.B(1, 1) > 0.0)
          v.push_back("lifted heston requires B = [[0, 0, -1/2], [0, -kappa, 0], [0, 1, 0]]");
        if (p.b0(0) != 0.0 || p.b0(1) < 0.0 || p.b0(2) != 0.0)
          v.push_back("lifted heston requires b0 = (0, kappa theta >= 0, 0)");
        break;
      }
      if (p.d != 2) {
        v.push_back("heston state space requires d = 2 (or d = 3 for the lifted variant)");
        break;
      }
      if (p.A[0].cwiseAbs().maxCoeff() > 0.0 || p.A[1].cwiseAbs().maxCoeff() > 0.0)
        v.push_back("heston requires A^0 = A^1 = 0");
      const auto& a2 = p.A[2];
      if (std::abs(a2(0, 0) - 1.0) > 1e-14) v.push_back("heston requires A^2(1,1) = 1");
      if (a2(1, 1) < 0.0 || a2(0, 1) * a2(0, 1) > a2(1, 1) * (1.0 + 1e-12) + 1e-15)
        v.push_back("heston requires |rho| <= 1 in A^2");
      if (std::abs(p.b0(0)) > 0.0 || p.b0(1) < 0.0) v.push_back("heston requires b0 = (0, kappa theta >= 0)");
      if (p.B(0, 0) != 0.0 || p.B(1, 0) != 0.0 || p.B(0, 1) != -0.5 || p.B(1, 1) > 0.0)
        v.push_back("heston requires B = [[0, -1/2], [0, -kappa]]");
      break;
    }
  }
  return v;
}

inline void require_valid(const AffineParams& p) {
  const auto v = validate(p);
  if (v.empty()) return;
  std::string msg = "invalid affine parameters:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw ValidationError(msg);
}

inline std::vector<std::string> validate(const HestonParams& h) {
  std::vector<std::string> v;
  if (!(h.s0 > 0.0)) v.push_back("s0 must be positive");
  if (!(h.v0 >= 0.0)) v.push_back("v0 must be nonnegative");
  if (!(h.kappa >= 0.0)) v.push_back("kappa must be nonnegative");
  if (!(h.theta >= 0.0)) v.push_back("theta must be nonnegative");
  if (!(h.sigma >= 0.0)) v.push_back("sigma must be nonnegative");
  if (!(h.rho >= -1.0 && h.rho <= 1.0)) v.push_back("rho must lie in [-1, 1]");
  if (!h.kernel.is_scalar()) v.push_back("heston kernel must be scalar");
  return v;
}

inline void require_valid(const HestonParams& h) {
  const auto v = validate(h);
  if (v.empty()) return;
  std::string msg = "invalid heston parameters:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw ValidationError(msg);
}

// State (log S, V) with kernel diag(1, K).
inline AffineParams heston_to_affine(const HestonParams& h) {
  require_valid(h);
  auto p = AffineParams::zeros(2, StateSpace::HestonSpace);
  p.A[2] << 1.0, h.rho * h.sigma, h.rho * h.sigma, h.sigma * h.sigma;
  p.b0 << 0.0, h.kappa * h.theta;
  p.B << 0.0, -0.5, 0.0, -h.kappa;
  return p;
}

inline KernelSpec heston_kernel(const HestonParams& h) {
  return KernelSpec::diagonal({KernelSpec::constant(1.0), h.kernel});
}

// Three-factor variant with kernel diag(1, 1, K~).
inline AffineParams lifted_heston_to_affine(const HestonParams& h) {
  require_valid(h);
  auto p = AffineParams::zeros(3, StateSpace::HestonSpace);
  p.A[2](1, 1) = h.sigma * h.sigma;
  p.A[3](0, 0) = 1.0;
  p.b0 << 0.0, h.kappa * h.theta, 0.0;
  p.B << 0.0, 0.0, -0.5, 0.0, -h.kappa, 0.0, 0.0, 1.0, 0.0;
  return p;
}

inline KernelSpec lifted_heston_kernel(const KernelSpec& k_tilde) {
  if (!k_tilde.is_scalar()) throw ValidationError("lifted heston: second kernel must be scalar");
  return KernelSpec::diagonal({KernelSpec::constant(1.0), KernelSpec::constant(1.0), k_tilde});
}

struct AffineValue {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

inline AffineValue evaluate_affine(const AffineParams& p, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != p.d) throw ValidationError("evaluate_affine: x has wrong length");
  AffineValue out{p.A[0], p.b0 + p.B * x};
  for (std::size_t i = 1; i <= p.d; ++i) out.a += x(static_cast<Eigen::Index>(i - 1)) * p.A[i];
  return out;
}

// A(u)_i = u A^i u^T with the ordinary (non-conjugate) transpose.
inline Eigen::RowVectorXcd quadratic_form(const AffineParams& p, const Eigen::RowVectorXcd& u) {
  Eigen::RowVectorXcd out(static_cast<Eigen::Index>(p.d));
  for (std::size_t i = 1; i <= p.d; ++i)
    out(static_cast<Eigen::Index>(i - 1)) = (u * p.A[i].cast<cplx>() * u.transpose())(0, 0);
  return out;
}

// Diffusion matrix sigma(x) with sigma sigma^T = a(x), coordinates truncated at 0 where required.
inline Eigen::MatrixXd diffusion(const AffineParams& p, const Eigen::VectorXd& x) {
  const auto d = static_cast<Eigen::Index>(p.d);
  switch (p.state_space) {
    case StateSpace::Orthant: {
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
      for (Eigen::Index i = 0; i < d; ++i)
        s(i, i) = std::sqrt(p.A[static_cast<std::size_t>(i + 1)](i, i) * std::max(x(i), 0.0));
      return s;
    }
    case StateSpace::RealSpace: {
      if (p.sigma0.size() != 0) return p.sigma0;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.A[0]);
      Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    }
    case StateSpace::HestonSpace: {
      Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
      if (p.d == 3) {
        l(0, 0) = std::sqrt(std::max(x(2), 0.0));
        l(1, 1) = std::sqrt(p.A[2](1, 1) * std::max(x(1), 0.0));
        return l;
      }
      const double r = p.A[2](0, 1), s2 = p.A[2](1, 1);
      l(0, 0) = 1.0;
      l(1, 0) = r;
      l(1, 1) = std::sqrt(std::max(s2 - r * r, 0.0));
      return std::sqrt(std::max(x(1), 0.0)) * l;
    }
  }
  return {};
}

} // namespace avl
