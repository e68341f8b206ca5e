#include <algorithm>

#include <gtest/gtest.h>

#include "avl/model.hpp"

using namespace avl;

namespace {

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

HestonParams sample_heston() {
  HestonParams h;
  h.s0 = 100.0;
  h.v0 = 0.04;
  h.kappa = 2.0;
  h.theta = 0.04;
  h.sigma = 0.3;
  h.rho = -0.7;
  h.kernel = KernelSpec::fractional(1.0, 0.6);
  return h;
}

}  // namespace

TEST(Validate, CirParametersAreValid) {
  auto p = AffineParams::zeros(1, StateSpace::Orthant);
  p.A[1](0, 0) = 0.09;
  p.b0(0) = 1.0;
  p.B(0, 0) = -2.0;
  EXPECT_TRUE(validate(p).empty());
}

TEST(Validate, NegativeOffDiagonalDrift) {
  auto p = AffineParams::zeros(2, StateSpace::Orthant);
  p.A[1](0, 0) = 1.0;
  p.A[2](1, 1) = 1.0;
  p.B(0, 1) = -0.5;
  const auto v = validate(p);
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(mentions(v, "off-diagonal B negative"));
}

TEST(Validate, OrthantNegativeB0) {
  auto p = AffineParams::zeros(1, StateSpace::Orthant);
  p.A[1](0, 0) = 1.0;
  p.b0(0) = -0.1;
  EXPECT_FALSE(validate(p).empty());
}

TEST(Validate, RealSpaceNeedsPsdA0) {
  auto p = AffineParams::zeros(2, StateSpace::RealSpace);
  p.A[0] << 1.0, 2.0, 2.0, 1.0;
  EXPECT_TRUE(mentions(validate(p), "a(x) must be psd on E"));
  p.A[0] << 1.0, 0.5, 0.5, 1.0;
  EXPECT_TRUE(validate(p).empty());
}

TEST(Validate, NonSymmetricMatrix) {
  auto p = AffineParams::zeros(2, StateSpace::RealSpace);
  p.A[0] << 1.0, 0.1, 0.0, 1.0;
  EXPECT_TRUE(mentions(validate(p), "symmetric"));
  EXPECT_THROW(require_valid(p), ValidationError);
}

TEST(Validate, HestonRanges) {
  auto h = sample_heston();
  EXPECT_TRUE(validate(h).empty());
  h.rho = 1.5;
  EXPECT_FALSE(validate(h).empty());
  h = sample_heston();
  h.sigma = -0.1;
  EXPECT_FALSE(validate(h).empty());
  h = sample_heston();
  h.s0 = 0.0;
  EXPECT_FALSE(validate(h).empty());
  h = sample_heston();
  h.kernel = KernelSpec::diagonal({KernelSpec::constant(1.0), KernelSpec::constant(1.0)});
  EXPECT_FALSE(validate(h).empty());
}

TEST(HestonToAffine, Matrices) {
  auto h = sample_heston();
  const auto p = heston_to_affine(h);
  EXPECT_EQ(p.d, 2u);
  EXPECT_EQ(p.state_space, StateSpace::HestonSpace);
  Eigen::MatrixXd a2(2, 2), b(2, 2);
  a2 << 1.0, -0.21, -0.21, 0.09;
  b << 0.0, -0.5, 0.0, -2.0;
  EXPECT_LT((p.A[2] - a2).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((p.B - b).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(p.b0(0), 0.0, 0.0);
  EXPECT_NEAR(p.b0(1), 0.08, 1e-15);
  EXPECT_EQ(p.A[0].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(p.A[1].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(validate(p).empty());
}

TEST(HestonToAffine, DegenerateCases) {
  auto h = sample_heston();
  h.sigma = 0.0;
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.0, 0.0, 0.0;
  EXPECT_LT((heston_to_affine(h).A[2] - a).cwiseAbs().maxCoeff(), 1e-15);
  h.sigma = 1.0;
  h.rho = 1.0;
  const auto p = heston_to_affine(h);
  a << 1.0, 1.0, 1.0, 1.0;
  EXPECT_LT((p.A[2] - a).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(p.A[2].determinant(), 0.0, 1e-15);
  EXPECT_TRUE(validate(p).empty());
}

TEST(HestonToAffine, PsdOverRhoRange) {
  auto h = sample_heston();
  for (double rho = -1.0; rho <= 1.0; rho += 0.125) {
    h.rho = rho;
    const auto a = heston_to_affine(h).A[2];
    EXPECT_GE(a.determinant(), -1e-15);
    EXPECT_NEAR(a.determinant(), h.sigma * h.sigma * (1 - rho * rho), 1e-14);
  }
}

TEST(EvaluateAffine, HestonScaling) {
  const auto h = sample_heston();
  const auto p = heston_to_affine(h);
  Eigen::VectorXd x(2);
  x << std::log(100.0), 0.05;
  const auto av = evaluate_affine(p, x);
  EXPECT_LT((av.a - 0.05 * p.A[2]).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(av.b(0), -0.025, 1e-15);
  EXPECT_NEAR(av.b(1), h.kappa * (h.theta - 0.05), 1e-15);
  const auto a0 = evaluate_affine(p, Eigen::VectorXd::Zero(2));
  EXPECT_LT((a0.a - p.A[0]).cwiseAbs().maxCoeff(), 0.0 + 1e-300);
  EXPECT_LT((a0.b - p.b0).cwiseAbs().maxCoeff(), 1e-300);
}

TEST(QuadraticForm, HestonQuadraticTerms) {
  const auto h = sample_heston();
  const auto p = heston_to_affine(h);
  Eigen::RowVectorXcd u(2);
  u << cplx(0.3, 1.1), cplx(-0.2, 0.4);
  const auto q = quadratic_form(p, u);
  const cplx ref = u(0) * u(0) + 2.0 * h.rho * h.sigma * u(0) * u(1) + h.sigma * h.sigma * u(1) * u(1);
  EXPECT_NEAR(std::abs(q(0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(q(1) - ref), 0.0, 1e-14);
  EXPECT_EQ(std::abs(quadratic_form(p, Eigen::RowVectorXcd::Zero(2))(1)), 0.0);
}

TEST(LiftedHeston, Matrices) {
  auto h = sample_heston();
  const auto p = lifted_heston_to_affine(h);
  ASSERT_EQ(p.d, 3u);
  Eigen::MatrixXd b(3, 3), a3(3, 3), a2(3, 3);
  b << 0.0, 0.0, -0.5, 0.0, -h.kappa, 0.0, 0.0, 1.0, 0.0;
  a3 << 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  a2 = Eigen::MatrixXd::Zero(3, 3);
  a2(1, 1) = h.sigma * h.sigma;
  EXPECT_LT((p.B - b).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((p.A[3] - a3).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((p.A[2] - a2).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(p.b0(1), h.kappa * h.theta, 1e-15);
  h.theta = 0.0;
  EXPECT_EQ(lifted_heston_to_affine(h).b0.cwiseAbs().maxCoeff(), 0.0);
  h.sigma = 0.7;
  EXPECT_LT((lifted_heston_to_affine(h).A[3] - a3).cwiseAbs().maxCoeff(), 1e-15);
  const auto k = lifted_heston_kernel(KernelSpec::fractional(1.0, 0.7));
  EXPECT_EQ(k.dimension(), 3u);
}

TEST(StateSpace, StringRoundTrip) {
  for (auto s : {StateSpace::RealSpace, StateSpace::Orthant, StateSpace::HestonSpace})
    EXPECT_EQ(state_space_from_string(to_string(s)), s);
  EXPECT_THROW(state_space_from_string("torus"), ValidationError);
}
