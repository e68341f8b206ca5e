#include <cmath>

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "avl/mittag_leffler.hpp"
#include "avl/resolvents.hpp"

using namespace avl;

namespace {

double max_err(const MatrixFunction& f, const std::function<double(double)>& ref, double t_min = 0.0) {
  double e = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.grid.node(i) >= t_min && f.grid.node(i) > 0.0) e = std::max(e, std::abs(f.values[i](0, 0) - ref(f.grid.node(i))));
  return e;
}

}  // namespace

TEST(SecondKind, ConstantKernel) {
  const double c = 2.0;
  const auto r = resolvent_second_kind(KernelSpec::constant(c), TimeGrid(1.0, 1000));
  EXPECT_LT(max_err(r, [&](double t) { return c * std::exp(-c * t); }), 2e-3);
}

TEST(SecondKind, FractionalKernel) {
  const double a = 0.75, c = 1.0;
  const auto r = resolvent_second_kind(KernelSpec::fractional(c, a), TimeGrid(1.0, 1000));
  EXPECT_LT(max_err(r, [&](double t) { return c * std::pow(t, a - 1.0) * mittag_leffler(a, a, -c * std::pow(t, a)); }),
            2e-3);
}

TEST(SecondKind, ExponentialKernel) {
  const double c = 1.0, l = 2.0;
  const auto r = resolvent_second_kind(KernelSpec::exponential(c, l), TimeGrid(1.0, 1000));
  EXPECT_LT(max_err(r, [&](double t) { return c * std::exp(-l * t) * std::exp(-c * t); }), 2e-3);
}

TEST(SecondKind, SampledInputMatchesConstantClosedForm) {
  const TimeGrid g(1.0, 400);
  std::vector<Eigen::MatrixXd> k(g.size(), Eigen::MatrixXd::Constant(1, 1, 1.0));
  const auto r = resolvent_second_kind(MatrixFunction(g, k));
  EXPECT_LT(max_err(r, [](double t) { return std::exp(-t); }), 1e-2);
}

TEST(SecondKind, ResidualShrinksForSmoothKernels) {
  for (const auto& k : {KernelSpec::constant(1.0), KernelSpec::exponential(1.0, 2.0)}) {
    double prev = 0.0;
    for (int n : {100, 200, 400}) {
      const TimeGrid g(1.0, n);
      const auto res = second_kind_residual(kernel_moments(k, g), resolvent_second_kind(k, g));
      double e = 0.0;
      for (double v : res.values) e = std::max(e, std::abs(v));
      if (prev > 0.0) EXPECT_GT(std::log2(prev / e), 0.9) << k.describe();
      prev = e;
    }
  }
}

TEST(SecondKind, DiscreteCommutation) {
  const TimeGrid g(1.0, 200);
  for (const auto& k : {KernelSpec::fractional(1.0, 0.7), KernelSpec::gamma(1.0, 0.75, 2.0)}) {
    const auto r = resolvent_second_kind(k, g);
    std::vector<double> kv(g.size()), rv(g.size());
    const auto m = kernel_moments(k, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      kv[i] = m.nodes[i];
      rv[i] = r.values[i](0, 0);
    }
    const RealFunction kf(g, kv), rf(g, rv);
    const auto kr = convolve(kf, rf), rk = convolve(rf, kf);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(kr[i], rk[i], 1e-12);
  }
}

TEST(FirstKind, ConstantKernel) {
  const auto l = resolvent_first_kind(KernelSpec::constant(4.0), TimeGrid(1.0, 50));
  EXPECT_NEAR(l.atom0(0, 0), 0.25, 1e-15);
  for (const auto& m : l.mass) EXPECT_NEAR(m(0, 0), 0.0, 1e-15);
}

TEST(FirstKind, ExponentialKernel) {
  const double c = 2.0, lam = 3.0;
  const TimeGrid g(1.0, 50);
  const auto l = resolvent_first_kind(KernelSpec::exponential(c, lam), g);
  EXPECT_NEAR(l.atom0(0, 0), 1.0 / c, 1e-14);
  for (std::size_t k = 0; k < l.mass.size(); ++k) EXPECT_NEAR(l.density(k)(0, 0), lam / c, 1e-12);
  const auto res = first_kind_residual(kernel_moments(KernelSpec::exponential(c, lam), g), l);
  for (double v : res.values) EXPECT_LT(std::abs(v), 1e-8);
}

TEST(FirstKind, FractionalKernel) {
  const double c = 1.5, a = 0.7;
  const TimeGrid g(1.0, 100);
  const auto l = resolvent_first_kind(KernelSpec::fractional(c, a), g);
  EXPECT_DOUBLE_EQ(l.atom0(0, 0), 0.0);
  for (std::size_t k = 0; k < l.mass.size(); ++k) {
    const double t0 = g.node(k), t1 = g.node(k + 1);
    const double ref = (std::pow(t1, 1.0 - a) - std::pow(t0, 1.0 - a)) / (c * boost::math::tgamma(2.0 - a));
    EXPECT_NEAR(l.mass[k](0, 0), ref, 1e-14);
    EXPECT_GE(l.mass[k](0, 0), 0.0);
  }
}

TEST(FirstKind, IntegratedResidualHalves) {
  const auto k = KernelSpec::gamma(1.0, 0.75, 2.0);
  double prev = 0.0;
  for (int n : {100, 200, 400}) {
    const TimeGrid g(1.0, n);
    const auto res = first_kind_integrated_residual(kernel_moments(k, g), resolvent_first_kind(k, g));
    double e = 0.0;
    for (double v : res.values) e = std::max(e, std::abs(v));
    if (prev > 0.0) EXPECT_LT(e, 0.6 * prev);
    prev = e;
  }
}

TEST(FirstKind, SampledKernelValidation) {
  const TimeGrid g(1.0, 4);
  EXPECT_THROW(resolvent_first_kind(RealFunction(g, {1.0, 1.2, 1.0, 0.9, 0.8})), ValidationError);
  EXPECT_THROW(resolvent_first_kind(RealFunction(g, {1.0, 0.5, -0.1, -0.2, -0.3})), ValidationError);
  EXPECT_THROW(resolvent_first_kind(RealFunction(g, {0.0, 0.0, 0.0, 0.0, 0.0})), ValidationError);
  const auto l = resolvent_first_kind(RealFunction(g, std::vector<double>(5, 2.0)));
  EXPECT_NEAR(l.atom0(0, 0), 0.5, 1e-15);
  for (const auto& m : l.mass) EXPECT_NEAR(m(0, 0), 0.0, 1e-15);
}

TEST(FirstKind, SumKernelSolvesConvolutionEquation) {
  const auto k = KernelSpec::sum({KernelSpec::constant(1.0), KernelSpec::exponential(1.0, 2.0)});
  const TimeGrid g(1.0, 200);
  const auto l = resolvent_first_kind(k, g);
  const auto res = first_kind_residual(kernel_moments(k, g), l);
  for (double v : res.values) EXPECT_LT(std::abs(v), 1e-12);
  EXPECT_NEAR(l.atom0(0, 0), 0.5, 1e-15);
  for (const auto& m : l.mass) EXPECT_GE(m(0, 0), 0.0);
}

TEST(ResolventPairB, ZeroB) {
  const TimeGrid g(1.0, 100);
  const auto k = KernelSpec::fractional(1.0, 0.75);
  const auto p = resolvent_pair_b(k, Eigen::MatrixXd::Zero(1, 1), g);
  const auto m = kernel_moments(k, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(p.r_b.values[i](0, 0), 0.0);
    EXPECT_EQ(p.e_b.values[i](0, 0), m.nodes[i]);
  }
}

TEST(ResolventPairB, ConstantKernelIsMatrixExponential) {
  const TimeGrid g(1.0, 1000);
  const auto p = resolvent_pair_b(KernelSpec::constant(1.0), Eigen::MatrixXd::Constant(1, 1, -0.8), g);
  EXPECT_LT(max_err(p.e_b, [](double t) { return std::exp(-0.8 * t); }), 2e-3);
}

TEST(ResolventPairB, FractionalMittagLeffler) {
  const double a = 0.75, kappa = 1.3;
  const TimeGrid g(1.0, 1000);
  const auto p = resolvent_pair_b(KernelSpec::fractional(1.0, a), Eigen::MatrixXd::Constant(1, 1, -kappa), g);
  EXPECT_LT(max_err(p.e_b,
                    [&](double t) { return std::pow(t, a - 1.0) * mittag_leffler(a, a, -kappa * std::pow(t, a)); }, 0.01),
            5e-3);
}

TEST(ResolventPairB, DiagonalMatrixAgreesWithScalarEntries) {
  const TimeGrid g(1.0, 200);
  const auto k1 = KernelSpec::fractional(1.0, 0.7), k2 = KernelSpec::exponential(1.0, 1.0);
  Eigen::MatrixXd b(2, 2);
  b << -1.0, 0.0, 0.0, -2.0;
  const auto p = resolvent_pair_b(KernelSpec::diagonal({k1, k2}), b, g);
  const auto s1 = resolvent_pair_b(k1, Eigen::MatrixXd::Constant(1, 1, -1.0), g);
  const auto s2 = resolvent_pair_b(k2, Eigen::MatrixXd::Constant(1, 1, -2.0), g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(p.e_b.values[i](0, 0), s1.e_b.values[i](0, 0), 1e-12);
    EXPECT_NEAR(p.e_b.values[i](1, 1), s2.e_b.values[i](0, 0), 1e-12);
    EXPECT_NEAR(p.e_b.values[i](0, 1), 0.0, 1e-14);
  }
}

TEST(Convolve, ConstantAgainstOne) {
  const TimeGrid g(1.0, 20);
  const auto m = kernel_moments(KernelSpec::constant(1.0), g);
  const auto out = convolve(m, RealFunction(g, std::vector<double>(g.size(), 1.0)));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(out[i], g.node(i), 1e-14);
}

TEST(Convolve, AtomAgainstConstant) {
  const TimeGrid g(1.0, 20);
  const double c = 3.0;
  const auto l = resolvent_first_kind(KernelSpec::constant(c), g);
  const auto out = convolve(l, RealFunction(g, std::vector<double>(g.size(), c)));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(out[i], 1.0, 1e-15);
}

TEST(Convolve, FractionalBetaIntegral) {
  // t^{-0.4}/Gamma(0.6) * t^{-0.3}/Gamma(0.7) = t^{0.3}/Gamma(1.3)
  const TimeGrid g(1.0, 2000);
  const auto ka = kernel_moments(KernelSpec::fractional(1.0, 0.6), g);
  const auto kb = kernel_moments(KernelSpec::fractional(1.0, 0.7), g);
  const auto out = convolve(ka, RealFunction(g, kb.nodes));
  double e = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.node(i) >= 0.1) e = std::max(e, std::abs(out[i] - std::pow(g.node(i), 0.3) / boost::math::tgamma(1.3)));
  EXPECT_LT(e, 0.03);
}

TEST(Convolve, DimensionMismatch) {
  const TimeGrid g(1.0, 4);
  MeasureRepr l{g, Eigen::MatrixXd::Identity(2, 2), std::vector<Eigen::MatrixXd>(4, Eigen::MatrixXd::Zero(2, 2))};
  const SampledFunction<Eigen::MatrixXd> f(g, std::vector<Eigen::MatrixXd>(5, Eigen::MatrixXd::Zero(3, 3)));
  EXPECT_THROW(convolve(l, f), ValidationError);
}

TEST(ShiftedKernelAgainstL, OrthantMonotonicity) {
  for (const auto& k : {KernelSpec::fractional(1.0, 0.7), KernelSpec::exponential(1.0, 2.0), KernelSpec::constant(2.0)}) {
    const TimeGrid g(1.0, 200);
    const std::size_t m = 20;
    const auto l = resolvent_first_kind(k, g);
    const auto ext = kernel_moments(k, TimeGrid(g.dt() * (200 + m), 200 + m));
    const auto s = shifted_kernel_against_l(ext, l, m);
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_GE(s[i], 0.0);
      EXPECT_LE(s[i], 1.0 + 1e-6);
      if (i > 0) EXPECT_GE(s[i], s[i - 1] - 1e-10) << k.describe() << " i=" << i;
    }
  }
}
