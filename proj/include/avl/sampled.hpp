#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "avl/errors.hpp"
#include "avl/grid.hpp"

namespace avl {

using cplx = std::complex<double>;

namespace detail {

template <class T>
struct is_eigen : std::is_base_of<Eigen::MatrixBase<T>, T> {};

template <class T>
T zero_like(const T& x) {
  if constexpr (is_eigen<T>::value)
    return T::Zero(x.rows(), x.cols());
  else
    return T(0.0);
}

template <class T>
double max_abs(const T& x) {
  if constexpr (is_eigen<T>::value)
    return x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
  else
    return std::abs(x);
}

template <class T>
bool all_finite(const T& x) {
  if constexpr (is_eigen<T>::value)
    return x.allFinite();
  else
    return std::isfinite(std::abs(x));
}

// a * b with real-times-complex promotion and Eigen evaluation.
template <class A, class B>
auto mul(const A& a, const B& b) {
  if constexpr (is_eigen<A>::value && is_eigen<B>::value) {
    using S = decltype(typename A::Scalar() * typename B::Scalar());
    return Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>(a.template cast<S>() * b.template cast<S>());
  } else if constexpr (is_eigen<A>::value || is_eigen<B>::value) {
    auto r = (a * b).eval();
    return Eigen::Matrix<typename decltype(r)::Scalar, Eigen::Dynamic, Eigen::Dynamic>(r);
  } else {
    return a * b;
  }
}

template <class T>
void check_same_shape(const T& a, const T& b, const char* what) {
  if constexpr (is_eigen<T>::value)
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw ValidationError(std::string(what) + ": dimension mismatch");
}

} // namespace detail

// Function sampled at the nodes of a grid. cell_integrals, when present,
// holds exact integrals over each cell and takes precedence over the
// trapezoid rule (used for functions that are singular at t = 0).
template <class T>
struct SampledFunction {
  TimeGrid grid;
  std::vector<T> values;
  std::vector<T> cell_integrals;

  SampledFunction() = default;
  SampledFunction(TimeGrid g, std::vector<T> v, std::vector<T> ci = {})
      : grid(g), values(std::move(v)), cell_integrals(std::move(ci)) {
    if (values.size() != grid.size())
      throw ValidationError("sampled function: expected " + std::to_string(grid.size()) +
                            " values, got " + std::to_string(values.size()));
    if (!cell_integrals.empty() && cell_integrals.size() + 1 != grid.size())
      throw ValidationError("sampled function: cell integral count does not match grid");
  }

  std::size_t size() const { return values.size(); }
  const T& operator[](std::size_t i) const { return values[i]; }

  T cell_integral(std::size_t k) const {
    if (!cell_integrals.empty()) return cell_integrals[k];
    return T((values[k] + values[k + 1]) * (0.5 * grid.dt()));
  }

  // Running integrals I_i = int_0^{t_i}.
  std::vector<T> cumulative() const {
    std::vector<T> out(values.size(), detail::zero_like(values[0]));
    for (std::size_t k = 0; k + 1 < values.size(); ++k) out[k + 1] = T(out[k] + cell_integral(k));
    return out;
  }

  bool finite() const {
    for (const auto& v : values)
      if (!detail::all_finite(v)) return false;
    return true;
  }
};

using RealFunction = SampledFunction<double>;
using ComplexFunction = SampledFunction<cplx>;
using MatrixFunction = SampledFunction<Eigen::MatrixXd>;
using ComplexMatrixFunction = SampledFunction<Eigen::MatrixXcd>;

// Measure on [0, t_end]: an atom at 0 plus a piecewise-constant density.
// mass[k] is the measure of cell k; density(k) = mass[k] / dt.
struct MeasureRepr {
  TimeGrid grid;
  Eigen::MatrixXd atom0;
  std::vector<Eigen::MatrixXd> mass;

  std::size_t dim() const { return static_cast<std::size_t>(atom0.rows()); }
  Eigen::MatrixXd density(std::size_t k) const { return mass[k] / grid.dt(); }

  double total_variation() const {
    double tv = atom0.cwiseAbs().sum();
    for (const auto& m : mass) tv += m.cwiseAbs().sum();
    return tv;
  }
};

} // namespace avl
