#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace avl {

// Uniform discretization of [0, t_end] with nodes t_i = i * dt.
class TimeGrid {
public:
  TimeGrid() = default;
  TimeGrid(double t_end, int n_steps) : t_end_(t_end), n_steps_(n_steps) {
    if (!(t_end > 0.0))
      throw std::invalid_argument("time grid: t_end must be positive");
    if (n_steps < 1)
      throw std::invalid_argument("time grid: n_steps must be a positive integer");
  }

  double t_end() const { return t_end_; }
  int n_steps() const { return n_steps_; }
  double dt() const { return t_end_ / n_steps_; }
  std::size_t size() const { return static_cast<std::size_t>(n_steps_) + 1; }

  // Exact at both ends: node(0) == 0, node(n_steps) == t_end.
  double node(std::size_t i) const {
    if (i == static_cast<std::size_t>(n_steps_)) return t_end_;
    return static_cast<double>(i) * dt();
  }

  // Index of the node equal to t (within a relative tolerance), or throws.
  std::size_t index_of(double t) const {
    const double x = t / dt();
    const double r = std::round(x);
    if (r < 0.0 || r > n_steps_ || std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x)))
      throw std::domain_error("time " + std::to_string(t) + " is not a node of the grid");
    return static_cast<std::size_t>(r);
  }

  bool operator==(const TimeGrid& o) const {
    return t_end_ == o.t_end_ && n_steps_ == o.n_steps_;
  }

private:
  double t_end_ = 1.0;
  int n_steps_ = 1;
};

} // namespace avl
