#pragma once

#include <stdexcept>
#include <string>

namespace avl {

// Invalid parameters, malformed configuration, violated preconditions.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A computation that could not be carried out to the requested accuracy
// (quadrature non-convergence, singular triangular block, blow-up, ...).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace avl
