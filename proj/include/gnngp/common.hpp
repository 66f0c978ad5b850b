#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gnngp {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Malformed caller input: bad indices, mismatched dimensions, unreadable files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or solve that could not be completed. `value()` carries the
/// offending quantity (eigenvalue, condition estimate, ...).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double value)
      : std::runtime_error(what), value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// An iterative method ran out of iterations before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A theoretical assumption does not hold for the given input (reducible graph,
/// unsupported parameter regime, size guard).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gnngp
