#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfsns {

/// Invalid model or operation parameters (out-of-range orders, shape mismatches).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of a function (e.g. negative Mainardi argument).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical failure: quadrature non-convergence, Picard exhaustion, blow-up,
/// non-finite Monte Carlo samples.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Picard iteration exhausted max_iter; carries the residual history.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residuals)
      : NumericalError(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

}  // namespace tfsns
