#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sic {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (specs, scenario files, parameters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed call-site input: empty signals, mismatched lengths or rates.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced or consumed mid-computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Estimation impossible from the given data (e.g. all-zero correlation).
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Basis functions are linearly dependent beyond what regularization absorbs.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, std::vector<int> orders)
      : Error(what), orders_(std::move(orders)) {}
  /// Nonlinearity orders participating in the collinear combination.
  const std::vector<int>& orders() const noexcept { return orders_; }

 private:
  std::vector<int> orders_;
};

/// Auxiliary response vanishes on the evaluation grid.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double omega)
      : Error(what), omega_(omega) {}
  double omega() const noexcept { return omega_; }

 private:
  double omega_;
};

/// Closed-loop learning blew up.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double step_size, double bound)
      : Error(what), step_size_(step_size), bound_(bound) {}
  double step_size() const noexcept { return step_size_; }
  double bound() const noexcept { return bound_; }

 private:
  double step_size_;
  double bound_;
};

}  // namespace sic
