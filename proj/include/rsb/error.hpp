#ifndef RSB_ERROR_HPP
#define RSB_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace rsb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical or configured domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration (schema violation, unknown key, bad value).
class ConfigError : public DomainError {
 public:
  ConfigError(std::string path, const std::string& what)
      : DomainError(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Base for failures of a numerical procedure on valid input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Quadrature could not certify the requested tolerance within its budget.
class AccuracyError : public NumericalError {
 public:
  AccuracyError(const std::string& what, double best_value, double best_error)
      : NumericalError(what), best_value_(best_value), best_error_(best_error) {}
  double best_value() const noexcept { return best_value_; }
  double best_error() const noexcept { return best_error_; }

 private:
  double best_value_;
  double best_error_;
};

/// A NaN or infinity escaped from a function that must stay finite.
class NonFiniteError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The Hermitian eigensolver did not converge.
class EigenError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An assembled density matrix violated positivity beyond tolerance.
class ModelConsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace rsb

#endif  // RSB_ERROR_HPP
