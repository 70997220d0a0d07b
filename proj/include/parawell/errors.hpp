/**
 * @file errors.hpp
 * @brief Exception types raised by the parawell library.
 *
 * Every failure a caller can act on has its own type so that the CLI can map
 * it onto an exit code: ConfigError -> 2, NumericalError -> 3, IoError -> 4.
 */
#ifndef PARAWELL_ERRORS_HPP
#define PARAWELL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace parawell {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two field states (or a state and an operator) live on different grids.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Operation requested for the wrong spatial dimension.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Noise increment does not match the shape implied by the NoiseSpec.
class NoiseShapeError : public Error {
 public:
  using Error::Error;
};

/// Coarse/fine meshes and the Wiener path disagree.
class MeshError : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Krylov expmv did not reach its tolerance within the allowed restarts.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual_estimate)
      : NumericalError(what + " (residual estimate " + std::to_string(residual_estimate) + ")"),
        residual_estimate_(residual_estimate) {}

  double residual_estimate() const noexcept { return residual_estimate_; }

 private:
  double residual_estimate_;
};

class NonFiniteError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Invalid experiment configuration; carries the offending field name.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace parawell

#endif  // PARAWELL_ERRORS_HPP
