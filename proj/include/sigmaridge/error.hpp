#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sigmaridge {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input. The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Group membership that does not partition the columns.
class LayoutError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A feature (or the response) with zero sample variance.
class ConstantColumnError : public ValidationError {
 public:
  static constexpr std::size_t kResponse = static_cast<std::size_t>(-1);

  ConstantColumnError(std::size_t column, const std::string& what)
      : ValidationError(what), column_(column) {}

  /// Column index, or kResponse when the response is constant.
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Failure inside a numerical routine. The CLI maps these to exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericError(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Some leave-one-out leverage is numerically 1.
class DegenerateLeverageError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace sigmaridge
