#pragma once

#include <stdexcept>
#include <string>

namespace erlab {

// Exit codes used by the command line runner.
enum class ExitCode : int {
  ok = 0,
  validation = 1,
  convergence = 2,
  budget = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::validation; }
};

/// A spec, config or argument violates a stated invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Index or time outside the data that was generated.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Caller combined arguments in a way the operation does not accept.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A rate-function argument lies outside the region where it is finite.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  ExitCode exit_code() const noexcept override { return ExitCode::convergence; }
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Enumeration or work estimate exceeds the configured budget.
class BudgetError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::budget; }
};

}  // namespace erlab
