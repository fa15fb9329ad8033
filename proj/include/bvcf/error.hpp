#pragma once

#include <stdexcept>
#include <string>

namespace bvcf {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad parameters, divergent moments,
/// mismatched grids). The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain (nonpositive size, negative density).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A kernel that is singular near zero was used where a bounded one is required.
class UnboundedKernelError : public Error {
 public:
  using Error::Error;
};

/// Detailed-balance profile vanished where it is needed in a denominator.
class SingularProfileError : public Error {
 public:
  using Error::Error;
};

/// Scenario cannot define the requested object (e.g. zero boundary datum for f_inf).
class InvalidScenarioError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Adaptive step underflow. Carries the cell that limited the step.
class StiffnessError : public Error {
 public:
  StiffnessError(const std::string& what, int cell) : Error(what), cell_(cell) {}
  int cell() const { return cell_; }

 private:
  int cell_;
};

/// Least-squares fit impossible on the requested window.
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace bvcf
