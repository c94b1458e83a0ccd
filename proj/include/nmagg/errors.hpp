#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nmagg {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Kernel construction
class KernelSupportError : public Error { using Error::Error; };
class ResolutionError : public Error { using Error::Error; };
class GridMismatchError : public Error { using Error::Error; };

// Potential and material coefficients
class DomainError : public Error { using Error::Error; };
class ParameterError : public Error { using Error::Error; };
class CoercivityError : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };

// Diagnostics
class MismatchError : public Error { using Error::Error; };

// Configuration
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line, std::string section)
      : Error("line " + std::to_string(line) + " [" + section + "]: " + what),
        line_(line), section_(std::move(section)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& section() const noexcept { return section_; }

private:
  std::size_t line_;
  std::string section_;
};

class ValidationError : public Error { using Error::Error; };

/// Failure raised inside a time step. Carries the substep tag ("ch",
/// "momentum", "microrotation") and, once known, the step index.
class StepError : public Error {
public:
  StepError(std::string kind, std::string substep, const std::string& what)
      : Error(what), kind_(std::move(kind)), substep_(std::move(substep)) {}

  const std::string& kind() const noexcept { return kind_; }
  const std::string& substep() const noexcept { return substep_; }
  long step() const noexcept { return step_; }
  void set_step(long s) noexcept { step_ = s; }

private:
  std::string kind_;
  std::string substep_;
  long step_ = -1;
};

class NewtonDivergence : public StepError {
public:
  explicit NewtonDivergence(const std::string& what)
      : StepError("NewtonDivergence", "ch", what) {}
};

class SeparationLoss : public StepError {
public:
  explicit SeparationLoss(const std::string& what)
      : StepError("SeparationLoss", "ch", what) {}
};

class CFLViolation : public StepError {
public:
  CFLViolation(const std::string& substep, const std::string& what)
      : StepError("CFLViolation", substep, what) {}
};

class NonFiniteError : public StepError {
public:
  NonFiniteError(const std::string& substep, const std::string& what)
      : StepError("NonFinite", substep, what) {}
};

} // namespace nmagg
