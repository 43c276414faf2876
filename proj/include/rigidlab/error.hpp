#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rigidlab {

enum class ErrorKind {
  domain,
  precondition,
  tolerance,
  divergence,
  degenerate_fit,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base of every error raised by the library. The kind is what the CLI
/// reports in its machine-readable error object.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

/// A documented precondition on a model or input failed; `value` is the
/// offending quantity (e.g. the superhomogeneity defect).
class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& what, double value)
      : Error(ErrorKind::precondition, what), value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// A numerical tolerance could not be met; `bound` is the achieved error
/// estimate (tail bound, grid refinement change, ...).
class ToleranceError : public Error {
 public:
  ToleranceError(const std::string& what, double bound)
      : Error(ErrorKind::tolerance, what), bound_(bound) {}
  double bound() const noexcept { return bound_; }

 private:
  double bound_;
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(ErrorKind::divergence, what) {}
};

class DegenerateFitError : public Error {
 public:
  explicit DegenerateFitError(const std::string& what) : Error(ErrorKind::degenerate_fit, what) {}
};

}  // namespace rigidlab
