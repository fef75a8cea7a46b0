#pragma once

#include <stdexcept>
#include <string>

namespace ridgeless {

/// Failure categories raised by the library. Each maps to one exception type
/// so callers can catch narrowly or fall back to `Error`.
enum class ErrorKind {
  InvalidInput,
  DimensionMismatch,
  SingularPenalty,
  RankDeficiency,
  SingularKernel,
  StepTooLarge,
  NotApplicable,
  Parse,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InvalidInputError : Error {
  explicit InvalidInputError(const std::string& w) : Error(ErrorKind::InvalidInput, w) {}
};

struct DimensionMismatchError : Error {
  explicit DimensionMismatchError(const std::string& w) : Error(ErrorKind::DimensionMismatch, w) {}
};

/// Raised when lambda sits at or below -s_min^2, where (X'X + lambda I) loses invertibility
/// on the row space.
struct SingularPenaltyError : Error {
  explicit SingularPenaltyError(const std::string& w) : Error(ErrorKind::SingularPenalty, w) {}
};

struct RankDeficiencyError : Error {
  explicit RankDeficiencyError(const std::string& w) : Error(ErrorKind::RankDeficiency, w) {}
};

struct SingularKernelError : Error {
  explicit SingularKernelError(const std::string& w) : Error(ErrorKind::SingularKernel, w) {}
};

struct StepTooLargeError : Error {
  explicit StepTooLargeError(const std::string& w) : Error(ErrorKind::StepTooLarge, w) {}
};

struct NotApplicableError : Error {
  explicit NotApplicableError(const std::string& w) : Error(ErrorKind::NotApplicable, w) {}
};

/// File-format failures. `reason` distinguishes the cases callers may want to
/// report differently.
class ParseError : public Error {
 public:
  enum class Reason { Io, BadMagic, Truncated, CountMismatch, BadCell, Ragged, MissingColumn };

  ParseError(Reason reason, const std::string& w) : Error(ErrorKind::Parse, w), reason_(reason) {}
  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

}  // namespace ridgeless
