#ifndef SHIFTPLAN_ERROR_HPP
#define SHIFTPLAN_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace shiftplan {

enum class ErrorKind {
  DisconnectedGraph,
  InvalidIndex,
  NonPositiveParameter,
  SingularNetwork,
  ShapeMismatch,
  NegativeValue,
  EmptyHorizon,
  InvalidParams,
  DimensionMismatch,
  BaselineInfeasible,
  SolverFailure,
  EnumerationTooLarge,
  ProblemTooLarge,
  NoFeasiblePlan,
  MissingArtifact,
  Io,
  Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library. `field()` carries the offending
/// input path (e.g. "lines[3].to") when the error comes from validation.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string field = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }
  /// Message without the kind and field prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string field_;
  std::string message_;
};

}  // namespace shiftplan

#endif  // SHIFTPLAN_ERROR_HPP
