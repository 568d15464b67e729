#include "shiftplan/error.hpp"

namespace shiftplan {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::InvalidIndex: return "InvalidIndex";
    case ErrorKind::NonPositiveParameter: return "NonPositiveParameter";
    case ErrorKind::SingularNetwork: return "SingularNetwork";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NegativeValue: return "NegativeValue";
    case ErrorKind::EmptyHorizon: return "EmptyHorizon";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BaselineInfeasible: return "BaselineInfeasible";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorKind::ProblemTooLarge: return "ProblemTooLarge";
    case ErrorKind::NoFeasiblePlan: return "NoFeasiblePlan";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

static std::string compose(ErrorKind kind, const std::string& message,
                           const std::string& field) {
  std::string out(to_string(kind));
  if (!field.empty()) out += " at " + field;
  out += ": " + message;
  return out;
}

Error::Error(ErrorKind kind, const std::string& message, std::string field)
    : std::runtime_error(compose(kind, message, field)),
      kind_(kind),
      field_(std::move(field)),
      message_(message) {}

}  // namespace shiftplan
