#include "tooldag/error.hpp"

namespace tooldag {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedType: return "MalformedType";
    case Errc::UnknownConstructorArity: return "UnknownConstructorArity";
    case Errc::NonGroundTerm: return "NonGroundTerm";
    case Errc::NonGroundGoal: return "NonGroundGoal";
    case Errc::DuplicateToolId: return "DuplicateToolId";
    case Errc::UnknownTool: return "UnknownTool";
    case Errc::StaleVersion: return "StaleVersion";
    case Errc::MalformedSpec: return "MalformedSpec";
    case Errc::ScorerFailure: return "ScorerFailure";
    case Errc::GroupTooSmall: return "GroupTooSmall";
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::InfeasibleAlpha: return "InfeasibleAlpha";
    case Errc::ParseError: return "ParseError";
    case Errc::DepthMismatch: return "DepthMismatch";
    case Errc::CycleInFile: return "CycleInFile";
    case Errc::LatticeCycle: return "LatticeCycle";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message, std::size_t where)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message),
      code_(code),
      where_(where) {}

}  // namespace tooldag
