#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tooldag {

enum class Errc {
  MalformedType,
  UnknownConstructorArity,
  NonGroundTerm,
  NonGroundGoal,
  DuplicateToolId,
  UnknownTool,
  StaleVersion,
  MalformedSpec,
  ScorerFailure,
  GroupTooSmall,
  DivisionByZero,
  ArityMismatch,
  InfeasibleAlpha,
  ParseError,
  DepthMismatch,
  CycleInFile,
  LatticeCycle,
  InvalidArgument,
};

const char* errc_name(Errc code);

// Every recoverable failure in the engine surfaces as this exception. The
// code identifies the contract that was violated; `where` is a position
// (type grammar), a line number (library files) or 0 when not applicable.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::size_t where = 0);

  Errc code() const noexcept { return code_; }
  std::size_t where() const noexcept { return where_; }

 private:
  Errc code_;
  std::size_t where_;
};

}  // namespace tooldag
