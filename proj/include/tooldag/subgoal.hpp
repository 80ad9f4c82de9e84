#pragma once

#include <optional>
#include <set>
#include <string>

#include "tooldag/tool_record.hpp"
#include "tooldag/type_term.hpp"

namespace tooldag {

// One typed sub-goal of a decomposed query.
struct SubGoal {
  Signature goal_sig;  // ground
  std::string intent;  // non-empty
  // Predicate atoms known to hold about the inputs.
  std::set<std::string> available_facts;
  // Required effect; empty means no requirement.
  std::string goal_effect;
  std::optional<Complexity> budget;
};

// Throws InvalidArgument / NonGroundGoal when the invariants do not hold.
void validate(const SubGoal& goal);

}  // namespace tooldag
