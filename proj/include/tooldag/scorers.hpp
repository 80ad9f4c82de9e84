#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tooldag/subgoal.hpp"
#include "tooldag/tool_record.hpp"
#include "tooldag/type_term.hpp"

namespace tooldag {

// Cosine similarity of lowercased alphanumeric term-frequency vectors, plus
// 0.1 per tag that occurs among the intent tokens, clamped to [0, 1].
double lexical_score(std::string_view intent, std::string_view description,
                     const std::vector<std::string>& tags = {});

struct SpecVerdict {
  bool compatible = true;
  std::string reason;
};

struct SpecCheckOptions {
  // post -> effects it entails, beyond normalized string equality.
  std::set<std::pair<std::string, std::string>> entails;
  // Free-text specs pass when lexical_score(goal_effect, post) >= this.
  double theta_spec = 0.5;
};

// Incompatible iff a precondition atom is missing from the facts, the post
// does not entail the goal effect, or the complexity exceeds the budget.
// Throws MalformedSpec for a free-text spec with an empty post.
SpecVerdict spec_compatible(const SubGoal& goal, const Spec& spec,
                            const SpecCheckOptions& options = {});

// Type of a literal in an example tuple, if it has one: 3 -> int,
// 4.0 or 1/2 -> float, true -> bool, "x" -> str, [1, 2] -> list[int].
std::optional<TypeTerm> infer_value_type(std::string_view literal);

// Mean of (fraction of examples whose inputs type-match the goal inputs) and
// (fraction whose output is a subtype of the goal output).
double example_score(const SubGoal& goal, const std::vector<Example>& examples,
                     const SubtypeLattice& lattice);

// Judgment interfaces consumed by the retrieval cascade. Implementations
// must be pure; a failing scorer throws Error(Errc::ScorerFailure).
class RelevanceScorer {
 public:
  virtual ~RelevanceScorer() = default;
  virtual double score(const SubGoal& goal, const ToolRecord& record) const = 0;
};

class SpecChecker {
 public:
  virtual ~SpecChecker() = default;
  virtual SpecVerdict check(const SubGoal& goal, const ToolRecord& record) const = 0;
};

class ExampleScorer {
 public:
  virtual ~ExampleScorer() = default;
  virtual double score(const SubGoal& goal, const ToolRecord& record) const = 0;
};

class LexicalRelevance final : public RelevanceScorer {
 public:
  double score(const SubGoal& goal, const ToolRecord& record) const override;
};

class StructuredSpecChecker final : public SpecChecker {
 public:
  explicit StructuredSpecChecker(SpecCheckOptions options = {}) : options_(std::move(options)) {}
  SpecVerdict check(const SubGoal& goal, const ToolRecord& record) const override;

 private:
  SpecCheckOptions options_;
};

class ExampleShapeScorer final : public ExampleScorer {
 public:
  explicit ExampleShapeScorer(SubtypeLattice lattice) : lattice_(std::move(lattice)) {}
  double score(const SubGoal& goal, const ToolRecord& record) const override;

 private:
  SubtypeLattice lattice_;
};

struct Scorers {
  std::shared_ptr<const RelevanceScorer> relevance;
  std::shared_ptr<const SpecChecker> spec;
  std::shared_ptr<const ExampleScorer> examples;

  static Scorers deterministic(const SubtypeLattice& lattice, SpecCheckOptions options = {});
};

}  // namespace tooldag
