#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tooldag/error.hpp"
#include "tooldag/library_graph.hpp"
#include "tooldag/scorers.hpp"
#include "tooldag/subgoal.hpp"

namespace tooldag {

// Whitespace-delimited tokens of the canonical level text (see level_text).
std::size_t token_cost(const ToolRecord& record, int level);

// Charges of one retrieval episode. Index 1..4 is the record level; level 1
// is symbolic and never charged tokens.
struct CostLedger {
  std::array<std::size_t, 5> tokens{};
  std::array<std::size_t, 5> scorer_calls{};
  std::size_t unify_visits = 0;
  // Levels whose per-call charge exceeded the context window.
  std::vector<int> window_violations;

  std::size_t total_tokens() const;
  std::size_t total_scorer_calls() const;
  CostLedger& operator+=(const CostLedger& other);
};

struct GraphFeatures {
  std::size_t depth = 0;
  std::vector<ToolId> children;  // distinct
  std::size_t subgraph_size = 1;
};

// Survivor sets of one cascade run: s1 ⊇ s2 ⊇ s3 ⊇ s4.
struct CascadeTrace {
  std::vector<ToolId> s1;  // tool-id order
  std::vector<ToolId> s2;  // best L2 score first
  std::vector<ToolId> s3;  // s2 order
  std::vector<ToolId> s4;  // the winner, if any
  std::optional<ToolId> winner;
  std::optional<GraphFeatures> features;
  std::map<ToolId, double> l2_scores;
  std::map<ToolId, double> l4_scores;
  std::map<ToolId, std::string> l3_reasons;  // rejected members of s2
  CostLedger ledger;
};

// One line per stage: "L<k>\t<ids,comma,separated>\t<tokens>\t<scorer calls>".
std::string trace_lines(const CascadeTrace& trace);

struct RetrievalConfig {
  std::size_t k2 = 32;
  // Per-call context budget in tokens; overruns are recorded, not fatal.
  std::size_t context_window = 4096;
};

// Thrown when a scorer fails mid-episode; carries the ledger so far.
class RetrievalAborted : public Error {
 public:
  RetrievalAborted(const ToolId& tool, CostLedger ledger, const std::string& why);
  const ToolId& tool() const noexcept { return tool_; }
  const CostLedger& ledger() const noexcept { return ledger_; }

 private:
  ToolId tool_;
  CostLedger ledger_;
};

// Stage L1: index lookup; zero tokens, unification work recorded.
std::vector<ToolId> l1_filter(const LibraryGraph& graph, const SubGoal& goal, CostLedger& ledger);

// Stage L2: one relevance call per member of s1, keep the top k2 (ties by id).
std::vector<ToolId> l2_rank(const LibraryGraph& graph, const SubGoal& goal,
                            const std::vector<ToolId>& s1, const RelevanceScorer& scorer,
                            std::size_t k2, CostLedger& ledger,
                            std::map<ToolId, double>* scores = nullptr);

// Stage L3: hard accept/reject on the spec, order preserved.
std::vector<ToolId> l3_filter(const LibraryGraph& graph, const SubGoal& goal,
                              const std::vector<ToolId>& s2, const SpecChecker& checker,
                              CostLedger& ledger,
                              std::map<ToolId, std::string>* reasons = nullptr);

// Stage L4: argmax of the example score, ties by id.
std::optional<ToolId> l4_select(const LibraryGraph& graph, const SubGoal& goal,
                                const std::vector<ToolId>& s3, const ExampleScorer& scorer,
                                CostLedger& ledger, std::map<ToolId, double>* scores = nullptr);

CascadeTrace retrieve(const LibraryGraph& graph, const SubGoal& goal, const Scorers& scorers,
                      const RetrievalConfig& config = {});

// Retrieval with lazy composite expansion: when no tool survives, the
// highest-ranked composite that failed L3 is split into one sub-goal per
// body call and each is retrieved in turn, one level per recursion.
struct ExpandedTrace {
  CascadeTrace trace;
  std::optional<ToolId> expanded;  // composite whose children were tried
  std::vector<ExpandedTrace> parts;
  CostLedger total;  // this episode plus every nested one

  // Winners of this level, or of the expansion when this level has none.
  std::vector<ToolId> resolved() const;
};

ExpandedTrace retrieve_expanding(const LibraryGraph& graph, const SubGoal& goal,
                                 const Scorers& scorers, const RetrievalConfig& config = {},
                                 std::optional<std::size_t> max_levels = std::nullopt);

}  // namespace tooldag
