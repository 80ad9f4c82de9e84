#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tooldag/library_graph.hpp"
#include "tooldag/random.hpp"
#include "tooldag/rational.hpp"
#include "tooldag/retrieval.hpp"
#include "tooldag/reward.hpp"
#include "tooldag/subgoal.hpp"

namespace tooldag::sim {

// ---- arithmetic domain ------------------------------------------------------

// add, sub, mul, div, pow_int, neg.
const std::vector<std::string>& operators();
bool is_operator(const std::string& id);
std::size_t operator_arity(const std::string& op);
// Intent keyword: add -> "sum", pow_int -> "power", ...
const std::string& keyword(const std::string& op);

// Exact arithmetic for one operator. Throws DivisionByZero, ArityMismatch,
// or InvalidArgument (pow_int with a negative, fractional or huge exponent).
Rational apply_operator(const std::string& op, const std::vector<Rational>& args);

// Library holding the six operators as primitives, default lattice.
LibraryGraph arithmetic_library(InputMatch mode = InputMatch::Contravariant);

// Primitives dispatch on their id; composites run their body.
// Throws UnknownTool, ArityMismatch, DivisionByZero.
Rational execute_tool(const LibraryGraph& graph, const ToolId& id, const std::vector<Rational>& args);
Rational execute_body(const LibraryGraph& graph, const std::vector<Call>& body,
                      const std::vector<Rational>& args);

// Body of `id` with every composite call inlined down to primitives.
std::vector<Call> primitive_expansion(const LibraryGraph& graph, const ToolId& id);

// ---- tasks ------------------------------------------------------------------

// One operator application. Arguments are constants or Arg::result(i), the
// value of step i.
struct Step {
  std::string op;
  std::vector<Arg> args;
  Rational value;
};

struct Task {
  std::string id;
  std::vector<Step> steps;  // topological order, step i only reads step i-1
  std::vector<SubGoal> subgoals;
  Rational oracle_value;
};

std::vector<Task> generate_tasks(std::uint64_t seed, std::size_t count, std::size_t min_depth,
                                 std::size_t max_depth, const std::string& prefix = "q");

// Contiguous run of steps [start, start + length) treated as one sub-goal.
// Its inputs are the arguments coming from outside the run, in order.
struct Window {
  std::size_t start = 0;
  std::size_t length = 1;
  std::vector<Arg> inputs;  // constants, or the result of step start-1
  SubGoal goal;
  std::string template_key;
};

Window make_window(const Task& task, std::size_t start, std::size_t length);

// Phrase describing a chain: keywords joined by " then ", each later link
// tagged "w<k>" with the argument slot that receives the previous result.
std::string chain_phrase(const std::vector<std::pair<std::string, std::size_t>>& links);

// Phrase of an existing tool: its keyword for an operator, its description
// for a composite.
std::string tool_phrase(const LibraryGraph& graph, const ToolId& id);

// Relevance for chain phrases: TF cosine over word unigrams and bigrams, so
// "sum then product" and "product then sum" are told apart.
double chain_relevance(std::string_view intent, std::string_view description);

class ChainRelevance final : public RelevanceScorer {
 public:
  double score(const SubGoal& goal, const ToolRecord& record) const override;
};

// Deterministic scorers with ChainRelevance at L2.
Scorers sim_scorers(const SubtypeLattice& lattice);

// ---- planner ----------------------------------------------------------------

class PolicyTable {
 public:
  double logit(const std::string& tmpl, const ToolId& tool) const;
  void add(const std::string& tmpl, const ToolId& tool, double delta);
  void set(const std::string& tmpl, const ToolId& tool, double value);
  const std::map<std::string, std::map<ToolId, double>>& entries() const noexcept { return logits_; }

 private:
  std::map<std::string, std::map<ToolId, double>> logits_;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::size_t group_size = 8;
  double lambda = 0.20;
  double rho = 0.8;
  double eta = 1.0;
  // Step size at query t is eta / (1 + t / eta_decay); 0 keeps it constant.
  double eta_decay = 100.0;
  double eps_clip = 0.2;
  std::size_t k2 = 32;
  std::size_t epochs = 3;
  std::size_t tasks_per_epoch = 167;
  std::size_t queries = 500;  // cap on Stage 3 queries
  std::size_t min_depth = 2;
  std::size_t max_depth = 4;
  std::size_t m_min = 2;
  std::size_t m_max = 3;
  std::size_t recurrence = 3;
  std::size_t buffer_queries = 50;
  std::size_t warmup_tasks = 64;
  double warm_scale = 1.0;
  // Sampling logit = table entry + relevance_weight * L2 score of the tool.
  double relevance_weight = 30.0;
  // Held-out tasks for the J estimate, evaluated every probe_every queries
  // with fixed rollout seeds and no updates.
  std::size_t eval_tasks = 512;
  std::size_t probe_tasks = 8;
  std::size_t probe_every = 50;
  InputMatch input_match = InputMatch::Contravariant;
};

// Retrieval results for every window of one query, computed once.
struct QueryContext {
  struct Entry {
    Window window;
    std::vector<ToolId> actions;  // S3 of the window's cascade
    std::vector<double> relevance;  // L2 score of each action
  };
  std::map<std::pair<std::size_t, std::size_t>, Entry> windows;  // (start, length)
  CostLedger ledger;
};

QueryContext build_context(const LibraryGraph& graph, const Task& task, const Scorers& scorers,
                           const SimConfig& config);

Trajectory rollout(const LibraryGraph& graph, const PolicyTable& policy, const Task& task,
                   const QueryContext& context, Rng& rng, double relevance_weight = 0.0);

// A mined composite together with the planner template of the windows it
// was harvested from and how many distinct queries supported it.
struct Proposal {
  ToolNode node;
  std::string template_key;
  std::size_t support = 0;
};

std::vector<Proposal> mine_windows(const std::vector<Trajectory>& buffer, const LibraryGraph& graph,
                                   const SimConfig& config);

// Recurring dataflow chains of the success buffer as composite candidates.
std::vector<ToolNode> abstract_composites(const std::vector<Trajectory>& buffer,
                                          const LibraryGraph& graph, const SimConfig& config);

// Group-relative update; each (template, tool) entry moves by at most
// eps_clip. Throws GroupTooSmall.
void grpo_step(PolicyTable& policy, const std::vector<Trajectory>& group,
               const std::vector<RewardBreakdown>& rewards, const SimConfig& config);

// ---- co-evolution -------------------------------------------------------------

struct MetricRow {
  std::size_t step = 0;  // 0 is the warm start
  double j = 0;          // mean shaped reward of the group
  double mean_depth = 0;
  std::size_t composites = 0;
  double mean_phi = 0;
  std::size_t rejections = 0;
  std::size_t tokens = 0;
};

struct EvalPoint {
  std::size_t step = 0;
  double j = 0;
  double r_res = 0;
  double mean_depth = 0;
};

// Mean shaped reward of `group_size` rollouts per task, seeds fixed by
// (seed, task index, rollout index), so successive calls share randomness.
EvalPoint evaluate(const LibraryGraph& graph, const PolicyTable& policy, const std::vector<Task>& tasks,
                   const Scorers& scorers, const SimConfig& config, std::uint64_t seed);

struct Breach {
  std::size_t step;
  std::string probe;
  ToolId dropped;
};

struct RunResult {
  std::vector<MetricRow> rows;
  std::vector<EvalPoint> eval;
  std::vector<Breach> breaches;
  LibraryGraph graph;
  PolicyTable policy;
  // Committed node ids after each step, for the monotone-library audit.
  std::vector<std::size_t> library_sizes;
  bool library_monotone = true;
  // Committed tools whose proposal came from a trajectory below rho.
  std::size_t ungated_commits = 0;
};

RunResult coevolve(const SimConfig& config);

std::string metrics_csv(const std::vector<MetricRow>& rows);
std::string eval_csv(const std::vector<EvalPoint>& points);
std::string manifest_json(const SimConfig& config, const RunResult& result);

}  // namespace tooldag::sim
