#include "tooldag/retrieval.hpp"

#include <algorithm>

#include "tooldag/text.hpp"

namespace tooldag {

std::size_t token_cost(const ToolRecord& record, int level) {
  return text::count_whitespace_tokens(level_text(record, level));
}

std::size_t CostLedger::total_tokens() const {
  std::size_t t = 0;
  for (auto x : tokens) t += x;
  return t;
}

std::size_t CostLedger::total_scorer_calls() const {
  std::size_t t = 0;
  for (auto x : scorer_calls) t += x;
  return t;
}

CostLedger& CostLedger::operator+=(const CostLedger& o) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tokens[i] += o.tokens[i];
    scorer_calls[i] += o.scorer_calls[i];
  }
  unify_visits += o.unify_visits;
  window_violations.insert(window_violations.end(), o.window_violations.begin(),
                           o.window_violations.end());
  return *this;
}

std::string trace_lines(const CascadeTrace& t) {
  const std::vector<ToolId>* sets[] = {&t.s1, &t.s2, &t.s3, &t.s4};
  std::string out;
  for (int level = 1; level <= 4; ++level) {
    out += "L" + std::to_string(level) + "\t" + text::join(*sets[level - 1], ",") + "\t" +
           std::to_string(t.ledger.tokens[level]) + "\t" +
           std::to_string(t.ledger.scorer_calls[level]) + "\n";
  }
  return out;
}

RetrievalAborted::RetrievalAborted(const ToolId& tool, CostLedger ledger, const std::string& why)
    : Error(Errc::ScorerFailure, "scorer failed on " + tool + ": " + why),
      tool_(tool),
      ledger_(std::move(ledger)) {}

namespace {

// Charge level `level` for every member of `members` before judging them.
void charge(const LibraryGraph& graph, const std::vector<ToolId>& members, int level,
            CostLedger& ledger, std::size_t window = 0) {
  std::size_t sum = 0;
  for (const auto& id : members) sum += token_cost(graph.node(id).record, level);
  ledger.tokens[level] += sum;
  if (window && sum > window) ledger.window_violations.push_back(level);
}

template <typename Fn>
auto guarded(const ToolId& id, const CostLedger& ledger, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const RetrievalAborted&) {
    throw;
  } catch (const Error& e) {
    if (e.code() != Errc::ScorerFailure) throw;
    throw RetrievalAborted(id, ledger, e.what());
  }
}

std::vector<ToolId> l2_rank_impl(const LibraryGraph& graph, const SubGoal& goal,
                                 const std::vector<ToolId>& s1, const RelevanceScorer& scorer,
                                 std::size_t k2, CostLedger& ledger,
                                 std::map<ToolId, double>* scores, std::size_t window) {
  charge(graph, s1, 2, ledger, window);
  std::vector<std::pair<double, ToolId>> ranked;
  ranked.reserve(s1.size());
  for (const auto& id : s1) {
    ++ledger.scorer_calls[2];
    double s = guarded(id, ledger, [&] { return scorer.score(goal, graph.node(id).record); });
    ranked.emplace_back(s, id);
    if (scores) (*scores)[id] = s;
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (ranked.size() > k2) ranked.resize(k2);
  std::vector<ToolId> out;
  out.reserve(ranked.size());
  for (auto& [s, id] : ranked) out.push_back(std::move(id));
  return out;
}

std::vector<ToolId> l3_filter_impl(const LibraryGraph& graph, const SubGoal& goal,
                                   const std::vector<ToolId>& s2, const SpecChecker& checker,
                                   CostLedger& ledger, std::map<ToolId, std::string>* reasons,
                                   std::size_t window) {
  charge(graph, s2, 3, ledger, window);
  std::vector<ToolId> out;
  for (const auto& id : s2) {
    ++ledger.scorer_calls[3];
    auto v = guarded(id, ledger, [&] { return checker.check(goal, graph.node(id).record); });
    if (v.compatible) {
      out.push_back(id);
    } else if (reasons) {
      (*reasons)[id] = v.reason;
    }
  }
  return out;
}

std::optional<ToolId> l4_select_impl(const LibraryGraph& graph, const SubGoal& goal,
                                     const std::vector<ToolId>& s3, const ExampleScorer& scorer,
                                     CostLedger& ledger, std::map<ToolId, double>* scores,
                                     std::size_t window) {
  charge(graph, s3, 4, ledger, window);
  std::optional<ToolId> best;
  double best_score = 0;
  for (const auto& id : s3) {
    ++ledger.scorer_calls[4];
    double s = guarded(id, ledger, [&] { return scorer.score(goal, graph.node(id).record); });
    if (scores) (*scores)[id] = s;
    if (!best || s > best_score || (s == best_score && id < *best)) {
      best = id;
      best_score = s;
    }
  }
  return best;
}

}  // namespace

std::vector<ToolId> l1_filter(const LibraryGraph& graph, const SubGoal& goal, CostLedger& ledger) {
  auto r = graph.index().lookup(goal.goal_sig, graph.lattice());
  ledger.unify_visits += r.visits;
  return std::move(r.ids);
}

std::vector<ToolId> l2_rank(const LibraryGraph& graph, const SubGoal& goal,
                            const std::vector<ToolId>& s1, const RelevanceScorer& scorer,
                            std::size_t k2, CostLedger& ledger, std::map<ToolId, double>* scores) {
  return l2_rank_impl(graph, goal, s1, scorer, k2, ledger, scores, 0);
}

std::vector<ToolId> l3_filter(const LibraryGraph& graph, const SubGoal& goal,
                              const std::vector<ToolId>& s2, const SpecChecker& checker,
                              CostLedger& ledger, std::map<ToolId, std::string>* reasons) {
  return l3_filter_impl(graph, goal, s2, checker, ledger, reasons, 0);
}

std::optional<ToolId> l4_select(const LibraryGraph& graph, const SubGoal& goal,
                                const std::vector<ToolId>& s3, const ExampleScorer& scorer,
                                CostLedger& ledger, std::map<ToolId, double>* scores) {
  return l4_select_impl(graph, goal, s3, scorer, ledger, scores, 0);
}

CascadeTrace retrieve(const LibraryGraph& graph, const SubGoal& goal, const Scorers& scorers,
                      const RetrievalConfig& config) {
  validate(goal);
  CascadeTrace t;
  t.s1 = l1_filter(graph, goal, t.ledger);
  t.s2 = l2_rank_impl(graph, goal, t.s1, *scorers.relevance, config.k2, t.ledger, &t.l2_scores,
                      config.context_window);
  t.s3 = l3_filter_impl(graph, goal, t.s2, *scorers.spec, t.ledger, &t.l3_reasons,
                        config.context_window);
  t.winner = l4_select_impl(graph, goal, t.s3, *scorers.examples, t.ledger, &t.l4_scores,
                            config.context_window);
  if (t.winner) {
    t.s4 = {*t.winner};
    const auto& n = graph.node(*t.winner);
    t.features = GraphFeatures{n.depth, n.distinct_children(), graph.subgraph_size(n.id)};
  }
  return t;
}

std::vector<ToolId> ExpandedTrace::resolved() const {
  if (trace.winner) return {*trace.winner};
  std::vector<ToolId> out;
  for (const auto& p : parts) {
    auto r = p.resolved();
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

ExpandedTrace retrieve_expanding(const LibraryGraph& graph, const SubGoal& goal,
                                 const Scorers& scorers, const RetrievalConfig& config,
                                 std::optional<std::size_t> max_levels) {
  const std::size_t levels = max_levels.value_or(graph.max_depth());
  ExpandedTrace out;
  out.trace = retrieve(graph, goal, scorers, config);
  out.total = out.trace.ledger;
  if (out.trace.winner || levels == 0) return out;

  // s2 is already in descending L2 order.
  for (const auto& id : out.trace.s2) {
    const auto& n = graph.node(id);
    if (n.kind != ToolKind::Composite || !out.trace.l3_reasons.count(id)) continue;
    out.expanded = id;
    for (const auto& call : n.body) {
      const auto& child = graph.node(call.callee);
      if (!child.record.sig.is_ground()) continue;
      SubGoal part;
      part.goal_sig = child.record.sig;
      part.intent = child.record.description.empty() ? child.id : child.record.description;
      part.available_facts = goal.available_facts;
      part.budget = goal.budget;
      auto sub = retrieve_expanding(graph, part, scorers, config, levels - 1);
      out.total += sub.total;
      out.parts.push_back(std::move(sub));
    }
    break;
  }
  return out;
}

}  // namespace tooldag
