#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tooldag/signature_index.hpp"
#include "tooldag/tool_record.hpp"
#include "tooldag/type_term.hpp"

namespace tooldag {

enum class ToolKind { Primitive, Composite };

std::string to_string(ToolKind kind);

struct ToolNode {
  ToolId id;
  ToolKind kind = ToolKind::Primitive;
  ToolRecord record;
  // Callee multiset in body order; a child called k times appears k times.
  std::vector<ToolId> children;
  std::vector<Call> body;
  std::size_t depth = 0;
  // Multiplicity-counted primitive leaves of the full expansion. Fixed at
  // commit: children never change after they are committed.
  std::uint64_t flat = 1;
  // Graph version at which the node was committed.
  std::uint64_t since = 0;

  std::vector<ToolId> distinct_children() const;
};

ToolNode make_primitive(ToolId id, ToolRecord record);
// Children and deps are derived from the body.
ToolNode make_composite(ToolId id, ToolRecord record, std::vector<Call> body);

enum class RejectReason { MissingChild, SpecFailure, Cycle, MalformedRecord };

std::string to_string(RejectReason reason);

struct InsertOutcome {
  enum class Kind { Added, Merged, Rejected };

  Kind kind = Kind::Rejected;
  // Added: the new id. Merged: the target. Rejected: the candidate id.
  ToolId id;
  std::size_t appended_examples = 0;
  RejectReason reason = RejectReason::MalformedRecord;
  std::string detail;

  bool added() const noexcept { return kind == Kind::Added; }
  bool merged() const noexcept { return kind == Kind::Merged; }
  bool rejected() const noexcept { return kind == Kind::Rejected; }
};

// "Added(x)", "Merged(into=x, appended=2)", "Rejected(Cycle)".
std::string to_string(const InsertOutcome& outcome);

struct Rejection {
  ToolId candidate;
  RejectReason reason;
  std::string detail;
  std::uint64_t version;
};

struct DedupDecision {
  std::optional<ToolId> merge_into;
  bool distinct() const noexcept { return !merge_into.has_value(); }
};

// The compositional tool DAG. Readers may share a const graph; mutation
// (insert_tool, restore) needs exclusive access.
class LibraryGraph {
 public:
  LibraryGraph();
  LibraryGraph(TypeRegistry registry, SubtypeLattice lattice);

  // Validate, check acyclicity, deduplicate, then commit. A rejection leaves
  // every serialized field untouched; only the in-memory rejection ledger
  // grows.
  InsertOutcome insert_tool(const ToolNode& candidate);

  // Would adding `candidate_id` with edges to `children` keep the graph
  // acyclic? `visits` receives the nodes plus edges traversed.
  bool check_acyclic(const std::vector<ToolId>& children, const ToolId& candidate_id,
                     std::size_t* visits = nullptr) const;

  DedupDecision dedup_decision(const ToolNode& candidate) const;

  // Throws UnknownTool.
  std::uint64_t flat_size(const ToolId& id) const;
  std::uint64_t saved_calls(const ToolId& id) const;

  const ToolNode& node(const ToolId& id) const;
  const ToolNode* find(const ToolId& id) const;
  bool contains(const ToolId& id) const { return nodes_.count(id) > 0; }

  const std::map<ToolId, ToolNode>& nodes() const noexcept { return nodes_; }
  const std::set<std::pair<ToolId, ToolId>>& edges() const noexcept { return edges_; }
  const SignatureIndex& index() const noexcept { return index_; }
  const TypeRegistry& registry() const noexcept { return registry_; }
  const SubtypeLattice& lattice() const noexcept { return lattice_; }
  void set_input_match(InputMatch mode) { lattice_.set_input_match(mode); }

  std::uint64_t version() const noexcept { return version_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t primitive_count() const;
  std::size_t composite_count() const;
  std::size_t max_depth() const;

  const std::vector<Rejection>& rejections() const noexcept { return rejections_; }

  // Node-plus-edge visits of the acyclicity traversal in the last insert.
  std::size_t last_insert_work() const noexcept { return last_insert_work_; }

  // Distinct nodes reachable from `id`, itself included.
  std::size_t subgraph_size(const ToolId& id) const;

  // (depth, id) order: every child precedes its parents.
  std::vector<ToolId> topological_order() const;

  // Commit a node read back from storage. Children must already exist; the
  // depth and flat size are recomputed, the stored `since` is kept.
  // Throws ParseError or DepthMismatch (when expected_depth disagrees).
  void restore(ToolNode node, std::optional<std::size_t> expected_depth);
  void set_version(std::uint64_t v) { version_ = v; }

 private:
  std::optional<std::string> malformed(const ToolNode& c) const;
  std::optional<std::string> spec_failure(const ToolNode& c) const;
  void commit(ToolNode node);
  InsertOutcome reject(const ToolNode& c, RejectReason reason, std::string detail);

  TypeRegistry registry_;
  SubtypeLattice lattice_;
  std::map<ToolId, ToolNode> nodes_;
  std::set<std::pair<ToolId, ToolId>> edges_;
  std::map<ToolId, std::vector<ToolId>> out_edges_;
  std::map<std::string, std::set<ToolId>> by_erased_;
  SignatureIndex index_;
  std::uint64_t version_ = 0;
  std::vector<Rejection> rejections_;
  std::size_t last_insert_work_ = 0;
};

}  // namespace tooldag
