#include "tooldag/library_graph.hpp"

#include <algorithm>
#include <limits>

#include "tooldag/error.hpp"
#include "tooldag/text.hpp"

namespace tooldag {

std::string to_string(ToolKind kind) {
  return kind == ToolKind::Primitive ? "primitive" : "composite";
}

std::string to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::MissingChild: return "MissingChild";
    case RejectReason::SpecFailure: return "SpecFailure";
    case RejectReason::Cycle: return "Cycle";
    case RejectReason::MalformedRecord: return "MalformedRecord";
  }
  return "MalformedRecord";
}

std::string to_string(const InsertOutcome& o) {
  switch (o.kind) {
    case InsertOutcome::Kind::Added:
      return "Added(" + o.id + ")";
    case InsertOutcome::Kind::Merged:
      return "Merged(into=" + o.id + ", appended=" + std::to_string(o.appended_examples) + ")";
    case InsertOutcome::Kind::Rejected:
      return "Rejected(" + to_string(o.reason) + ")";
  }
  return "?";
}

std::vector<ToolId> ToolNode::distinct_children() const {
  std::vector<ToolId> out;
  for (const auto& c : children) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

ToolNode make_primitive(ToolId id, ToolRecord record) {
  ToolNode n;
  n.id = std::move(id);
  n.kind = ToolKind::Primitive;
  n.record = std::move(record);
  n.record.deps.clear();
  return n;
}

ToolNode make_composite(ToolId id, ToolRecord record, std::vector<Call> body) {
  ToolNode n;
  n.id = std::move(id);
  n.kind = ToolKind::Composite;
  n.record = std::move(record);
  n.body = std::move(body);
  for (const auto& call : n.body) n.children.push_back(call.callee);
  n.record.deps = n.distinct_children();
  return n;
}

LibraryGraph::LibraryGraph() : LibraryGraph(TypeRegistry::standard(), SubtypeLattice()) {}

LibraryGraph::LibraryGraph(TypeRegistry registry, SubtypeLattice lattice)
    : registry_(std::move(registry)), lattice_(std::move(lattice)) {}

const ToolNode* LibraryGraph::find(const ToolId& id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const ToolNode& LibraryGraph::node(const ToolId& id) const {
  if (const auto* n = find(id)) return *n;
  throw Error(Errc::UnknownTool, id);
}

std::uint64_t LibraryGraph::flat_size(const ToolId& id) const { return node(id).flat; }

std::uint64_t LibraryGraph::saved_calls(const ToolId& id) const { return node(id).flat - 1; }

std::size_t LibraryGraph::primitive_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& kv) {
    return kv.second.kind == ToolKind::Primitive;
  }));
}

std::size_t LibraryGraph::composite_count() const { return nodes_.size() - primitive_count(); }

std::size_t LibraryGraph::max_depth() const {
  std::size_t d = 0;
  for (const auto& [id, n] : nodes_) d = std::max(d, n.depth);
  return d;
}

std::size_t LibraryGraph::subgraph_size(const ToolId& id) const {
  node(id);
  std::set<ToolId> seen{id};
  std::vector<ToolId> stack{id};
  while (!stack.empty()) {
    ToolId cur = std::move(stack.back());
    stack.pop_back();
    auto it = out_edges_.find(cur);
    if (it == out_edges_.end()) continue;
    for (const auto& c : it->second) {
      if (seen.insert(c).second) stack.push_back(c);
    }
  }
  return seen.size();
}

std::vector<ToolId> LibraryGraph::topological_order() const {
  std::vector<const ToolNode*> all;
  all.reserve(nodes_.size());
  for (const auto& [id, n] : nodes_) all.push_back(&n);
  std::stable_sort(all.begin(), all.end(),
                   [](const ToolNode* a, const ToolNode* b) { return a->depth < b->depth; });
  std::vector<ToolId> out;
  out.reserve(all.size());
  for (const auto* n : all) out.push_back(n->id);
  return out;
}

bool LibraryGraph::check_acyclic(const std::vector<ToolId>& children, const ToolId& candidate_id,
                                 std::size_t* visits) const {
  std::size_t work = 0;
  bool acyclic = true;
  if (std::find(children.begin(), children.end(), candidate_id) != children.end()) {
    acyclic = false;
  } else if (contains(candidate_id)) {
    // Only an existing node can be reached from the candidate's children.
    std::set<ToolId> seen;
    std::vector<ToolId> stack;
    for (const auto& c : children) {
      if (seen.insert(c).second) stack.push_back(c);
    }
    while (acyclic && !stack.empty()) {
      ToolId cur = std::move(stack.back());
      stack.pop_back();
      ++work;
      if (cur == candidate_id) {
        acyclic = false;
        break;
      }
      auto it = out_edges_.find(cur);
      if (it == out_edges_.end()) continue;
      for (const auto& next : it->second) {
        ++work;
        if (seen.insert(next).second) stack.push_back(next);
      }
    }
  }
  if (visits) *visits = work;
  return acyclic;
}

namespace {

bool same_value_text(const std::string& a, const std::string& b) {
  if (text::trim(a) == text::trim(b)) return true;
  auto x = parse_rational(a);
  auto y = parse_rational(b);
  return x && y && *x == *y;
}

std::set<std::string> normalized_atoms(const std::set<std::string>& atoms) {
  std::set<std::string> out;
  for (const auto& a : atoms) out.insert(text::normalize_phrase(a));
  return out;
}

bool specs_equivalent(const Spec& a, const Spec& b) {
  if (a.complexity != b.complexity) return false;
  if (text::normalize_phrase(a.post) != text::normalize_phrase(b.post)) return false;
  if (a.structured() != b.structured()) return false;
  if (!a.structured()) return text::normalize_phrase(*a.pre_text) == text::normalize_phrase(*b.pre_text);
  return normalized_atoms(a.pre) == normalized_atoms(b.pre);
}

bool examples_agree(const std::vector<Example>& a, const std::vector<Example>& b) {
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (x.input == y.input && !same_value_text(x.output, y.output)) return false;
    }
  }
  return true;
}

}  // namespace

DedupDecision LibraryGraph::dedup_decision(const ToolNode& candidate) const {
  auto it = by_erased_.find(erased_key(candidate.record.sig));
  if (it == by_erased_.end()) return {};
  // by_erased_ sets iterate in id order, so the first hit is the smallest id.
  for (const auto& id : it->second) {
    const auto& u = nodes_.at(id);
    if (!alpha_equivalent(u.record.sig, candidate.record.sig)) continue;
    if (!specs_equivalent(u.record.spec, candidate.record.spec)) continue;
    if (!examples_agree(candidate.record.examples, u.record.examples)) continue;
    return {id};
  }
  return {};
}

std::optional<std::string> LibraryGraph::malformed(const ToolNode& c) const {
  const auto& r = c.record;
  if (c.id.empty()) return "empty tool id";
  try {
    for (const auto& t : r.sig.inputs) registry_.check(t);
    registry_.check(r.sig.output);
  } catch (const Error& e) {
    return e.what();
  }
  if (r.examples.size() < 2) return "fewer than 2 L4 examples";
  for (const auto& ex : r.examples) {
    auto inner = std::string_view(ex.input).substr(1, ex.input.size() - 2);
    if (text::split_top_level(inner, ',').size() != r.sig.inputs.size()) {
      return "L4 example " + ex.input + " does not match the input arity";
    }
  }
  const bool primitive = c.kind == ToolKind::Primitive;
  if (primitive != c.body.empty()) return "kind does not match body";
  if (primitive != c.children.empty()) return "kind does not match children";
  std::vector<ToolId> callees;
  for (const auto& call : c.body) callees.push_back(call.callee);
  if (callees != c.children) return "children differ from the body's callees";
  {
    auto deps = r.deps;
    auto distinct = c.distinct_children();
    std::sort(deps.begin(), deps.end());
    std::sort(distinct.begin(), distinct.end());
    if (std::adjacent_find(deps.begin(), deps.end()) != deps.end() || deps != distinct) {
      return "deps list must name exactly the distinct children";
    }
  }
  for (std::size_t i = 0; i < c.body.size(); ++i) {
    for (const auto& a : c.body[i].args) {
      if (a.kind == Arg::Kind::Param && a.index >= r.sig.inputs.size()) {
        return "call " + std::to_string(i) + " uses an undeclared parameter";
      }
      if (a.kind == Arg::Kind::Result && a.index >= i) {
        return "call " + std::to_string(i) + " reads a result that is not yet computed";
      }
    }
  }
  return std::nullopt;
}

std::optional<std::string> LibraryGraph::spec_failure(const ToolNode& c) const {
  if (c.kind == ToolKind::Primitive) return std::nullopt;
  const auto& own = c.record.spec;
  std::set<std::string> established;
  if (own.structured()) established = normalized_atoms(own.pre);
  for (const auto& call : c.body) {
    const ToolNode* callee = find(call.callee);
    if (callee && callee->record.spec.structured()) {
      if (!own.structured()) {
        if (!callee->record.spec.pre.empty()) {
          return "free-text precondition cannot discharge " + call.callee + "'s atoms";
        }
      } else {
        for (const auto& atom : callee->record.spec.pre) {
          if (!established.count(text::normalize_phrase(atom))) {
            return "L3(" + call.callee + ") requires '" + atom + "', which nothing establishes";
          }
        }
      }
    }
    if (callee) established.insert(text::normalize_phrase(callee->record.spec.post));
  }
  return std::nullopt;
}

InsertOutcome LibraryGraph::reject(const ToolNode& c, RejectReason reason, std::string detail) {
  rejections_.push_back({c.id, reason, detail, version_});
  InsertOutcome o;
  o.kind = InsertOutcome::Kind::Rejected;
  o.id = c.id;
  o.reason = reason;
  o.detail = std::move(detail);
  return o;
}

InsertOutcome LibraryGraph::insert_tool(const ToolNode& c) {
  last_insert_work_ = 0;
  if (auto why = malformed(c)) return reject(c, RejectReason::MalformedRecord, *why);

  for (const auto& child : c.children) {
    if (child != c.id && !contains(child)) {
      return reject(c, RejectReason::MissingChild, "unknown child " + child);
    }
  }
  for (const auto& call : c.body) {
    const ToolNode* callee = find(call.callee);
    if (callee && callee->record.sig.inputs.size() != call.args.size()) {
      return reject(c, RejectReason::MalformedRecord,
                    "call to " + call.callee + " has the wrong arity");
    }
  }

  if (auto why = spec_failure(c)) return reject(c, RejectReason::SpecFailure, *why);

  std::size_t work = 0;
  bool acyclic = check_acyclic(c.distinct_children(), c.id, &work);
  last_insert_work_ = work;
  if (!acyclic) return reject(c, RejectReason::Cycle, c.id + " would reach itself");

  if (auto d = dedup_decision(c); d.merge_into) {
    ToolNode& target = nodes_.at(*d.merge_into);
    std::size_t appended = 0;
    for (const auto& ex : c.record.examples) {
      auto& existing = target.record.examples;
      bool present = std::any_of(existing.begin(), existing.end(),
                                 [&](const Example& e) { return e.input == ex.input; });
      if (!present) {
        existing.push_back(ex);
        ++appended;
      }
    }
    if (appended) ++version_;
    InsertOutcome o;
    o.kind = InsertOutcome::Kind::Merged;
    o.id = *d.merge_into;
    o.appended_examples = appended;
    return o;
  }

  if (contains(c.id)) {
    return reject(c, RejectReason::MalformedRecord, "id " + c.id + " is already in use");
  }

  std::uint64_t flat = 0;
  if (c.kind == ToolKind::Primitive) {
    flat = 1;
  } else {
    for (const auto& child : c.children) {
      std::uint64_t f = nodes_.at(child).flat;
      if (flat > std::numeric_limits<std::uint64_t>::max() - f) {
        return reject(c, RejectReason::MalformedRecord, "expansion size overflows");
      }
      flat += f;
    }
  }

  ToolNode n = c;
  n.flat = flat;
  n.since = version_ + 1;
  commit(std::move(n));
  InsertOutcome o;
  o.kind = InsertOutcome::Kind::Added;
  o.id = c.id;
  return o;
}

void LibraryGraph::commit(ToolNode n) {
  n.depth = 0;
  for (const auto& child : n.distinct_children()) {
    n.depth = std::max(n.depth, nodes_.at(child).depth + 1);
    edges_.emplace(n.id, child);
    out_edges_[n.id].push_back(child);
  }
  for (const auto& t : n.record.sig.inputs) {
    if (t.is_base()) registry_.declare_base(t.name());
  }
  if (n.record.sig.output.is_base()) registry_.declare_base(n.record.sig.output.name());
  index_.insert(n.record.sig, n.id);
  by_erased_[erased_key(n.record.sig)].insert(n.id);
  ++version_;
  const ToolId id = n.id;
  nodes_.emplace(id, std::move(n));
}

void LibraryGraph::restore(ToolNode n, std::optional<std::size_t> expected_depth) {
  if (contains(n.id)) throw Error(Errc::ParseError, "duplicate tool " + n.id);
  if (auto why = malformed(n)) throw Error(Errc::ParseError, n.id + ": " + *why);
  std::uint64_t flat = n.kind == ToolKind::Primitive ? 1 : 0;
  std::size_t depth = 0;
  for (const auto& child : n.children) {
    const ToolNode* c = find(child);
    if (!c) throw Error(Errc::ParseError, n.id + " depends on missing tool " + child);
    flat += c->flat;
    depth = std::max(depth, c->depth + 1);
  }
  if (expected_depth && *expected_depth != depth) {
    throw Error(Errc::DepthMismatch, n.id + " declares depth " + std::to_string(*expected_depth) +
                                         ", recurrence gives " + std::to_string(depth));
  }
  n.flat = flat;
  const std::uint64_t keep_version = version_;
  commit(std::move(n));
  version_ = keep_version;
}

}  // namespace tooldag
