#include "tooldag/signature_index.hpp"

#include <algorithm>
#include <functional>

#include "tooldag/error.hpp"

namespace tooldag {

struct SignatureIndex::TrieNode {
  std::map<std::string, std::unique_ptr<TrieNode>> children;
  std::set<ToolId> members;

  std::unique_ptr<TrieNode> clone() const {
    auto n = std::make_unique<TrieNode>();
    n->members = members;
    for (const auto& [k, c] : children) n->children.emplace(k, c->clone());
    return n;
  }
};

SignatureIndex::SignatureIndex() : trie_(std::make_unique<TrieNode>()) {}

SignatureIndex::SignatureIndex(const SignatureIndex& other)
    : buckets_(other.buckets_), trie_(other.trie_->clone()), sigs_(other.sigs_) {}

SignatureIndex& SignatureIndex::operator=(const SignatureIndex& other) {
  if (this != &other) {
    buckets_ = other.buckets_;
    trie_ = other.trie_->clone();
    sigs_ = other.sigs_;
  }
  return *this;
}

SignatureIndex::SignatureIndex(SignatureIndex&&) noexcept = default;
SignatureIndex& SignatureIndex::operator=(SignatureIndex&&) noexcept = default;
SignatureIndex::~SignatureIndex() = default;

namespace {

// Returns false once a variable is reached.
bool push_symbols(const TypeTerm& t, std::vector<std::string>& out) {
  switch (t.kind()) {
    case TypeTerm::Kind::Var:
      return false;
    case TypeTerm::Kind::Base:
      out.push_back("b:" + t.name());
      return true;
    case TypeTerm::Kind::Constructor:
      out.push_back("c:" + t.name() + "/" + std::to_string(t.args().size()));
      for (const auto& a : t.args()) {
        if (!push_symbols(a, out)) return false;
      }
      return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> SignatureIndex::trie_path(const Signature& sig) {
  std::vector<std::string> out{"#" + std::to_string(sig.inputs.size())};
  for (const auto& t : sig.inputs) {
    if (!push_symbols(t, out)) return out;
  }
  push_symbols(sig.output, out);
  return out;
}

void SignatureIndex::insert(const Signature& sig, const ToolId& id) {
  if (sigs_.count(id)) throw Error(Errc::DuplicateToolId, id);
  sigs_.emplace(id, sig);
  if (sig.is_ground()) {
    buckets_[erased_key(sig)].insert(id);
    return;
  }
  TrieNode* node = trie_.get();
  for (const auto& sym : trie_path(sig)) {
    auto& child = node->children[sym];
    if (!child) child = std::make_unique<TrieNode>();
    node = child.get();
  }
  node->members.insert(id);
}

const std::set<ToolId>* SignatureIndex::bucket(const std::string& erased) const {
  auto it = buckets_.find(erased);
  return it == buckets_.end() ? nullptr : &it->second;
}

const std::set<ToolId>* SignatureIndex::trie_members(const std::vector<std::string>& path) const {
  const TrieNode* node = trie_.get();
  for (const auto& sym : path) {
    auto it = node->children.find(sym);
    if (it == node->children.end()) return nullptr;
    node = it->second.get();
  }
  return &node->members;
}

LookupResult SignatureIndex::lookup(const Signature& goal, const SubtypeLattice& lattice) const {
  if (!goal.is_ground()) throw Error(Errc::NonGroundGoal, to_string(goal));
  LookupResult result;
  std::set<ToolId> found;

  // Ground side: every signature the goal admits differs from it only at
  // top-level base positions, so the admissible keys are a small product.
  std::vector<std::vector<TypeTerm>> choices;
  const bool exact_inputs = lattice.input_match() == InputMatch::Exact;
  for (const auto& in : goal.inputs) {
    std::vector<TypeTerm> alts;
    if (in.is_base() && !exact_inputs) {
      for (auto& n : lattice.supertypes_of(in.name())) alts.push_back(TypeTerm::base(std::move(n)));
    } else {
      alts.push_back(in);
    }
    choices.push_back(std::move(alts));
  }
  std::vector<TypeTerm> outs;
  if (goal.output.is_base()) {
    for (auto& n : lattice.subtypes_of(goal.output.name())) outs.push_back(TypeTerm::base(std::move(n)));
  } else {
    outs.push_back(goal.output);
  }
  choices.push_back(std::move(outs));

  Signature probe;
  probe.inputs.resize(goal.inputs.size(), TypeTerm::base("unit"));
  std::function<void(std::size_t)> enumerate = [&](std::size_t pos) {
    if (pos == choices.size()) {
      ++result.visits;
      if (const auto* b = bucket(erased_key(probe))) found.insert(b->begin(), b->end());
      return;
    }
    for (const auto& alt : choices[pos]) {
      if (pos < goal.inputs.size()) {
        probe.inputs[pos] = alt;
      } else {
        probe.output = alt;
      }
      enumerate(pos + 1);
    }
  };
  enumerate(0);

  // Polymorphic side.
  const auto goal_path = trie_path(goal);
  std::function<void(const TrieNode*, std::size_t)> walk = [&](const TrieNode* node,
                                                               std::size_t depth) {
    ++result.visits;
    for (const auto& id : node->members) {
      auto u = unify(sigs_.at(id), goal, lattice);
      result.visits += u.visits;
      if (u.ok) found.insert(id);
    }
    if (depth >= goal_path.size()) return;
    const std::string& sym = goal_path[depth];
    if (auto it = node->children.find(sym); it != node->children.end()) {
      walk(it->second.get(), depth + 1);
    }
    if (sym.rfind("b:", 0) == 0) {
      const std::string name = sym.substr(2);
      for (const auto& [key, child] : node->children) {
        if (key == sym || key.rfind("b:", 0) != 0) continue;
        const std::string other = key.substr(2);
        if (lattice.base_leq(name, other) || lattice.base_leq(other, name)) {
          walk(child.get(), depth + 1);
        }
      }
    }
  };
  walk(trie_.get(), 0);

  result.ids.assign(found.begin(), found.end());
  return result;
}

}  // namespace tooldag
