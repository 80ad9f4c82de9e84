#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "tooldag/type_term.hpp"

namespace tooldag {

using ToolId = std::string;

struct LookupResult {
  std::vector<ToolId> ids;  // sorted by tool id
  // Bucket probes + trie nodes walked + unification work on trie members.
  std::size_t visits = 0;
};

// L1 lookup structure. Ground signatures are hashed by their printed form;
// polymorphic signatures sit in a trie keyed by the preorder symbol path of
// the signature up to its first type variable. Lookups only re-run
// unification for trie members; bucket hits are matches by construction.
class SignatureIndex {
 public:
  SignatureIndex();
  SignatureIndex(const SignatureIndex& other);
  SignatureIndex& operator=(const SignatureIndex& other);
  SignatureIndex(SignatureIndex&&) noexcept;
  SignatureIndex& operator=(SignatureIndex&&) noexcept;
  ~SignatureIndex();

  // Throws DuplicateToolId.
  void insert(const Signature& sig, const ToolId& id);

  LookupResult lookup(const Signature& goal, const SubtypeLattice& lattice) const;

  bool contains(const ToolId& id) const { return sigs_.count(id) > 0; }
  std::size_t size() const noexcept { return sigs_.size(); }
  std::size_t bucket_count() const noexcept { return buckets_.size(); }
  const std::set<ToolId>* bucket(const std::string& erased) const;

  // Members of the trie node reached by following `path` exactly, or null.
  const std::set<ToolId>* trie_members(const std::vector<std::string>& path) const;

  // Symbol path used as the trie key: "#<arity>" then one symbol per term
  // node in preorder, stopping before the first type variable.
  static std::vector<std::string> trie_path(const Signature& sig);

 private:
  struct TrieNode;

  std::map<std::string, std::set<ToolId>> buckets_;
  std::unique_ptr<TrieNode> trie_;
  std::map<ToolId, Signature> sigs_;
};

}  // namespace tooldag
