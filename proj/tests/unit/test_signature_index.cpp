#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>

#include "tooldag/error.hpp"
#include "tooldag/random.hpp"
#include "tooldag/signature_index.hpp"

using namespace tooldag;

namespace {

const char* kBases[] = {"int", "float", "bool", "str"};

TypeTerm term(Rng& rng, int depth, double var_p) {
  if (rng.bernoulli(var_p)) return TypeTerm::var("V" + std::to_string(rng.below(2)));
  auto pick = rng.below(depth > 0 ? 6 : 4);
  if (pick < 4) return TypeTerm::base(kBases[pick]);
  if (pick == 4) return TypeTerm::ctor("list", {term(rng, depth - 1, var_p)});
  return TypeTerm::ctor("dict", {term(rng, depth - 1, var_p), term(rng, depth - 1, var_p)});
}

Signature sig(Rng& rng, double var_p) {
  Signature s;
  auto n = 1 + rng.below(2);
  for (std::size_t i = 0; i < n; ++i) s.inputs.push_back(term(rng, 1, var_p));
  s.output = term(rng, 1, var_p);
  return s;
}

}  // namespace

TEST_CASE("index lookup equals a full unification scan") {
  Rng rng(2024);
  std::size_t nonempty = 0;
  for (int lib = 0; lib < 20; ++lib) {
    SignatureIndex index;
    std::map<ToolId, Signature> all;
    for (int i = 0; i < 150; ++i) {
      auto s = sig(rng, lib % 2 ? 0.25 : 0.1);
      ToolId id = "t" + std::to_string(i);
      index.insert(s, id);
      all.emplace(id, s);
    }
    SubtypeLattice lat(std::vector<std::pair<std::string, std::string>>{{"int", "float"}},
                       lib % 3 == 0 ? InputMatch::Exact : InputMatch::Contravariant);
    for (int q = 0; q < 50; ++q) {
      // half the goals are copies of a stored signature made ground
      Signature goal = sig(rng, 0.0);
      if (q % 2) {
        auto it = std::next(all.begin(), static_cast<long>(rng.below(all.size())));
        goal = it->second;
        Substitution ground{{"V0", TypeTerm::base("int")}, {"V1", TypeTerm::base("str")}};
        goal = tooldag::apply(ground, goal);
      }
      std::vector<ToolId> expect;
      for (const auto& [id, s] : all) {
        if (unify(s, goal, lat).ok) expect.push_back(id);
      }
      auto got = index.lookup(goal, lat);
      CHECK(got.ids == expect);
      nonempty += !expect.empty();
    }
  }
  CHECK(nonempty > 400);
}

TEST_CASE("duplicate ids are refused and trie paths stop at the first variable") {
  SignatureIndex index;
  index.insert(parse_signature("(int) -> int"), "a");
  CHECK_THROWS_AS(index.insert(parse_signature("(float) -> int"), "a"), Error);
  auto path = SignatureIndex::trie_path(parse_signature("(list[?T], int) -> ?T"));
  CHECK(path == std::vector<std::string>{"#2", "c:list/1"});
  CHECK(SignatureIndex::trie_path(parse_signature("(int, ?T) -> int")) == std::vector<std::string>{"#2", "b:int"});
}
