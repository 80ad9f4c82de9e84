#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "../support/quadratic.hpp"
#include "tooldag/error.hpp"
#include "tooldag/persistence.hpp"
#include "tooldag/random.hpp"
#include "tooldag/sim.hpp"

using namespace tooldag;

namespace {

std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

Errc code_of(const std::string& text, std::size_t* line = nullptr) {
  try {
    parse_library(text);
  } catch (const Error& e) {
    if (line) *line = e.where();
    return e.code();
  }
  FAIL("parsed without error");
  return Errc::InvalidArgument;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  auto p = s.find(from);
  REQUIRE(p != std::string::npos);
  return s.replace(p, from.size(), to);
}

LibraryGraph random_graph(std::uint64_t seed) {
  Rng rng(seed);
  LibraryGraph g(TypeRegistry::standard(),
                 SubtypeLattice(std::vector<std::pair<std::string, std::string>>{{"int", "float"}, {"bool", "int"}}));
  const char* types[] = {"int", "float", "list[int]", "dict[str, float]", "Frame"};
  std::vector<ToolId> ids;
  for (int i = 0; i < 60; ++i) {
    ToolRecord r;
    auto arity = 1 + rng.below(2);
    for (std::size_t k = 0; k < arity; ++k) r.sig.inputs.push_back(parse_type(types[rng.below(5)]));
    r.sig.output = parse_type(types[rng.below(5)]);
    r.description = "tool \"" + std::to_string(i) + "\" does\tthings";
    if (rng.bernoulli(0.5)) r.tags = {"t" + std::to_string(rng.below(4)), "misc"};
    if (rng.bernoulli(0.3)) {
      r.spec.pre_text = "free text, with a comma";
    } else if (rng.bernoulli(0.3)) {
      r.spec.pre = {"p" + std::to_string(i)};
    }
    r.spec.post = "post " + std::to_string(i);
    r.spec.complexity = static_cast<Complexity>(rng.below(5));
    std::string in;
    for (std::size_t k = 0; k < arity; ++k) in += (k ? ", " : "") + std::to_string(k) + "/3";
    r.examples = {{"(" + in + ")", "[1, 2]"}, {"(" + in.substr(0, in.size() - 2) + "7)", "\"s\""}};
    ToolNode n;
    if (ids.size() > 3 && rng.bernoulli(0.5)) {
      std::vector<Call> body;
      auto m = 1 + rng.below(3);
      for (std::size_t k = 0; k < m; ++k) {
        const auto& callee = g.node(ids[rng.below(ids.size())]);
        Call c{callee.id, {}};
        for (std::size_t a = 0; a < callee.record.sig.inputs.size(); ++a) {
          auto pick = rng.below(3);
          if (pick == 0 && k > 0) c.args.push_back(Arg::result(k - 1));
          else if (pick == 1) c.args.push_back(Arg::constant(Rational(-3, 4)));
          else c.args.push_back(Arg::param(rng.below(arity)));
        }
        body.push_back(c);
      }
      // free text cannot discharge atoms, so composites carry the children's atoms
      r.spec.pre_text.reset();
      for (const auto& c : body) {
        const auto& cs = g.node(c.callee).record.spec;
        r.spec.pre.insert(cs.pre.begin(), cs.pre.end());
      }
      n = make_composite("c" + std::to_string(i), r, body);
    } else {
      n = make_primitive("p" + std::to_string(i), r);
    }
    if (g.insert_tool(n).added()) ids.push_back(n.id);
  }
  return g;
}

}  // namespace

TEST_CASE("save then load reproduces the library byte for byte") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    auto g = random_graph(seed);
    REQUIRE(g.composite_count() > 5);
    auto text = library_text(g);
    auto back = parse_library(text);
    CHECK(library_text(back) == text);
    CHECK(back.version() == g.version());
    for (const auto& [id, n] : g.nodes()) {
      const auto& m = back.node(id);
      CHECK(m.record == n.record);
      CHECK(m.body == n.body);
      CHECK(m.children == n.children);
      CHECK(m.depth == n.depth);
      CHECK(m.flat == n.flat);
      CHECK(m.since == n.since);
    }
    CHECK(back.edges() == g.edges());
    CHECK(back.lattice().base_leq("bool", "float"));
  }
  auto path = std::filesystem::temp_directory_path() / "tooldag_roundtrip.txt";
  auto g = random_graph(9);
  save_library(g, path.string());
  CHECK(library_text(load_library(path.string())) == library_text(g));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_library("/nonexistent/dir/lib.txt"), Error);
}

TEST_CASE("a hand-written record loads at depth zero") {
  auto g = load_library(fixture("add_record.txt"));
  REQUIRE(g.contains("add"));
  const auto& add = g.node("add");
  CHECK(add.depth == 0);
  CHECK(add.kind == ToolKind::Primitive);
  CHECK(add.since == 1);
  CHECK_FALSE(add.record.spec.structured());
  CHECK(add.record.spec.pre_text == "a, b are finite floats");
  CHECK(add.record.examples.size() == 3);
  CHECK(add.record.examples[1].input == "(-1.5, 2.5)");
  CHECK(g.version() == 1);
}

TEST_CASE("structural errors in a file are located") {
  auto g = sim::arithmetic_library();
  REQUIRE(g.insert_tool(quadratic_expr()).added());
  const auto text = library_text(g);

  SUBCASE("missing child") {
    auto start = text.find("name : pow_int");
    auto end = text.find("\nname : ", start + 1);
    auto cut = text.substr(0, start) + text.substr(end + 1);
    std::size_t line = 0;
    CHECK(code_of(cut, &line) == Errc::ParseError);
    std::size_t qline = 1 + std::count(cut.begin(), cut.begin() + cut.find("name : quadratic_expr"), '\n');
    CHECK(line == qline);
  }
  SUBCASE("declared depth disagrees with the recurrence") {
    auto bad = replace_once(text, "kind : composite\ndepth : 1", "kind : composite\ndepth : 2");
    CHECK(code_of(bad) == Errc::DepthMismatch);
  }
  SUBCASE("child written after its parent") {
    auto start = text.find("name : add");
    auto end = text.find("\nname : ", start + 1);
    auto block = text.substr(start, end + 1 - start);
    auto moved = text.substr(0, start) + text.substr(end + 1) + "\n" + block;
    CHECK(code_of(moved) == Errc::ParseError);
  }
  SUBCASE("garbage") {
    std::size_t line = 0;
    CHECK(code_of(replace_once(text, "L4 : [(1, 2) -> 3", "L4 : [(1, 2) => 3"), &line) == Errc::ParseError);
    CHECK(line > 5);
    CHECK(code_of(replace_once(text, "format : 1", "format : 2")) == Errc::ParseError);
    CHECK(code_of(replace_once(text, "kind : primitive", "kind : macro")) == Errc::ParseError);
    CHECK(code_of(text + "\nname : extra\nwat : 1\n") == Errc::ParseError);
    CHECK(code_of("") == Errc::ParseError);
  }
}

TEST_CASE("cycles in a file are refused") {
  const std::string text =
      "format : 1\nversion : 2\nbases : [float]\nctors : []\nlattice : []\n\n"
      "name : a\nkind : composite\nchildren : [b]\n"
      "L1 : a :: (float) -> float ; deps = [b]\nL2 : \"a\" ; tags = []\n"
      "L3 : pre = [] ; post = \"a\" ; complexity = O(1)\nL4 : [(1) -> 1, (2) -> 2]\nbody : [b($0)]\n\n"
      "name : b\nkind : composite\nchildren : [a]\n"
      "L1 : b :: (float) -> float ; deps = [a]\nL2 : \"b\" ; tags = []\n"
      "L3 : pre = [] ; post = \"b\" ; complexity = O(1)\nL4 : [(1) -> 1, (2) -> 2]\nbody : [a($0)]\n";
  CHECK(code_of(text) == Errc::CycleInFile);
  auto self = replace_once(replace_once(replace_once(text, "children : [b]", "children : [a]"), "deps = [b]", "deps = [a]"),
                           "body : [b($0)]", "body : [a($0)]");
  CHECK(code_of(self) == Errc::CycleInFile);
}

TEST_CASE("candidate files parse without depth or since") {
  auto lib = load_library(fixture("case_library.txt"));
  auto cands = load_candidates(fixture("case_candidates.txt"), lib.registry());
  REQUIRE(cands.size() == 3);
  CHECK(cands[0].node.id == "safe_div");
  CHECK_FALSE(cands[0].depth);
  CHECK_FALSE(cands[0].since);
  CHECK(cands[2].node.body.size() == 3);
  CHECK(cands[2].line > cands[1].line);
  auto again = parse_node_blocks(node_text(cands[2].node), &lib.registry());
  REQUIRE(again.size() == 1);
  CHECK(again[0].node.record == cands[2].node.record);
  CHECK(again[0].node.body == cands[2].node.body);
}

TEST_CASE("DOT export") {
  LibraryGraph empty;
  CHECK(dot_text(empty) == "digraph library {\n}\n");

  auto arith = sim::arithmetic_library();
  LibraryGraph g(arith.registry(), arith.lattice());
  for (const auto& id : {"add", "mul", "pow_int"}) REQUIRE(g.insert_tool(arith.node(id)).added());
  REQUIRE(g.insert_tool(quadratic_expr()).added());
  auto dot = dot_text(g);
  CHECK(dot.rfind("digraph library {\n", 0) == 0);
  CHECK(count(dot, "[label=") == 4);
  CHECK(count(dot, " -> ") == 3);
  CHECK(count(dot, "shape=box") == 1);
  CHECK(dot.find("\"quadratic_expr\" -> \"pow_int\";") != std::string::npos);
  CHECK(dot.find("\"quadratic_expr\" [label=\"quadratic_expr\\nd=1\", shape=box];") != std::string::npos);

  auto path = std::filesystem::temp_directory_path() / "tooldag_test.dot";
  export_dot(g, path.string());
  CHECK(read_file(path.string()) == dot);
  std::filesystem::remove(path);
}
