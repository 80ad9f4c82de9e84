#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <functional>
#include <sstream>

#include "tooldag/error.hpp"
#include "tooldag/library_graph.hpp"
#include "tooldag/persistence.hpp"
#include "tooldag/random.hpp"

using namespace tooldag;

namespace {

ToolRecord rec(const std::string& sig, std::set<std::string> pre = {}, std::string post = "ok") {
  ToolRecord r;
  r.sig = parse_signature(sig);
  r.description = "tool " + sig;
  r.spec.pre = std::move(pre);
  r.spec.post = std::move(post);
  for (std::string v : {"1", "0"}) {
    std::string in;
    for (std::size_t i = 0; i < r.sig.inputs.size(); ++i) in += (i ? ", " : "") + v;
    r.examples.push_back({"(" + in + ")", v});
  }
  return r;
}

ToolNode binop(const std::string& id) {
  return make_primitive(id, rec("(float, float) -> float", {}, "post of " + id));
}

// composite id(a, b) = c1(a, b) then c2(%0, b) ...
ToolNode chain(const std::string& id, const std::vector<ToolId>& callees,
               const std::string& sig = "(float, float) -> float") {
  std::vector<Call> body;
  for (std::size_t i = 0; i < callees.size(); ++i) {
    body.push_back({callees[i], {i ? Arg::result(i - 1) : Arg::param(0), Arg::param(1)}});
  }
  auto r = rec(sig);
  r.description = id;
  r.spec.post = "post of " + id;
  return make_composite(id, r, body);
}

std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

}  // namespace

TEST_CASE("insert outcomes name the rule that fired") {
  LibraryGraph g;
  CHECK(to_string(g.insert_tool(binop("add"))) == "Added(add)");
  CHECK(g.version() == 1);
  CHECK(g.node("add").since == 1);

  auto missing = chain("c1", {"add", "nope"});
  CHECK(to_string(g.insert_tool(missing)) == "Rejected(MissingChild)");

  auto self = chain("loop", {"add", "loop"});
  CHECK(to_string(g.insert_tool(self)) == "Rejected(Cycle)");

  auto thin = binop("thin");
  thin.record.examples.pop_back();
  CHECK(to_string(g.insert_tool(thin)) == "Rejected(MalformedRecord)");

  auto bad_wire = chain("bad", {"add", "add"});
  bad_wire.body[0].args[0] = Arg::result(0);
  CHECK(g.insert_tool(bad_wire).reason == RejectReason::MalformedRecord);

  auto wrong_arity = chain("wa", {"add"});
  wrong_arity.body[0].args.pop_back();
  CHECK(g.insert_tool(wrong_arity).reason == RejectReason::MalformedRecord);

  auto guarded = make_primitive("div", rec("(float, float) -> float", {"nonzero-divisor"}, "quotient"));
  CHECK(g.insert_tool(guarded).added());
  auto unguarded = chain("ratio", {"div"});
  CHECK(to_string(g.insert_tool(unguarded)) == "Rejected(SpecFailure)");
  auto discharged = chain("ratio", {"div"});
  discharged.record.spec.pre = {"Nonzero-Divisor"};
  CHECK(g.insert_tool(discharged).added());

  CHECK(g.rejections().size() == 6);
  CHECK(g.rejections()[0].reason == RejectReason::MissingChild);
  CHECK(g.version() == 3);
}

TEST_CASE("near duplicates merge and append only unseen example inputs") {
  LibraryGraph g;
  g.insert_tool(binop("add"));
  auto twice = chain("double_add", {"add", "add"});
  REQUIRE(g.insert_tool(twice).added());
  const auto v = g.version();

  auto dup = chain("other_name", {"add", "add"}, "(float, float) -> float");
  dup.record.spec = g.node("double_add").record.spec;
  dup.record.examples = {{"(1, 1)", "1.0"}, {"(7, 7)", "9"}, {"(8, 8)", "3"}};
  auto o = g.insert_tool(dup);
  CHECK(to_string(o) == "Merged(into=double_add, appended=2)");
  CHECK(g.node("double_add").record.examples.size() == 4);
  CHECK(g.version() == v + 1);
  CHECK_FALSE(g.contains("other_name"));

  // a conflicting output on a shared input keeps them distinct
  auto clash = dup;
  clash.id = "clash";
  clash.record.examples = {{"(1, 1)", "5"}, {"(3, 3)", "0"}};
  CHECK(g.dedup_decision(clash).distinct());

  // same shape, different post: distinct
  auto other = chain("triple", {"add", "add"});
  other.record.spec.post = "something else";
  CHECK(g.insert_tool(other).added());

  // merge that appends nothing does not bump the version
  auto again = dup;
  auto v2 = g.version();
  CHECK(to_string(g.insert_tool(again)) == "Merged(into=double_add, appended=0)");
  CHECK(g.version() == v2);
}

TEST_CASE("depth, flat size and reachability match independent recomputation") {
  Rng rng(99);
  LibraryGraph g;
  std::vector<ToolId> ids;
  for (int i = 0; i < 6; ++i) {
    ids.push_back("p" + std::to_string(i));
    REQUIRE(g.insert_tool(binop(ids.back())).added());
  }
  for (int i = 0; i < 300; ++i) {
    std::vector<ToolId> callees;
    auto m = 1 + rng.below(4);
    for (std::size_t k = 0; k < m; ++k) callees.push_back(ids[rng.below(ids.size())]);
    auto c = chain("c" + std::to_string(i), callees);
    c.record.spec.post = "p" + std::to_string(i);
    if (g.insert_tool(c).added()) ids.push_back(c.id);
  }
  CHECK(g.composite_count() > 250);

  std::function<std::uint64_t(const ToolId&)> leaves = [&](const ToolId& id) -> std::uint64_t {
    const auto& n = g.node(id);
    if (n.kind == ToolKind::Primitive) return 1;
    std::uint64_t s = 0;
    for (const auto& call : n.body) s += leaves(call.callee);
    return s;
  };
  std::function<std::size_t(const ToolId&)> depth = [&](const ToolId& id) -> std::size_t {
    std::size_t d = 0;
    for (const auto& c : g.node(id).children) d = std::max(d, depth(c) + 1);
    return d;
  };
  std::function<void(const ToolId&, std::set<ToolId>&)> reach = [&](const ToolId& id, std::set<ToolId>& s) {
    if (!s.insert(id).second) return;
    for (const auto& c : g.node(id).children) reach(c, s);
  };
  for (const auto& [id, n] : g.nodes()) {
    CHECK(g.flat_size(id) == leaves(id));
    CHECK(n.depth == depth(id));
    std::set<ToolId> s;
    reach(id, s);
    CHECK(g.subgraph_size(id) == s.size());
    CHECK(g.saved_calls(id) == g.flat_size(id) - 1);
  }
  // topological order puts every child first
  std::map<ToolId, std::size_t> pos;
  auto order = g.topological_order();
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  for (const auto& [parent, child] : g.edges()) CHECK(pos[child] < pos[parent]);
  CHECK_THROWS_AS(g.flat_size("ghost"), Error);
}

TEST_CASE("acyclicity check only walks what it must") {
  LibraryGraph g;
  g.insert_tool(binop("a"));
  g.insert_tool(chain("b", {"a"}));
  g.insert_tool(chain("c", {"b", "a"}));
  std::size_t visits = 99;
  CHECK(g.check_acyclic({"c"}, "fresh", &visits));
  CHECK(visits == 0);
  CHECK_FALSE(g.check_acyclic({"c"}, "a", &visits));
  CHECK(visits <= g.size() + g.edges().size());
  CHECK(g.check_acyclic({"a"}, "c", &visits));
  CHECK_FALSE(g.check_acyclic({"x", "y"}, "y"));
}

TEST_CASE("a rejected insert leaves the serialized library byte-identical") {
  LibraryGraph g;
  g.insert_tool(binop("add"));
  g.insert_tool(make_primitive("div", rec("(float, float) -> float", {"nz"})));
  g.insert_tool(chain("twice", {"add", "add"}));
  const auto before = library_text(g);
  std::vector<ToolNode> bad = {chain("m", {"ghost"}), chain("twice", {"add", "twice"}),
                               chain("q", {"div"})};
  auto thin = binop("t");
  thin.record.examples.clear();
  bad.push_back(thin);
  for (const auto& b : bad) {
    CHECK(g.insert_tool(b).rejected());
    CHECK(library_text(g) == before);
  }
  CHECK(g.rejections().size() == bad.size());
}

TEST_CASE("case-study candidates reproduce their recorded outcomes") {
  auto g = load_library(fixture("case_library.txt"));
  auto candidates = load_candidates(fixture("case_candidates.txt"), g.registry());
  std::ifstream expected_file(fixture("case_outcomes.txt"));
  std::vector<std::string> expected;
  for (std::string line; std::getline(expected_file, line);) expected.push_back(line);
  REQUIRE(candidates.size() == expected.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto before = library_text(g);
    auto o = g.insert_tool(candidates[i].node);
    CHECK(to_string(o) == expected[i]);
    if (o.rejected()) CHECK(library_text(g) == before);
  }
  CHECK(g.node("sum_where").record.examples.size() == 4);
  CHECK(g.rejections()[0].detail.find("nonzero-divisor") != std::string::npos);
}
