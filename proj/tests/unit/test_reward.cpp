#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "../support/quadratic.hpp"
#include "tooldag/error.hpp"
#include "tooldag/random.hpp"
#include "tooldag/reward.hpp"
#include "tooldag/sim.hpp"

using namespace tooldag;

namespace {

Trajectory traj(std::vector<ToolId> ids, std::uint64_t version, double r_res = 1.0) {
  Trajectory t;
  t.query_id = "q";
  t.graph_version = version;
  t.r_res = r_res;
  for (auto& id : ids) t.calls.push_back({id, {}, Rational(0), {}, ""});
  return t;
}

LibraryGraph with_quadratic() {
  auto g = sim::arithmetic_library();
  REQUIRE(g.insert_tool(quadratic_expr()).added());
  return g;
}

}  // namespace

TEST_CASE("composition reward and primitive workload on the quadratic") {
  auto g = with_quadratic();
  const auto v = g.version();
  CHECK(g.flat_size("quadratic_expr") == 5);
  CHECK(g.node("quadratic_expr").depth == 1);
  CHECK(comp_reward(g, traj({"add", "mul", "add"}, v)) == 0);
  CHECK(comp_reward(g, traj({"quadratic_expr", "add"}, v)) == 4);
  CHECK(prim_workload(g, traj({"quadratic_expr", "add"}, v)) == 6);
  CHECK(prim_workload(g, traj({"add"}, v)) == 1);

  auto b = shaped_reward(g, traj({"quadratic_expr", "add"}, v), 0.20);
  CHECK(b.r_comp == 4);
  CHECK(b.t_prim == 6);
  CHECK(b.t_calls == 2);
  CHECK(b.shaped == doctest::Approx(1.8));
  CHECK(b.shaped_exact == Rational(1) + Rational(0.20) * 4);
  CHECK(shaped_reward(g, traj({"quadratic_expr"}, v, 0.25), 0.0).shaped == 0.25);

  // padding with primitives never moves R_comp
  auto padded = traj({"quadratic_expr", "add", "neg", "sub", "add"}, v);
  CHECK(comp_reward(g, padded) == 4);

  // the composite against its own expansion: same workload
  CHECK(prim_workload(g, traj({"quadratic_expr"}, v)) ==
        prim_workload(g, traj({"pow_int", "mul", "mul", "add", "add"}, v)));
}

TEST_CASE("flat sizes are read at the trajectory's version") {
  auto g = sim::arithmetic_library();
  const auto before = g.version();
  REQUIRE(g.insert_tool(quadratic_expr()).added());
  CHECK_THROWS_AS(comp_reward(g, traj({"quadratic_expr"}, before)), Error);
  try {
    comp_reward(g, traj({"quadratic_expr"}, before));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownTool);
  }
  try {
    comp_reward(g, traj({"add"}, g.version() + 1));
    FAIL("accepted a future version");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::StaleVersion);
  }
  CHECK_THROWS_AS(prim_workload(g, traj({"nope"}, g.version())), Error);
  CHECK_THROWS_AS(shaped_reward(g, traj({"add"}, g.version(), 1.5), 0.2), Error);
  CHECK_THROWS_AS(shaped_reward(g, traj({"add"}, g.version()), -0.1), Error);
}

TEST_CASE("group advantage standardizes with the population deviation") {
  auto a = group_advantage({1.2, 0.8, 1.0, 1.0});
  REQUIRE(a.size() == 4);
  CHECK(a[0] == doctest::Approx(std::sqrt(2.0)));
  CHECK(a[1] == doctest::Approx(-std::sqrt(2.0)));
  CHECK(a[2] == doctest::Approx(0.0));
  CHECK(group_advantage({3, 3, 3}) == std::vector<double>{0, 0, 0});
  CHECK_THROWS_AS(group_advantage({1.0}), Error);
  try {
    group_advantage({});
  } catch (const Error& e) {
    CHECK(e.code() == Errc::GroupTooSmall);
  }

  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> r(2 + rng.below(10));
    for (auto& x : r) x = static_cast<double>(rng.below(5)) / 4;
    auto adv = group_advantage(r);
    double sum = 0, sq = 0;
    for (double x : adv) {
      sum += x;
      sq += x * x;
    }
    CHECK(std::abs(sum) < 1e-9);
    bool flat = std::all_of(r.begin(), r.end(), [&](double x) { return x == r[0]; });
    CHECK(sq == doctest::Approx(flat ? 0.0 : static_cast<double>(r.size())));
    for (std::size_t p = 0; p < r.size(); ++p) {
      for (std::size_t q = 0; q < r.size(); ++q) {
        if (r[p] > r[q]) CHECK(adv[p] > adv[q]);
      }
    }
  }
}

TEST_CASE("folding a primitive block into a composite widens the reward by lambda times its savings") {
  auto g = sim::arithmetic_library();
  Rng rng(12);
  const auto& ops = sim::operators();
  for (int m = 2; m <= 6; ++m) {
    // chain of m binary ops on (a, b)
    std::vector<Call> body;
    for (int i = 0; i < m; ++i) {
      std::string op = ops[rng.below(3)];  // add, sub, mul
      body.push_back({op, {i ? Arg::result(i - 1) : Arg::param(0), Arg::param(1)}});
    }
    ToolRecord r;
    r.sig = parse_signature("(float, float) -> float");
    r.description = "chain " + std::to_string(m);
    r.spec.post = "chain " + std::to_string(m);
    r.examples = {parse_example("(1, 1) -> 1"), parse_example("(0, 0) -> 0")};
    auto node = make_composite("chain" + std::to_string(m), r, body);
    REQUIRE(g.insert_tool(node).added());
    std::vector<ToolId> block;
    for (const auto& c : body) block.push_back(c.callee);

    auto prim = traj(block, g.version());
    auto comp = traj({node.id}, g.version());
    auto rp = shaped_reward(g, prim, 0.2);
    auto rc = shaped_reward(g, comp, 0.2);
    CHECK(rc.shaped_exact - rp.shaped_exact == Rational(0.2) * (m - 1));
    CHECK(rc.t_prim == rp.t_prim);
    auto adv = group_advantage({rp.shaped, rc.shaped, 1.0, 0.5});
    CHECK(adv[1] > adv[0]);
  }
}
