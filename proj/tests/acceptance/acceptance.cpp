// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tooldag/bench.hpp"
#include "tooldag/error.hpp"
#include "tooldag/persistence.hpp"
#include "tooldag/random.hpp"
#include "tooldag/reward.hpp"
#include "tooldag/signature_index.hpp"
#include "tooldag/sim.hpp"

using namespace tooldag;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

// ---- random libraries ---------------------------------------------------------

ToolRecord binop_record(const std::string& tag, std::set<std::string> pre) {
  ToolRecord r;
  r.sig = parse_signature("(float, float) -> float");
  r.description = "tool " + tag;
  r.spec.pre = std::move(pre);
  r.spec.post = "post of " + tag;
  r.examples = {parse_example("(1, 1) -> 1"), parse_example("(0, 0) -> 0")};
  return r;
}

// c(a, b) = k0(a, b), k1(%0, b), ...; preconditions are the callees' union
ToolNode chain_of(const LibraryGraph& g, const std::string& id, const std::vector<ToolId>& callees,
                  bool discharge = true) {
  std::vector<Call> body;
  std::set<std::string> pre;
  for (std::size_t i = 0; i < callees.size(); ++i) {
    body.push_back({callees[i], {i ? Arg::result(i - 1) : Arg::param(0), Arg::param(1)}});
    if (const auto* n = g.find(callees[i])) pre.insert(n->record.spec.pre.begin(), n->record.spec.pre.end());
  }
  if (!discharge) pre.clear();
  return make_composite(id, binop_record(id, pre), body);
}

std::vector<ToolId> pick_distinct(Rng& rng, const std::vector<ToolId>& pool, std::size_t k) {
  std::set<ToolId> out;
  while (out.size() < k) out.insert(pool[rng.below(pool.size())]);
  std::vector<ToolId> v(out.begin(), out.end());
  rng.shuffle(v);
  return v;
}

LibraryGraph random_library(Rng& rng, std::size_t size) {
  LibraryGraph g;
  std::vector<ToolId> ids;
  for (std::size_t i = 0; i < size; ++i) {
    const std::string id = "t" + std::to_string(i);
    ToolNode n = ids.size() < 4 || rng.bernoulli(0.4)
                     ? make_primitive(id, binop_record(id, {}))
                     : chain_of(g, id, pick_distinct(rng, ids, 2 + rng.below(2)));
    if (g.insert_tool(n).added()) ids.push_back(id);
  }
  return g;
}

// leaf count by walking bodies, never reading the stored sizes
std::uint64_t leaves(const LibraryGraph& g, const ToolId& id, std::map<ToolId, std::uint64_t>& memo) {
  if (auto it = memo.find(id); it != memo.end()) return it->second;
  const auto& n = g.node(id);
  std::uint64_t total = n.body.empty() ? 1 : 0;
  for (const auto& c : n.body) total += leaves(g, c.callee, memo);
  return memo[id] = total;
}

Trajectory trajectory_of(const std::vector<ToolId>& ids, std::uint64_t version) {
  Trajectory t;
  t.query_id = "q";
  t.graph_version = version;
  t.r_res = 1.0;
  for (const auto& id : ids) t.calls.push_back({id, {}, Rational(0), {}, ""});
  return t;
}

// ---- criteria -------------------------------------------------------------------

Verdict identity() {
  Rng rng(101);
  std::size_t pairs = 0, bad = 0;
  for (int lib = 0; lib < 100; ++lib) {
    auto g = random_library(rng, 40);
    std::vector<ToolId> ids;
    for (const auto& [id, n] : g.nodes()) ids.push_back(id);
    std::map<ToolId, std::uint64_t> memo;
    for (int k = 0; k < 100; ++k, ++pairs) {
      std::vector<ToolId> calls;
      for (std::size_t i = 0, len = 1 + rng.below(12); i < len; ++i) calls.push_back(ids[rng.below(ids.size())]);
      auto t = trajectory_of(calls, g.version());
      std::int64_t t_prim = 0;
      for (const auto& id : calls) t_prim += static_cast<std::int64_t>(leaves(g, id, memo));
      const auto r_comp = static_cast<std::int64_t>(comp_reward(g, t));
      const auto t_calls = static_cast<std::int64_t>(calls.size());
      if (-t_calls != r_comp - t_prim || static_cast<std::int64_t>(prim_workload(g, t)) != t_prim) ++bad;
    }
  }
  return {bad == 0, std::to_string(pairs) + " pairs, " + std::to_string(bad) + " mismatches"};
}

Verdict gap() {
  Rng rng(202);
  const double lambda = 0.20;
  std::size_t bad_gap = 0, bad_rank = 0;
  for (int i = 0; i < 500; ++i) {
    auto g = sim::arithmetic_library();
    const std::size_t m = 2 + i % 5;
    const auto& ops = sim::operators();
    std::vector<ToolId> block;
    for (std::size_t k = 0; k < m; ++k) block.push_back(ops[rng.below(3)]);
    auto node = chain_of(g, "fold" + std::to_string(i), block);
    if (!g.insert_tool(node).added()) return {false, "fold " + std::to_string(i) + " was not committed"};
    auto rp = shaped_reward(g, trajectory_of(block, g.version()), lambda);
    auto rc = shaped_reward(g, trajectory_of({node.id}, g.version()), lambda);
    if (rc.shaped_exact - rp.shaped_exact != Rational(lambda) * static_cast<long>(g.flat_size(node.id) - 1)) ++bad_gap;
    std::vector<double> group = {rp.shaped, rc.shaped};
    for (std::size_t k = 0, extra = rng.below(7); k < extra; ++k) group.push_back(rng.uniform() * 1.6);
    auto adv = group_advantage(group);
    if (!(adv[1] > adv[0])) ++bad_rank;
  }
  return {bad_gap == 0 && bad_rank == 0,
          "500 pairs, gap mismatches " + std::to_string(bad_gap) + ", rank failures " + std::to_string(bad_rank)};
}

Verdict inserts() {
  Rng rng(303);
  LibraryGraph g;
  std::vector<ToolId> ids;
  std::size_t adversarial = 0, work_bad = 0, wrongly_added = 0, next = 0, calls = 0;
  std::map<std::string, std::size_t> outcomes;
  for (std::size_t i = 0; calls < 10000; ++i) {
    const std::string id = "n" + std::to_string(next++);
    const double u = rng.uniform();
    const std::size_t edges_before = g.edges().size();
    ToolNode cand;
    bool adv = true;
    if (ids.size() < 6 || u < 0.30) {
      std::set<std::string> pre;
      if (rng.bernoulli(0.5)) pre.insert("atom" + std::to_string(rng.below(20)));
      cand = make_primitive(id, binop_record(id, pre));
      adv = false;
    } else if (u < 0.65) {
      cand = chain_of(g, id, pick_distinct(rng, ids, 2 + rng.below(3)));
      adv = false;
    } else if (u < 0.75) {
      // reuse an existing id so that the new edges close a loop
      std::vector<ToolId> composites;
      for (const auto& x : ids) {
        if (!g.node(x).children.empty()) composites.push_back(x);
      }
      if (composites.empty()) continue;
      const auto& top = composites[rng.below(composites.size())];
      auto kids = g.node(top).distinct_children();
      const ToolId victim = rng.bernoulli(0.5) ? top : kids[rng.below(kids.size())];
      cand = chain_of(g, victim, {top, ids[rng.below(ids.size())]});
    } else if (u < 0.85) {
      auto callees = pick_distinct(rng, ids, 2);
      callees.push_back("ghost" + std::to_string(i));
      cand = chain_of(g, id, callees);
    } else {
      std::vector<ToolId> guarded;
      for (const auto& x : ids) {
        if (!g.node(x).record.spec.pre.empty()) guarded.push_back(x);
      }
      if (guarded.empty()) continue;
      cand = chain_of(g, id, {guarded[rng.below(guarded.size())], ids[rng.below(ids.size())]}, false);
    }
    adversarial += adv;
    ++calls;
    auto out = g.insert_tool(cand);
    ++outcomes[out.added() ? "added" : out.merged() ? "merged" : to_string(out.reason)];
    if (adv && out.added()) ++wrongly_added;
    if (out.added()) ids.push_back(cand.id);
    if (g.last_insert_work() > 2 * (cand.distinct_children().size() + edges_before)) ++work_bad;
  }

  // independent checks over the final graph
  std::map<ToolId, int> state;
  bool acyclic = true;
  std::function<void(const ToolId&)> dfs = [&](const ToolId& id) {
    state[id] = 1;
    for (const auto& c : g.node(id).children) {
      if (state[c] == 1) acyclic = false;
      else if (state[c] == 0) dfs(c);
    }
    state[id] = 2;
  };
  for (const auto& [id, n] : g.nodes()) {
    if (state[id] == 0) dfs(id);
  }
  std::size_t depth_bad = 0, fan_two = 0, composites = 0, max_depth = 0, thin = 0, balanced_thin = 0;
  std::uint64_t max_leaves = 1;
  std::map<ToolId, std::uint64_t> memo;
  for (const auto& [id, n] : g.nodes()) {
    std::size_t want = 0;
    for (const auto& c : n.children) want = std::max(want, g.node(c).depth + 1);
    depth_bad += n.depth != want;
    if (!n.children.empty()) {
      ++composites;
      fan_two += n.distinct_children().size() >= 2;
    }
    max_depth = std::max(max_depth, n.depth);
    max_leaves = std::max(max_leaves, leaves(g, id, memo));
    // nodes with fewer than 2^depth leaves; a chain c_k = (c_{k-1}, p) is one
    if (double(n.depth) > std::log2(double(leaves(g, id, memo)))) {
      ++thin;
      std::size_t deep = 0;
      for (const auto& c : n.distinct_children()) deep += g.node(c).depth + 1 == n.depth;
      balanced_thin += deep >= 2;
    }
  }
  const bool log_bound = fan_two < composites || double(max_depth) <= std::log2(double(max_leaves));
  const double adv_share = double(adversarial) / double(calls);
  char buf[480];
  std::snprintf(buf, sizeof buf,
                "%zu inserts, adversarial %.1f%%, added %zu, merged %zu, cycle %zu, missing %zu, spec %zu, "
                "depth faults %zu, max depth %zu vs log2(%llu) = %.2f, %zu nodes under 2^depth leaves "
                "(%zu with two children one level down), work over bound %zu",
                calls, 100 * adv_share, outcomes["added"], outcomes["merged"], outcomes["Cycle"],
                outcomes["MissingChild"], outcomes["SpecFailure"], depth_bad, max_depth,
                static_cast<unsigned long long>(max_leaves), std::log2(double(max_leaves)), thin, balanced_thin,
                work_bad);
  return {acyclic && depth_bad == 0 && log_bound && work_bad == 0 && wrongly_added == 0 && adv_share >= 0.30 &&
              fan_two == composites,
          buf};
}

bench::SweepResult run_bench() { return bench::sweep(bench::BenchConfig{}); }

Verdict bench_scaling(const bench::SweepResult& r) {
  const auto& rep = r.report;
  const auto& last = rep.sizes.back();
  const double flat_ratio = last.flat / last.tdr, text_ratio = last.texthier / last.tdr;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "slope flat %.3f, slope tdr %.3f (n >= 400: %.3f), flat/tdr %.1f, texthier/tdr %.2f at n = %zu",
                rep.slope_flat, rep.slope_tdr, rep.tail_slope_tdr, flat_ratio, text_ratio, last.n);
  return {std::abs(rep.slope_flat - 1.0) <= 0.05 && rep.slope_tdr < 0.3 && flat_ratio >= 5 &&
              text_ratio > 1 && text_ratio < flat_ratio,
          buf};
}

Verdict call_audit(const bench::SweepResult& r, std::size_t k2) {
  std::size_t episodes = 0, over = 0;
  for (const auto& row : r.rows) {
    if (row.substrate != "tdr") continue;
    ++episodes;
    over += row.scorer_calls > row.s1 + 2 * k2;
  }
  const bench::SizeSummary *a = nullptr, *b = nullptr;
  for (const auto& s : r.report.sizes) {
    if (s.n == 800) a = &s;
    if (s.n == 1600) b = &s;
  }
  if (!a || !b) return {false, "sweep lacks n = 800 or 1600"};
  const double unify = b->unify_tdr / a->unify_tdr, scan = b->unify_flat / a->unify_flat;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu episodes, %zu over budget, unify growth x%.2f, scan growth x%.2f", episodes,
                over, unify, scan);
  return {over == 0 && unify < 1.5 && std::abs(scan - 2.0) < 0.1, buf};
}

const char* kBases[] = {"int", "float", "bool", "str"};

TypeTerm random_term(Rng& rng, int depth, double var_p) {
  if (rng.bernoulli(var_p)) return TypeTerm::var("V" + std::to_string(rng.below(2)));
  auto pick = rng.below(depth > 0 ? 6 : 4);
  if (pick < 4) return TypeTerm::base(kBases[pick]);
  if (pick == 4) return TypeTerm::ctor("list", {random_term(rng, depth - 1, var_p)});
  return TypeTerm::ctor("dict", {random_term(rng, depth - 1, var_p), random_term(rng, depth - 1, var_p)});
}

Signature random_sig(Rng& rng, double var_p) {
  Signature s;
  for (std::size_t i = 0, n = 1 + rng.below(3); i < n; ++i) s.inputs.push_back(random_term(rng, 2, var_p));
  s.output = random_term(rng, 2, var_p);
  return s;
}

Verdict index_equivalence() {
  Rng rng(606);
  std::size_t pairs = 0, bad = 0, nonempty = 0;
  for (int lib = 0; lib < 40; ++lib) {
    SignatureIndex index;
    std::map<ToolId, Signature> all;
    for (int i = 0; i < 200; ++i) {
      auto s = random_sig(rng, 0.05 + 0.1 * (lib % 3));
      ToolId id = "t" + std::to_string(i);
      index.insert(s, id);
      all.emplace(id, s);
    }
    SubtypeLattice lat(std::vector<std::pair<std::string, std::string>>{{"int", "float"}, {"bool", "int"}},
                       lib % 4 == 0 ? InputMatch::Exact : InputMatch::Contravariant);
    for (int q = 0; q < 25; ++q, ++pairs) {
      Signature goal = random_sig(rng, 0.0);
      if (q % 2) {
        goal = std::next(all.begin(), static_cast<long>(rng.below(all.size())))->second;
        Substitution ground{{"V0", random_term(rng, 1, 0.0)}, {"V1", random_term(rng, 1, 0.0)}};
        goal = tooldag::apply(ground, goal);
      }
      std::vector<ToolId> scan;
      for (const auto& [id, s] : all) {
        if (unify(s, goal, lat).ok) scan.push_back(id);
      }
      bad += index.lookup(goal, lat).ids != scan;
      nonempty += !scan.empty();
    }
  }
  return {bad == 0, std::to_string(pairs) + " pairs (" + std::to_string(nonempty) + " with matches), " +
                        std::to_string(bad) + " differ"};
}

// First window whose growth is at most 5% of the peak while the curve is at
// least half way up; no later window may grow by more than that.
bool plateaus(const std::vector<double>& v) {
  if (v.size() < 3) return false;
  const double peak = *std::max_element(v.begin(), v.end());
  const double tol = 0.05 * peak;
  std::size_t onset = 0;
  for (std::size_t i = 1; i < v.size() && !onset; ++i) {
    if (v[i] - v[i - 1] <= tol && v[i] >= 0.5 * peak) onset = i;
  }
  if (!onset) return false;
  for (std::size_t i = onset + 1; i < v.size(); ++i) {
    if (v[i] - v[i - 1] > tol) return false;
  }
  return true;
}

Verdict coevolution(const std::vector<sim::RunResult>& runs) {
  Verdict v;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    const auto& r = runs[s];
    std::size_t transitions = 0, ups = 0;
    std::vector<double> size_curve, depth_curve;
    for (std::size_t i = 0; i < r.eval.size(); ++i) {
      if (i) {
        ++transitions;
        ups += r.eval[i].j >= r.eval[i - 1].j;
      }
      size_curve.push_back(double(r.library_sizes.at(r.eval[i].step)));
      depth_curve.push_back(r.eval[i].mean_depth);
    }
    const bool ok_j = transitions > 0 && ups >= 0.95 * double(transitions) && r.eval.back().j > r.eval.front().j;
    const bool ok_len = r.rows.size() == 501;
    const bool ok = ok_j && ok_len && r.library_monotone && plateaus(size_curve) && plateaus(depth_curve);
    char buf[220];
    std::snprintf(buf, sizeof buf, "%sseed %zu: J %.4f -> %.4f, %zu/%zu up, |V| %.0f -> %.0f, depth %.3f -> %.3f%s",
                  s ? "; " : "", s + 1, r.eval.front().j, r.eval.back().j, ups, transitions, size_curve.front(),
                  size_curve.back(), depth_curve.front(), depth_curve.back(), ok ? "" : " [fail]");
    v.detail += buf;
    v.pass = v.pass && ok;
  }
  return v;
}

Rational random_rational(Rng& rng) {
  Rational r(static_cast<long>(rng.range(-20, 20)), static_cast<long>(rng.range(1, 6)));
  r.canonicalize();
  return r;
}

Verdict lossless(const std::vector<sim::RunResult>& runs) {
  Rng rng(808);
  std::size_t composites = 0, tuples = 0, bad = 0, refused = 0;
  for (const auto& r : runs) {
    for (const auto& [id, n] : r.graph.nodes()) {
      if (n.kind != ToolKind::Composite) continue;
      ++composites;
      auto flat = sim::primitive_expansion(r.graph, id);
      bad += flat.size() != n.flat;
      for (int i = 0; i < 100; ++i, ++tuples) {
        std::vector<Rational> args;
        for (std::size_t k = 0; k < n.record.sig.inputs.size(); ++k) args.push_back(random_rational(rng));
        std::optional<Rational> a, b;
        try {
          a = sim::execute_tool(r.graph, id, args);
        } catch (const Error&) {
        }
        try {
          b = sim::execute_body(r.graph, flat, args);
        } catch (const Error&) {
        }
        bad += a != b;
        refused += !a;
      }
    }
  }
  return {bad == 0 && composites > 0, std::to_string(composites) + " composites, " + std::to_string(tuples) +
                                          " tuples (" + std::to_string(refused) + " refused by both), " +
                                          std::to_string(bad) + " mismatches"};
}

Verdict fixtures() {
  const std::string dir = FIXTURE_DIR;
  auto g = load_library(dir + "/case_library.txt");
  std::string got;
  for (const auto& c : load_candidates(dir + "/case_candidates.txt", g.registry())) {
    got += to_string(g.insert_tool(c.node)) + "\n";
  }
  const auto want = read_file(dir + "/case_outcomes.txt");
  return {got == want, got == want ? "3 outcomes verbatim" : "got:\n" + got};
}

Verdict determinism(const bench::SweepResult& bench_run, const std::vector<sim::RunResult>& runs) {
  const bool same_bench = bench::csv(run_bench().rows) == bench::csv(bench_run.rows);
  std::size_t same_sim = 0;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    sim::SimConfig c;
    c.seed = s + 1;
    auto again = sim::coevolve(c);
    same_sim += sim::metrics_csv(again.rows) == sim::metrics_csv(runs[s].rows) &&
                sim::eval_csv(again.eval) == sim::eval_csv(runs[s].eval);
  }
  return {same_bench && same_sim == runs.size(),
          std::string("bench csv ") + (same_bench ? "identical" : "differs") + ", sim csv identical on " +
              std::to_string(same_sim) + "/" + std::to_string(runs.size()) + " seeds"};
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  bool all = true;
  auto report = [&](int n, double limit_s, const std::function<Verdict()>& fn) {
    const auto t0 = clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(clock::now() - t0).count();
    if (limit_s > 0 && dt > limit_s) {
      v.pass = false;
      v.detail += " [over time limit]";
    }
    all = all && v.pass;
    std::printf("criterion %d: %s  %s  (%.1fs)\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str(), dt);
    std::fflush(stdout);
  };

  report(1, 10, identity);
  report(2, 5, gap);
  report(3, 60, inserts);

  bench::SweepResult bench_run;
  report(4, 300, [&] {
    bench_run = run_bench();
    return bench_scaling(bench_run);
  });
  report(5, 0, [&] { return call_audit(bench_run, bench::BenchConfig{}.k2); });
  report(6, 30, index_equivalence);

  std::vector<sim::RunResult> runs;
  report(7, 600, [&] {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      sim::SimConfig c;
      c.seed = seed;
      runs.push_back(sim::coevolve(c));
    }
    return coevolution(runs);
  });
  report(8, 30, [&] { return lossless(runs); });
  report(9, 1, fixtures);
  report(10, 0, [&] { return determinism(bench_run, runs); });
  return all ? 0 : 1;
}
