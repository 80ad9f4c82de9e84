// Command-line front end: library files, retrieval, simulation and the
// cost benchmark.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "tooldag/bench.hpp"
#include "tooldag/error.hpp"
#include "tooldag/persistence.hpp"
#include "tooldag/remote_scorer.hpp"
#include "tooldag/retrieval.hpp"
#include "tooldag/sim.hpp"
#include "tooldag/text.hpp"

using namespace tooldag;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kBreach = 3 };

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string library = "library.txt";
  std::string lattice = "covariant";

  InputMatch match() const { return lattice == "exact" ? InputMatch::Exact : InputMatch::Contravariant; }

  LibraryGraph load() const {
    auto g = load_library(library);
    g.set_input_match(match());
    return g;
  }
};

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
}

// Copies known keys from `j` into the fields; unknown keys are an error.
struct Binder {
  const json& j;
  std::set<std::string> used;

  template <typename T>
  void operator()(const char* key, T& field) {
    if (!j.contains(key)) return;
    used.insert(key);
    try {
      field = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(Errc::ParseError, std::string("config key ") + key + ": " + e.what());
    }
  }

  void finish(std::initializer_list<const char*> extra) {
    for (auto k : extra) used.insert(k);
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!used.count(it.key())) throw Error(Errc::ParseError, "unknown config key " + it.key());
    }
  }
};

int cmd_init(const Globals& g, const std::string& profile) {
  LibraryGraph graph;
  if (profile == "arithmetic") {
    graph = sim::arithmetic_library(g.match());
  } else if (profile != "empty") {
    std::cerr << "unknown profile " << profile << " (arithmetic|empty)\n";
    return kUsage;
  }
  save_library(graph, g.library);
  std::cout << "wrote " << g.library << " (" << graph.size() << " tools)\n";
  return kOk;
}

int cmd_insert(const Globals& g, const std::string& file) {
  auto graph = g.load();
  auto blocks = load_candidates(file, graph.registry());
  for (const auto& b : blocks) std::cout << to_string(graph.insert_tool(b.node)) << "\n";
  save_library(graph, g.library);
  return kOk;
}

struct RetrieveArgs {
  std::string goal, intent, effect, budget, facts, remote;
  std::size_t k2 = 32;
  int timeout_ms = 5000;
  bool trace = false;
  bool expand = false;
};

int cmd_retrieve(const Globals& g, const RetrieveArgs& a) {
  auto graph = g.load();
  SubGoal goal;
  goal.goal_sig = parse_signature(a.goal, &graph.registry());
  goal.intent = a.intent;
  goal.goal_effect = a.effect;
  for (const auto& f : text::split_top_level(a.facts, ',')) goal.available_facts.insert(f);
  if (!a.budget.empty()) {
    goal.budget = parse_complexity(a.budget);
    if (!goal.budget) throw Error(Errc::InvalidArgument, "unknown budget " + a.budget);
  }
  Scorers scorers = Scorers::deterministic(graph.lattice());
  if (!a.remote.empty()) {
    std::vector<std::string> argv;
    std::istringstream ss(a.remote);
    for (std::string w; ss >> w;) argv.push_back(w);
    scorers = remote_scorers(std::make_shared<PipeTransport>(argv, std::chrono::milliseconds(a.timeout_ms)));
  }
  RetrievalConfig rc;
  rc.k2 = a.k2;
  if (a.expand) {
    auto t = retrieve_expanding(graph, goal, scorers, rc);
    auto ids = t.resolved();
    std::cout << (ids.empty() ? "no match" : text::join(ids, " ")) << "\n";
    if (a.trace) std::cout << trace_lines(t.trace);
    std::cout << "tokens\t" << t.total.total_tokens() << "\n";
    return kOk;
  }
  auto t = retrieve(graph, goal, scorers, rc);
  std::cout << (t.winner ? *t.winner : std::string("no match")) << "\n";
  if (a.trace) {
    std::cout << trace_lines(t);
    for (const auto& [id, why] : t.l3_reasons) std::cout << "rejected\t" << id << "\t" << why << "\n";
  }
  return kOk;
}

int cmd_simulate(const Globals& g, const std::string& config_path) {
  json j = read_json(config_path);
  sim::SimConfig c;
  std::string out = "sim_out";
  Binder bind{j, {}};
  bind("seed", c.seed);
  bind("group_size", c.group_size);
  bind("lambda", c.lambda);
  bind("rho", c.rho);
  bind("eta", c.eta);
  bind("eta_decay", c.eta_decay);
  bind("eps_clip", c.eps_clip);
  bind("k2", c.k2);
  bind("epochs", c.epochs);
  bind("tasks_per_epoch", c.tasks_per_epoch);
  bind("queries", c.queries);
  bind("min_depth", c.min_depth);
  bind("max_depth", c.max_depth);
  bind("m_min", c.m_min);
  bind("m_max", c.m_max);
  bind("recurrence", c.recurrence);
  bind("buffer_queries", c.buffer_queries);
  bind("warmup_tasks", c.warmup_tasks);
  bind("warm_scale", c.warm_scale);
  bind("relevance_weight", c.relevance_weight);
  bind("eval_tasks", c.eval_tasks);
  bind("probe_tasks", c.probe_tasks);
  bind("probe_every", c.probe_every);
  bind("out", out);
  bind.finish({});
  if (g.seed) c.seed = *g.seed;
  c.input_match = g.match();

  auto r = sim::coevolve(c);
  std::filesystem::create_directories(out);
  write_file(out + "/metrics.csv", sim::metrics_csv(r.rows));
  write_file(out + "/eval.csv", sim::eval_csv(r.eval));
  write_file(out + "/manifest.json", sim::manifest_json(c, r));
  save_library(r.graph, out + "/library.txt");
  std::cout << "steps " << (r.rows.empty() ? 0 : r.rows.size() - 1) << ", library " << r.graph.size()
            << ", max depth " << r.graph.max_depth() << "\n";
  if (!r.eval.empty()) {
    std::printf("J %.4f -> %.4f\n", r.eval.front().j, r.eval.back().j);
  }
  if (!r.breaches.empty()) {
    for (const auto& b : r.breaches) {
      std::cerr << "assumption breach at step " << b.step << ": " << b.probe << " lost " << b.dropped << "\n";
    }
    return kBreach;
  }
  return kOk;
}

int cmd_bench(const Globals& g, const std::string& config_path) {
  json j = read_json(config_path);
  bench::BenchConfig c;
  std::string out = "bench_out";
  Binder bind{j, {}};
  bind("sizes", c.sizes);
  bind("k2", c.k2);
  bind("alpha1", c.alpha1);
  bind("alpha2", c.alpha2);
  bind("alpha3", c.alpha3);
  bind("queries", c.queries);
  bind("branching", c.branching);
  bind("composite_share", c.composite_share);
  bind("seed", c.seed);
  bind("l2_tokens", c.regime.l2);
  bind("l3_tokens", c.regime.l3);
  bind("l4_tokens", c.regime.l4);
  bind("jitter", c.regime.jitter);
  bind("out", out);
  bind.finish({});
  if (g.seed) c.seed = *g.seed;

  auto r = bench::sweep(c);
  std::filesystem::create_directories(out);
  write_file(out + "/bench.csv", bench::csv(r.rows));
  auto summary = bench::report_text(r.report);
  write_file(out + "/summary.txt", summary);
  std::cout << summary;
  return kOk;
}

int cmd_stats(const Globals& g) {
  auto graph = g.load();
  std::map<std::size_t, std::size_t> hist;
  std::size_t fan = 0;
  for (const auto& [id, n] : graph.nodes()) {
    ++hist[n.depth];
    if (n.kind == ToolKind::Composite) fan += n.distinct_children().size();
  }
  std::cout << "tools\t" << graph.size() << "\nprimitives\t" << graph.primitive_count()
            << "\ncomposites\t" << graph.composite_count() << "\nedges\t" << graph.edges().size()
            << "\nmax depth\t" << graph.max_depth() << "\nversion\t" << graph.version() << "\n";
  std::printf("mean fan-out\t%.3f\n",
              graph.composite_count() ? double(fan) / graph.composite_count() : 0.0);
  for (const auto& [d, c] : hist) std::cout << "depth " << d << "\t" << c << "\n";
  return kOk;
}

int cmd_serve(const Globals& g) {
  SubtypeLattice lattice;
  if (std::filesystem::exists(g.library)) lattice = g.load().lattice();
  lattice.set_input_match(g.match());
  serve_scorer(std::cin, std::cout, lattice);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"typed tool library: insertion, retrieval, simulation, benchmarks"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  app.add_option("--library", g.library, "library file")->capture_default_str();
  app.add_option("--lattice", g.lattice, "input matching: covariant (subtyping) or exact")
      ->check(CLI::IsMember({"exact", "covariant"}))
      ->capture_default_str();

  std::string profile = "arithmetic";
  auto* init = app.add_subcommand("init", "write a library of seed primitives");
  init->add_option("--profile", profile, "arithmetic | empty")->capture_default_str();

  std::string insert_file;
  auto* insert = app.add_subcommand("insert", "insert candidate tools from a file");
  insert->add_option("file", insert_file)->required();

  RetrieveArgs ra;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "run the retrieval cascade for one sub-goal");
  retrieve_cmd->add_option("--goal", ra.goal, "goal signature, e.g. \"(int, float) -> float\"")->required();
  retrieve_cmd->add_option("--intent", ra.intent)->required();
  retrieve_cmd->add_option("--k2", ra.k2)->capture_default_str();
  retrieve_cmd->add_flag("--trace", ra.trace, "print survivors and charges per stage");
  retrieve_cmd->add_option("--facts", ra.facts, "comma-separated precondition atoms");
  retrieve_cmd->add_option("--effect", ra.effect, "required post effect");
  retrieve_cmd->add_option("--budget", ra.budget, "complexity budget, e.g. \"O(n)\"");
  retrieve_cmd->add_flag("--expand", ra.expand, "split a failing composite into its children");
  retrieve_cmd->add_option("--remote", ra.remote, "scorer command speaking the line protocol");
  retrieve_cmd->add_option("--timeout-ms", ra.timeout_ms)->capture_default_str();

  std::string sim_config, bench_config, dot_path;
  auto* simulate = app.add_subcommand("simulate", "run the co-evolution simulation");
  simulate->add_option("--config", sim_config)->required();
  auto* bench_cmd = app.add_subcommand("bench", "run the retrieval cost sweep");
  bench_cmd->add_option("--config", bench_config)->required();
  auto* stats = app.add_subcommand("stats", "library counts and depth histogram");
  auto* dot = app.add_subcommand("export-dot", "write the library as a graphviz file");
  dot->add_option("path", dot_path)->required();
  auto* serve = app.add_subcommand("serve-scorer", "answer scorer requests on stdin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*init) return cmd_init(g, profile);
    if (*insert) return cmd_insert(g, insert_file);
    if (*retrieve_cmd) return cmd_retrieve(g, ra);
    if (*simulate) return cmd_simulate(g, sim_config);
    if (*bench_cmd) return cmd_bench(g, bench_config);
    if (*stats) return cmd_stats(g);
    if (*dot) {
      export_dot(g.load(), dot_path);
      return kOk;
    }
    if (*serve) return cmd_serve(g);
  } catch (const Error& e) {
    std::cerr << "error: " << errc_name(e.code()) << ": " << e.what();
    if (e.where()) std::cerr << " (at " << e.where() << ")";
    std::cerr << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
