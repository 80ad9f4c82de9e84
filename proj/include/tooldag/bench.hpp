#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tooldag/library_graph.hpp"
#include "tooldag/retrieval.hpp"
#include "tooldag/subgoal.hpp"

namespace tooldag::bench {

// Mean whitespace tokens per record level for generated tools.
struct RecordRegime {
  std::size_t l2 = 12;
  std::size_t l3 = 48;
  std::size_t l4 = 64;
  double jitter = 0.2;  // each length is drawn from mean * [1 - j, 1 + j]
};

struct BenchConfig {
  std::vector<std::size_t> sizes = {50, 100, 200, 400, 800, 1600};
  std::size_t k2 = 32;
  double alpha1 = 0.1;  // L1 survival: one signature class in round(1/alpha1)
  double alpha2 = 0.2;  // sets the number of description topics, round(1/alpha2)
  double alpha3 = 0.5;  // share of specs the checker keeps
  RecordRegime regime;
  std::size_t queries = 100;
  std::size_t branching = 8;  // text hierarchy fan-out and beam width
  double composite_share = 0.25;
  std::uint64_t seed = 7;
};

constexpr std::size_t kSeedPrimitives = 8;

struct Query {
  std::string id;
  SubGoal goal;
  std::size_t signature_class = 0;
  std::size_t topic = 0;
};

struct Workload {
  LibraryGraph graph;
  std::vector<Query> queries;
};

// Throws InfeasibleAlpha when round(1/alpha1) classes cannot realize alpha1
// within 5%, or when alpha1 * n < 1; InvalidArgument when n is below the
// seed primitive count or a fraction is outside (0, 1).
Workload generate_library(const BenchConfig& config, std::size_t n);

struct BenchRow {
  std::string substrate;  // flat | texthier | tdr
  std::size_t n = 0;
  std::string query_id;
  std::size_t tokens = 0;
  std::size_t scorer_calls = 0;
  std::size_t unify_visits = 0;
  // TDR: survivor set sizes. flat and texthier: tools charged at each level.
  std::size_t s1 = 0, s2 = 0, s3 = 0, s4 = 0;
};

// Every level of every tool, one scorer call per tool; unification is a
// linear scan.
std::vector<BenchRow> run_flat(const LibraryGraph& graph, const std::vector<Query>& queries);

struct SummaryNode {
  std::string summary;               // internal nodes: top-10 TF terms
  std::vector<std::size_t> children; // internal nodes
  ToolId tool;                       // leaves
  bool leaf() const { return children.empty(); }
};

struct TextHierarchy {
  std::vector<SummaryNode> nodes;
  std::size_t root = 0;
  std::size_t height = 0;  // edges from root to the leaves
  std::size_t branching = 2;
};

// Type-blind: leaves are ordered by their dominant description term and
// chunked bottom-up.
TextHierarchy build_text_hierarchy(const LibraryGraph& graph, std::size_t branching);

struct TextHierStats {
  std::size_t internal_inspected = 0;
  std::size_t leaves_inspected = 0;
  std::size_t shortlist = 0;
};

// Greedy beam descent (width = branching), charging every inspected
// summary, then the L2 text of inspected leaves, then all four levels of
// the best `shortlist` leaves.
std::vector<BenchRow> run_texthier(const LibraryGraph& graph, const TextHierarchy& tree,
                                   const std::vector<Query>& queries, std::size_t shortlist,
                                   std::vector<TextHierStats>* stats = nullptr);

std::vector<BenchRow> run_tdr(const LibraryGraph& graph, const std::vector<Query>& queries,
                              std::size_t k2);

std::string csv_header();
std::string csv(const std::vector<BenchRow>& rows);

// Least-squares slope of log(y) on log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct SizeSummary {
  std::size_t n = 0;
  double flat = 0, texthier = 0, tdr = 0;  // mean tokens per query
  double alpha1 = 0, alpha2 = 0, alpha3 = 0;  // realized survival fractions
  double unify_tdr = 0, unify_flat = 0;
  double max_calls_excess = 0;  // max over queries of calls - (|S1| + 2 k2); <= 0 is good
};

struct Report {
  std::vector<SizeSummary> sizes;
  double slope_flat = 0, slope_texthier = 0, slope_tdr = 0;
  // Same fit restricted to n >= 400.
  double tail_slope_tdr = 0;
};

Report summarize(const std::vector<BenchRow>& rows, std::size_t k2);
std::string report_text(const Report& report);

struct SweepResult {
  std::vector<BenchRow> rows;
  Report report;
};

SweepResult sweep(const BenchConfig& config);

}  // namespace tooldag::bench
