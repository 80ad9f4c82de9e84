#include "tooldag/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "tooldag/error.hpp"
#include "tooldag/random.hpp"
#include "tooldag/scorers.hpp"
#include "tooldag/text.hpp"

namespace tooldag::bench {

namespace {

constexpr std::size_t kTopicWords = 24;
const char* const kCommon[] = {"value", "returns", "input", "each", "table", "from", "the", "of"};

std::string topic_word(std::size_t topic, std::size_t j) {
  return "t" + std::to_string(topic) + "w" + std::to_string(j);
}

std::size_t jittered(Rng& rng, std::size_t mean, double jitter) {
  double lo = mean * (1 - jitter), hi = mean * (1 + jitter);
  auto v = static_cast<std::size_t>(std::llround(lo + (hi - lo) * rng.uniform()));
  return std::max<std::size_t>(v, 1);
}

std::string topic_phrase(Rng& rng, std::size_t topic, std::size_t words) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < words; ++i) {
    if (rng.bernoulli(0.25)) {
      out.push_back(kCommon[rng.below(std::size(kCommon))]);
    } else {
      out.push_back(topic_word(topic, rng.below(kTopicWords)));
    }
  }
  return text::join(out, " ");
}

Signature class_signature(std::size_t k) {
  auto t = TypeTerm::base("c" + std::to_string(k));
  return Signature{{t, t}, t};
}

// Pads free text so the canonical level text lands near `target` tokens.
std::string filler(Rng& rng, std::size_t topic, std::size_t target, std::size_t fixed) {
  return topic_phrase(rng, topic, target > fixed ? target - fixed : 1);
}

}  // namespace

Workload generate_library(const BenchConfig& config, std::size_t n) {
  for (double a : {config.alpha1, config.alpha2, config.alpha3}) {
    if (!(a > 0 && a < 1)) throw Error(Errc::InvalidArgument, "survival fractions must lie in (0, 1)");
  }
  if (n < kSeedPrimitives) {
    throw Error(Errc::InvalidArgument, "n must be at least " + std::to_string(kSeedPrimitives));
  }
  const auto classes = static_cast<std::size_t>(std::llround(1 / config.alpha1));
  if (classes < 2 || std::abs(1.0 / classes - config.alpha1) > 0.05 * config.alpha1) {
    throw Error(Errc::InfeasibleAlpha, "alpha1 is not the reciprocal of a class count");
  }
  if (config.alpha1 * n < 1) {
    throw Error(Errc::InfeasibleAlpha, "alpha1 * n < 1: no survivor to realize");
  }
  const auto topics = std::max<std::size_t>(1, std::llround(1 / config.alpha2));

  std::vector<std::pair<std::string, std::string>> no_edges;
  Workload w{LibraryGraph(TypeRegistry::standard(), SubtypeLattice(no_edges)), {}};
  Rng rng(derive_seed(config.seed, "library/" + std::to_string(n)));
  const auto& reg = config.regime;

  std::vector<std::vector<ToolId>> by_class(classes);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i < kSeedPrimitives ? i % classes : rng.below(classes);
    const std::size_t topic = rng.below(topics);
    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "g%05zu", i);
    const ToolId id = id_buf;

    ToolRecord r;
    r.sig = class_signature(cls);
    // "<text>" ; tags = [a, b]  -> 5 fixed tokens
    r.description = topic_phrase(rng, topic, std::max<std::size_t>(1, jittered(rng, reg.l2, reg.jitter) - 5));
    r.tags = {topic_word(topic, 0), "topic" + std::to_string(topic)};
    // pre = [..] ; post = "<text>" ; complexity = O(1)  -> about 9 fixed tokens
    if (!rng.bernoulli(config.alpha3)) r.spec.pre.insert("needs-" + id);
    r.spec.post = id + " " + filler(rng, topic, jittered(rng, reg.l3, reg.jitter), 10);
    r.spec.complexity = rng.bernoulli(0.5) ? Complexity::Constant : Complexity::Linear;
    // each example "(a, b) -> c" is 4 tokens
    const std::size_t examples = std::max<std::size_t>(2, jittered(rng, reg.l4, reg.jitter) / 4);
    for (std::size_t e = 0; e < examples; ++e) {
      auto a = rng.range(-99, 99), b = rng.range(-99, 99);
      r.examples.push_back({"(" + std::to_string(a) + ", " + std::to_string(b) + ")",
                            std::to_string(a + b)});
    }

    ToolNode node;
    auto& pool = by_class[cls];
    if (i >= kSeedPrimitives && pool.size() >= 2 && rng.bernoulli(config.composite_share)) {
      const ToolId& a = pool[rng.below(pool.size())];
      const ToolId& b = pool[rng.below(pool.size())];
      std::vector<Call> body = {{a, {Arg::param(0), Arg::param(1)}},
                                {b, {Arg::result(0), Arg::param(1)}}};
      for (const auto& c : {a, b}) {
        const auto& pre = w.graph.node(c).record.spec.pre;
        r.spec.pre.insert(pre.begin(), pre.end());
      }
      node = make_composite(id, std::move(r), std::move(body));
    } else {
      node = make_primitive(id, std::move(r));
    }
    auto out = w.graph.insert_tool(node);
    if (!out.added()) throw Error(Errc::InvalidArgument, "generator produced a bad tool: " + to_string(out));
    pool.push_back(id);
  }

  Rng qrng(derive_seed(config.seed, "queries/" + std::to_string(n)));
  for (std::size_t q = 0; q < config.queries; ++q) {
    Query query;
    query.id = "q" + std::to_string(q);
    query.signature_class = qrng.below(classes);
    query.topic = qrng.below(topics);
    query.goal.goal_sig = class_signature(query.signature_class);
    query.goal.intent = topic_phrase(qrng, query.topic, 6);
    w.queries.push_back(std::move(query));
  }
  return w;
}

namespace {

std::size_t record_tokens(const ToolRecord& r) {
  std::size_t t = 0;
  for (int level = 1; level <= 4; ++level) t += token_cost(r, level);
  return t;
}

}  // namespace

std::vector<BenchRow> run_flat(const LibraryGraph& graph, const std::vector<Query>& queries) {
  std::size_t tokens = 0;
  for (const auto& [id, node] : graph.nodes()) tokens += record_tokens(node.record);
  std::vector<BenchRow> rows;
  for (const auto& q : queries) {
    BenchRow row{"flat", graph.size(), q.id, tokens, graph.size(), 0};
    for (const auto& [id, node] : graph.nodes()) {
      row.unify_visits += unify(node.record.sig, q.goal.goal_sig, graph.lattice()).visits;
    }
    row.s1 = row.s2 = row.s3 = row.s4 = graph.size();
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string top_terms(const std::map<std::string, std::size_t>& tf, std::size_t k) {
  std::vector<std::pair<std::size_t, std::string>> v;
  for (const auto& [term, count] : tf) v.emplace_back(count, term);
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size() && i < k; ++i) out.push_back(v[i].second);
  return text::join(out, " ");
}

}  // namespace

TextHierarchy build_text_hierarchy(const LibraryGraph& graph, std::size_t branching) {
  if (branching < 2) throw Error(Errc::InvalidArgument, "branching must be at least 2");
  TextHierarchy t;
  t.branching = branching;
  std::vector<std::map<std::string, std::size_t>> tf;

  std::vector<std::pair<std::string, std::size_t>> leaves;
  for (const auto& [id, node] : graph.nodes()) {
    std::map<std::string, std::size_t> counts;
    for (auto& w : text::word_tokens(node.record.description)) ++counts[w];
    SummaryNode leaf;
    leaf.tool = id;
    leaf.summary = node.record.description;
    t.nodes.push_back(leaf);
    tf.push_back(counts);
    leaves.emplace_back(top_terms(counts, 1), t.nodes.size() - 1);
  }
  if (t.nodes.empty()) {
    t.nodes.push_back(SummaryNode{});
    return t;
  }
  std::sort(leaves.begin(), leaves.end(), [&](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : t.nodes[a.second].tool < t.nodes[b.second].tool;
  });
  std::vector<std::size_t> level;
  for (auto& [term, idx] : leaves) level.push_back(idx);

  while (level.size() > 1) {
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < level.size(); i += branching) {
      SummaryNode parent;
      std::map<std::string, std::size_t> counts;
      for (std::size_t j = i; j < std::min(level.size(), i + branching); ++j) {
        parent.children.push_back(level[j]);
        for (const auto& [w, c] : tf[level[j]]) counts[w] += c;
      }
      parent.summary = top_terms(counts, 10);
      t.nodes.push_back(parent);
      tf.push_back(std::move(counts));
      next.push_back(t.nodes.size() - 1);
    }
    level = std::move(next);
    ++t.height;
  }
  t.root = level.front();
  return t;
}

std::vector<BenchRow> run_texthier(const LibraryGraph& graph, const TextHierarchy& tree,
                                   const std::vector<Query>& queries, std::size_t shortlist,
                                   std::vector<TextHierStats>* stats) {
  std::vector<BenchRow> rows;
  for (const auto& q : queries) {
    BenchRow row{"texthier", graph.size(), q.id};
    TextHierStats st;
    if (graph.size() == 0) {
      rows.push_back(row);
      if (stats) stats->push_back(st);
      continue;
    }
    std::vector<std::size_t> beam = {tree.root};
    std::vector<std::pair<double, std::size_t>> leaf_scores;
    // Single-leaf tree: the root is the leaf.
    if (tree.nodes[tree.root].leaf()) leaf_scores.emplace_back(1.0, tree.root);
    while (!beam.empty()) {
      std::vector<std::pair<double, std::size_t>> scored;
      for (auto b : beam) {
        for (auto c : tree.nodes[b].children) {
          const auto& node = tree.nodes[c];
          ++row.scorer_calls;
          if (node.leaf()) {
            ++st.leaves_inspected;
            row.tokens += token_cost(graph.node(node.tool).record, 2);
            leaf_scores.emplace_back(lexical_score(q.goal.intent, node.summary), c);
          } else {
            ++st.internal_inspected;
            row.tokens += text::count_whitespace_tokens(node.summary);
            scored.emplace_back(lexical_score(q.goal.intent, node.summary), c);
          }
        }
      }
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      if (scored.size() > tree.branching) scored.resize(tree.branching);
      beam.clear();
      for (auto& [s, idx] : scored) beam.push_back(idx);
    }
    std::sort(leaf_scores.begin(), leaf_scores.end(), [&](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : tree.nodes[a.second].tool < tree.nodes[b.second].tool;
    });
    if (leaf_scores.size() > shortlist) leaf_scores.resize(shortlist);
    for (auto& [s, idx] : leaf_scores) row.tokens += record_tokens(graph.node(tree.nodes[idx].tool).record);
    st.shortlist = leaf_scores.size();
    row.s1 = row.s2 = row.s3 = row.s4 = st.shortlist;
    rows.push_back(row);
    if (stats) stats->push_back(st);
  }
  return rows;
}

std::vector<BenchRow> run_tdr(const LibraryGraph& graph, const std::vector<Query>& queries,
                              std::size_t k2) {
  auto scorers = Scorers::deterministic(graph.lattice());
  RetrievalConfig rc;
  rc.k2 = k2;
  std::vector<BenchRow> rows;
  for (const auto& q : queries) {
    auto t = retrieve(graph, q.goal, scorers, rc);
    rows.push_back({"tdr", graph.size(), q.id, t.ledger.total_tokens(), t.ledger.total_scorer_calls(),
                    t.ledger.unify_visits, t.s1.size(), t.s2.size(), t.s3.size(), t.s4.size()});
  }
  return rows;
}

std::string csv_header() {
  return "substrate,n,query_id,tokens,scorer_calls,unify_visits,s1,s2,s3,s4\n";
}

std::string csv(const std::vector<BenchRow>& rows) {
  std::string out = csv_header();
  for (const auto& r : rows) {
    out += r.substrate + "," + std::to_string(r.n) + "," + r.query_id + "," + std::to_string(r.tokens) +
           "," + std::to_string(r.scorer_calls) + "," + std::to_string(r.unify_visits) + "," +
           std::to_string(r.s1) + "," + std::to_string(r.s2) + "," + std::to_string(r.s3) + "," +
           std::to_string(r.s4) + "\n";
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(Errc::InvalidArgument, "slope needs two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0) throw Error(Errc::InvalidArgument, "slope needs two distinct x");
  return sxy / sxx;
}

Report summarize(const std::vector<BenchRow>& rows, std::size_t k2) {
  std::map<std::size_t, SizeSummary> by_n;
  std::map<std::size_t, std::map<std::string, std::size_t>> counts;
  std::map<std::size_t, double> s1_sum, s2_sum, s3_sum;
  for (const auto& r : rows) {
    auto& s = by_n[r.n];
    s.n = r.n;
    ++counts[r.n][r.substrate];
    if (r.substrate == "flat") {
      s.flat += r.tokens;
      s.unify_flat += r.unify_visits;
    } else if (r.substrate == "texthier") {
      s.texthier += r.tokens;
    } else {
      s.tdr += r.tokens;
      s.unify_tdr += r.unify_visits;
      s1_sum[r.n] += r.s1;
      s2_sum[r.n] += r.s2;
      s3_sum[r.n] += r.s3;
      double excess = double(r.scorer_calls) - double(r.s1 + 2 * k2);
      if (counts[r.n]["tdr"] == 1 || excess > s.max_calls_excess) s.max_calls_excess = excess;
    }
  }
  Report rep;
  for (auto& [n, s] : by_n) {
    auto c = counts[n];
    if (c["flat"]) s.flat /= c["flat"], s.unify_flat /= c["flat"];
    if (c["texthier"]) s.texthier /= c["texthier"];
    if (c["tdr"]) {
      s.tdr /= c["tdr"];
      s.unify_tdr /= c["tdr"];
      s.alpha1 = s1_sum[n] / c["tdr"] / n;
      s.alpha2 = s1_sum[n] ? s2_sum[n] / s1_sum[n] : 0;
      s.alpha3 = s2_sum[n] ? s3_sum[n] / s2_sum[n] : 0;
    }
    rep.sizes.push_back(s);
  }
  auto fit = [&](double SizeSummary::*field, std::size_t min_n) {
    std::vector<double> x, y;
    for (const auto& s : rep.sizes) {
      if (s.n >= min_n && s.*field > 0) {
        x.push_back(double(s.n));
        y.push_back(s.*field);
      }
    }
    return x.size() >= 2 ? loglog_slope(x, y) : 0.0;
  };
  rep.slope_flat = fit(&SizeSummary::flat, 0);
  rep.slope_texthier = fit(&SizeSummary::texthier, 0);
  rep.slope_tdr = fit(&SizeSummary::tdr, 0);
  rep.tail_slope_tdr = fit(&SizeSummary::tdr, 400);
  return rep;
}

std::string report_text(const Report& rep) {
  std::string out;
  char buf[256];
  out += "n,flat,texthier,tdr,flat/tdr,texthier/tdr,alpha1,alpha2,alpha3,unify_tdr,unify_flat\n";
  for (const auto& s : rep.sizes) {
    std::snprintf(buf, sizeof buf, "%zu,%.1f,%.1f,%.1f,%.3f,%.3f,%.4f,%.4f,%.4f,%.2f,%.1f\n", s.n,
                  s.flat, s.texthier, s.tdr, s.tdr > 0 ? s.flat / s.tdr : 0.0,
                  s.tdr > 0 ? s.texthier / s.tdr : 0.0, s.alpha1, s.alpha2, s.alpha3, s.unify_tdr,
                  s.unify_flat);
    out += buf;
  }
  std::snprintf(buf, sizeof buf,
                "slope flat %.4f\nslope texthier %.4f\nslope tdr %.4f\ntail slope tdr (n >= 400) %.4f\n",
                rep.slope_flat, rep.slope_texthier, rep.slope_tdr, rep.tail_slope_tdr);
  out += buf;
  return out;
}

SweepResult sweep(const BenchConfig& config) {
  SweepResult out;
  for (auto n : config.sizes) {
    auto w = generate_library(config, n);
    auto flat = run_flat(w.graph, w.queries);
    auto tree = build_text_hierarchy(w.graph, config.branching);
    auto th = run_texthier(w.graph, tree, w.queries, config.k2);
    auto tdr = run_tdr(w.graph, w.queries, config.k2);
    for (auto* part : {&flat, &th, &tdr}) out.rows.insert(out.rows.end(), part->begin(), part->end());
  }
  out.report = summarize(out.rows, config.k2);
  return out;
}

}  // namespace tooldag::bench
