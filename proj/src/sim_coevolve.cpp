#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <set>

#include <json.hpp>

#include "tooldag/error.hpp"
#include "tooldag/sim.hpp"
#include "tooldag/text.hpp"

namespace tooldag::sim {

double PolicyTable::logit(const std::string& tmpl, const ToolId& tool) const {
  auto it = logits_.find(tmpl);
  if (it == logits_.end()) return 0.0;
  auto jt = it->second.find(tool);
  return jt == it->second.end() ? 0.0 : jt->second;
}

void PolicyTable::add(const std::string& tmpl, const ToolId& tool, double delta) {
  logits_[tmpl][tool] += delta;
}

void PolicyTable::set(const std::string& tmpl, const ToolId& tool, double value) {
  logits_[tmpl][tool] = value;
}

QueryContext build_context(const LibraryGraph& graph, const Task& task, const Scorers& scorers,
                           const SimConfig& config) {
  QueryContext ctx;
  RetrievalConfig rc;
  rc.k2 = config.k2;
  const std::size_t d = task.steps.size();
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t m = 1; m <= config.m_max && j + m <= d; ++m) {
      QueryContext::Entry e;
      e.window = make_window(task, j, m);
      auto trace = retrieve(graph, e.window.goal, scorers, rc);
      ctx.ledger += trace.ledger;
      e.actions = std::move(trace.s3);
      for (const auto& id : e.actions) e.relevance.push_back(trace.l2_scores.at(id));
      ctx.windows.emplace(std::make_pair(j, m), std::move(e));
    }
  }
  return ctx;
}

Trajectory rollout(const LibraryGraph& graph, const PolicyTable& policy, const Task& task,
                   const QueryContext& context, Rng& rng, double relevance_weight) {
  Trajectory t;
  t.query_id = task.id;
  t.graph_version = graph.version();
  const std::size_t d = task.steps.size();
  std::size_t j = 0;
  Rational current;
  while (j < d) {
    std::vector<const QueryContext::Entry*> entries;
    std::vector<ToolId> tools;
    std::vector<double> logits;
    for (auto it = context.windows.lower_bound({j, 0});
         it != context.windows.end() && it->first.first == j; ++it) {
      const auto& e = it->second;
      for (std::size_t k = 0; k < e.actions.size(); ++k) {
        entries.push_back(&e);
        tools.push_back(e.actions[k]);
        logits.push_back(policy.logit(e.window.template_key, e.actions[k]) +
                         relevance_weight * e.relevance[k]);
      }
    }
    if (tools.empty()) return t;  // truncated, r_res stays 0
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> weights;
    weights.reserve(logits.size());
    for (double l : logits) weights.push_back(std::exp(l - top));
    const std::size_t pick = rng.categorical(weights);
    const auto& w = entries[pick]->window;

    Invocation inv;
    inv.tool = tools[pick];
    inv.template_key = w.template_key;
    for (const auto& a : w.inputs) {
      if (a.kind == Arg::Kind::Const) {
        inv.args.push_back(a.value);
        inv.wiring.push_back(a);
      } else {
        inv.args.push_back(current);
        inv.wiring.push_back(Arg::result(t.calls.size() - 1));
      }
    }
    try {
      inv.result = execute_tool(graph, inv.tool, inv.args);
    } catch (const Error&) {
      return t;
    }
    current = inv.result;
    t.calls.push_back(std::move(inv));
    j += w.length;
  }
  t.r_res = current == task.oracle_value ? 1.0 : 0.0;
  return t;
}

namespace {

std::string tuple_text(const std::vector<Rational>& values) {
  std::vector<std::string> parts;
  for (const auto& v : values) parts.push_back(format_rational(v));
  return "(" + text::join(parts, ", ") + ")";
}

std::string hex8(std::uint32_t x) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", x);
  return buf;
}

struct Mined {
  std::string template_key;
  std::vector<Call> body;
  std::vector<TypeTerm> inputs;
  std::set<std::string> queries;
  std::vector<Example> examples;  // distinct inputs, buffer order
};

}  // namespace

// Template of the merged window: the later calls' intents get the slot
// token after their first keyword, as make_window writes it.
std::string merged_template(const std::vector<Invocation>& calls, std::size_t a, std::size_t b,
                            const Signature& sig) {
  std::string intent;
  for (std::size_t i = a; i <= b; ++i) {
    const auto& key = calls[i].template_key;
    std::string part = key.substr(key.rfind('|') + 1);
    if (i > a) {
      std::size_t slot = 0;
      for (std::size_t k = 0; k < calls[i].wiring.size(); ++k) {
        if (calls[i].wiring[k].kind == Arg::Kind::Result) slot = k;
      }
      auto cut = part.find(' ');
      if (cut == std::string::npos) cut = part.size();
      part.insert(cut, " w" + std::to_string(slot));
      intent += " then ";
    }
    intent += part;
  }
  return to_string(sig) + "|" + intent;
}

std::vector<Proposal> mine_windows(const std::vector<Trajectory>& buffer, const LibraryGraph& graph,
                                   const SimConfig& config) {
  std::map<std::string, Mined> windows;
  for (const auto& traj : buffer) {
    if (traj.r_res < config.rho) continue;
    const auto& calls = traj.calls;
    for (std::size_t a = 0; a < calls.size(); ++a) {
      for (std::size_t m = std::max<std::size_t>(config.m_min, 2); m <= config.m_max; ++m) {
        const std::size_t b = a + m - 1;
        if (b >= calls.size()) break;
        bool chain = true;
        for (std::size_t i = a + 1; chain && i <= b; ++i) {
          std::size_t links = 0;
          for (const auto& w : calls[i].wiring) {
            if (w.kind == Arg::Kind::Result) links += (w.index == i - 1) ? 1 : 2;
          }
          chain = links == 1;
        }
        if (!chain) continue;

        std::vector<Call> body;
        std::vector<TypeTerm> inputs;
        std::vector<Rational> values;
        bool ok = true;
        for (std::size_t i = a; ok && i <= b; ++i) {
          const auto* callee = graph.find(calls[i].tool);
          if (!callee || callee->record.sig.inputs.size() != calls[i].args.size()) {
            ok = false;
            break;
          }
          Call c{calls[i].tool, {}};
          for (std::size_t k = 0; k < calls[i].wiring.size(); ++k) {
            const auto& w = calls[i].wiring[k];
            if (i > a && w.kind == Arg::Kind::Result) {
              c.args.push_back(Arg::result(i - a - 1));
            } else {
              c.args.push_back(Arg::param(inputs.size()));
              inputs.push_back(callee->record.sig.inputs[k]);
              values.push_back(calls[i].args[k]);
            }
          }
          body.push_back(std::move(c));
        }
        if (!ok) continue;
        auto key = body_text(body);
        auto& mined = windows[key];
        if (mined.body.empty()) {
          mined.body = body;
          mined.inputs = inputs;
          Signature sig{inputs, graph.node(calls[b].tool).record.sig.output};
          mined.template_key = merged_template(calls, a, b, sig);
        }
        mined.queries.insert(traj.query_id);
        Example ex{tuple_text(values), format_rational(calls[b].result)};
        bool seen = false;
        for (const auto& e : mined.examples) seen = seen || e.input == ex.input;
        if (!seen) mined.examples.push_back(std::move(ex));
      }
    }
  }

  std::vector<Proposal> out;
  for (auto& [key, mined] : windows) {
    if (mined.queries.size() < config.recurrence || mined.body.size() < 2) continue;
    if (mined.examples.size() < 2) continue;
    std::vector<std::string> names;
    std::vector<std::pair<std::string, std::size_t>> links;
    ToolRecord r;
    r.sig.inputs = mined.inputs;
    for (std::size_t i = 0; i < mined.body.size(); ++i) {
      const auto& call = mined.body[i];
      const auto& child = graph.node(call.callee);
      names.push_back(call.callee);
      std::size_t pos = 0;
      for (std::size_t k = 0; k < call.args.size(); ++k) {
        if (call.args[k].kind == Arg::Kind::Result) pos = k;
      }
      links.emplace_back(tool_phrase(graph, call.callee), pos);
      r.spec.pre.insert(child.record.spec.pre.begin(), child.record.spec.pre.end());
      r.spec.complexity = std::max(r.spec.complexity, child.record.spec.complexity);
      r.spec.post = child.record.spec.post;
      r.sig.output = child.record.sig.output;
    }
    ToolId id = text::join(names, "_") + "_" + hex8(fnv1a32(key));
    if (graph.contains(id)) continue;
    r.description = chain_phrase(links);
    r.tags = {"composite"};
    r.examples.assign(mined.examples.begin(), mined.examples.begin() + 2);
    // A fixed probe input separates chains that share a signature and a
    // post-condition but compute different functions.
    for (long base : {2L, 3L, 5L}) {
      std::vector<Rational> probe;
      for (std::size_t k = 0; k < r.sig.inputs.size(); ++k) probe.emplace_back(base + static_cast<long>(k));
      try {
        auto y = execute_body(graph, mined.body, probe);
        Example ex{tuple_text(probe), format_rational(y)};
        if (ex.input != r.examples[0].input && ex.input != r.examples[1].input) r.examples.push_back(ex);
        break;
      } catch (const Error&) {
      }
    }
    out.push_back({make_composite(std::move(id), std::move(r), mined.body), mined.template_key,
                   mined.queries.size()});
  }
  return out;
}

std::vector<ToolNode> abstract_composites(const std::vector<Trajectory>& buffer,
                                          const LibraryGraph& graph, const SimConfig& config) {
  std::vector<ToolNode> out;
  for (auto& p : mine_windows(buffer, graph, config)) out.push_back(std::move(p.node));
  return out;
}

void grpo_step(PolicyTable& policy, const std::vector<Trajectory>& group,
               const std::vector<RewardBreakdown>& rewards, const SimConfig& config) {
  if (rewards.size() != group.size()) throw Error(Errc::InvalidArgument, "one reward per trajectory");
  std::vector<double> shaped;
  for (const auto& r : rewards) shaped.push_back(r.shaped);
  const auto adv = group_advantage(shaped);
  const double g = static_cast<double>(group.size());
  std::map<std::pair<std::string, ToolId>, double> delta;
  for (std::size_t i = 0; i < group.size(); ++i) {
    for (const auto& c : group[i].calls) delta[{c.template_key, c.tool}] += config.eta * adv[i] / g;
  }
  for (const auto& [entry, d] : delta) {
    if (d == 0.0) continue;
    policy.add(entry.first, entry.second, std::clamp(d, -config.eps_clip, config.eps_clip));
  }
}

namespace {

struct Probe {
  // (probe index, start, length) -> action set
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<ToolId>> sets;
};

Probe snapshot(const LibraryGraph& graph, const std::vector<Task>& probes, const Scorers& scorers,
               const SimConfig& config) {
  Probe p;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    auto ctx = build_context(graph, probes[i], scorers, config);
    for (auto& [key, e] : ctx.windows) p.sets[{i, key.first, key.second}] = e.actions;
  }
  return p;
}

void compare(const Probe& before, const Probe& after, const LibraryGraph& graph,
             const std::vector<Task>& probes, const Scorers& scorers, std::size_t step,
             std::vector<Breach>& out) {
  for (const auto& [key, old_set] : before.sets) {
    auto it = after.sets.find(key);
    const std::vector<ToolId> empty;
    const auto& now = it == after.sets.end() ? empty : it->second;
    const auto& [pi, j, m] = key;
    const auto goal = make_window(probes[pi], j, m).goal;
    for (const auto& t : old_set) {
      if (std::find(now.begin(), now.end(), t) != now.end()) continue;
      const double old_score = scorers.examples->score(goal, graph.node(t).record);
      bool displaced = false;
      for (const auto& u : now) {
        if (std::find(old_set.begin(), old_set.end(), u) != old_set.end()) continue;
        const auto& n = graph.node(u);
        if (n.kind == ToolKind::Composite && scorers.examples->score(goal, n.record) > old_score) {
          displaced = true;
        }
      }
      if (!displaced) out.push_back({step, probes[pi].id, t});
    }
  }
}

struct GroupStats {
  double j = 0, depth = 0, phi = 0;
  std::size_t calls = 0, n = 0;
  void add(const LibraryGraph& g, const Trajectory& t, const RewardBreakdown& r) {
    j += r.shaped;
    ++n;
    for (const auto& c : t.calls) {
      const auto& node = g.node(c.tool);
      depth += static_cast<double>(node.depth);
      phi += static_cast<double>(node.flat - 1);
      ++calls;
    }
  }
  void fill(MetricRow& row) const {
    row.j = n ? j / static_cast<double>(n) : 0.0;
    row.mean_depth = calls ? depth / static_cast<double>(calls) : 0.0;
    row.mean_phi = calls ? phi / static_cast<double>(calls) : 0.0;
  }
};

}  // namespace

EvalPoint evaluate(const LibraryGraph& graph, const PolicyTable& policy, const std::vector<Task>& tasks,
                   const Scorers& scorers, const SimConfig& config, std::uint64_t seed) {
  EvalPoint p;
  double depth = 0;
  std::size_t calls = 0, n = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto ctx = build_context(graph, tasks[i], scorers, config);
    for (std::size_t g = 0; g < config.group_size; ++g) {
      Rng rng(derive_seed(seed, "eval/" + std::to_string(i) + "/" + std::to_string(g)));
      auto t = rollout(graph, policy, tasks[i], ctx, rng, config.relevance_weight);
      p.j += shaped_reward(graph, t, config.lambda).shaped;
      p.r_res += t.r_res;
      for (const auto& c : t.calls) depth += static_cast<double>(graph.node(c.tool).depth);
      calls += t.calls.size();
      ++n;
    }
  }
  if (n) {
    p.j /= static_cast<double>(n);
    p.r_res /= static_cast<double>(n);
  }
  p.mean_depth = calls ? depth / static_cast<double>(calls) : 0.0;
  return p;
}

RunResult coevolve(const SimConfig& config) {
  if (config.group_size < 2) throw Error(Errc::GroupTooSmall, "group size must be at least 2");
  RunResult res{{}, {}, {}, arithmetic_library(config.input_match), {}, {}, true, 0};
  auto& graph = res.graph;
  auto& policy = res.policy;
  const auto scorers = sim_scorers(graph.lattice());

  const auto pool = generate_tasks(derive_seed(config.seed, "tasks"), config.tasks_per_epoch,
                                   config.min_depth, config.max_depth, "q");
  const auto warm = generate_tasks(derive_seed(config.seed, "warmup"), config.warmup_tasks,
                                   config.min_depth, config.max_depth, "w");
  const auto held_out = generate_tasks(derive_seed(config.seed, "eval"), config.eval_tasks,
                                       config.min_depth, config.max_depth, "e");
  const auto eval_seed = derive_seed(config.seed, "eval-rollouts");
  std::vector<Task> probes(pool.begin(), pool.begin() + std::min(config.probe_tasks, pool.size()));

  std::set<ToolId> committed;
  for (const auto& [id, n] : graph.nodes()) committed.insert(id);
  auto audit_library = [&] {
    for (const auto& id : committed) {
      if (!graph.contains(id)) res.library_monotone = false;
    }
    for (const auto& [id, n] : graph.nodes()) committed.insert(id);
    res.library_sizes.push_back(graph.size());
  };
  auto fold = [&](const std::vector<Trajectory>& buffer) {
    for (const auto& t : buffer) {
      if (t.r_res < config.rho) ++res.ungated_commits;
    }
    for (auto& p : mine_windows(buffer, graph, config)) {
      // A new composite gets the same count prior the warm start gives to
      // primitives, read from the teacher's supporting occurrences.
      if (graph.insert_tool(p.node).added()) {
        policy.set(p.template_key, p.node.id,
                   config.warm_scale * std::log1p(static_cast<double>(p.support)));
      }
    }
  };

  // Stage 1: warm start with a uniform planner.
  {
    Rng rng(derive_seed(config.seed, "warmup-rollouts"));
    std::vector<Trajectory> successes;
    GroupStats stats;
    std::size_t tokens = 0;
    for (const auto& task : warm) {
      auto ctx = build_context(graph, task, scorers, config);
      tokens += ctx.ledger.total_tokens();
      for (std::size_t g = 0; g < config.group_size; ++g) {
        auto t = rollout(graph, policy, task, ctx, rng, config.relevance_weight);
        stats.add(graph, t, shaped_reward(graph, t, config.lambda));
        if (t.r_res >= config.rho) successes.push_back(std::move(t));
      }
    }
    // Stage 2 stand-in: success counts become the initial logits.
    std::map<std::pair<std::string, ToolId>, std::size_t> counts;
    for (const auto& t : successes) {
      for (const auto& c : t.calls) ++counts[{c.template_key, c.tool}];
    }
    for (const auto& [entry, n] : counts) {
      policy.set(entry.first, entry.second, config.warm_scale * std::log1p(static_cast<double>(n)));
    }
    if (!successes.empty()) fold(successes);
    MetricRow row;
    stats.fill(row);
    row.composites = graph.composite_count();
    row.rejections = graph.rejections().size();
    row.tokens = warm.empty() ? 0 : tokens / warm.size();
    res.rows.push_back(row);
    audit_library();
  }

  auto record_eval = [&](std::size_t step) {
    if (held_out.empty()) return;
    auto p = evaluate(graph, policy, held_out, scorers, config, eval_seed);
    p.step = step;
    res.eval.push_back(p);
  };
  record_eval(0);

  // Stage 3: online co-evolution.
  Probe last_probe = snapshot(graph, probes, scorers, config);
  std::deque<std::vector<Trajectory>> buffer;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs && step < config.queries; ++epoch) {
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffler(derive_seed(config.seed, "epoch/" + std::to_string(epoch)));
    shuffler.shuffle(order);
    for (std::size_t idx : order) {
      if (step >= config.queries) break;
      ++step;
      const auto& task = pool[idx];
      auto ctx = build_context(graph, task, scorers, config);
      Rng rng(derive_seed(config.seed, "rollout/" + std::to_string(step)));
      std::vector<Trajectory> group;
      std::vector<RewardBreakdown> rewards;
      GroupStats stats;
      for (std::size_t g = 0; g < config.group_size; ++g) {
        group.push_back(rollout(graph, policy, task, ctx, rng, config.relevance_weight));
        rewards.push_back(shaped_reward(graph, group.back(), config.lambda));
        stats.add(graph, group.back(), rewards.back());
      }
      if (config.eta_decay > 0) {
        SimConfig scaled = config;
        scaled.eta = config.eta / (1 + double(step) / config.eta_decay);
        grpo_step(policy, group, rewards, scaled);
      } else {
        grpo_step(policy, group, rewards, config);
      }

      std::vector<Trajectory> positive;
      for (auto& t : group) {
        if (t.r_res >= config.rho) positive.push_back(std::move(t));
      }
      if (!positive.empty()) {
        buffer.push_back(std::move(positive));
        while (buffer.size() > config.buffer_queries) buffer.pop_front();
        std::vector<Trajectory> flat;
        for (const auto& q : buffer) flat.insert(flat.end(), q.begin(), q.end());
        fold(flat);
      }

      MetricRow row;
      row.step = step;
      stats.fill(row);
      row.composites = graph.composite_count();
      row.rejections = graph.rejections().size();
      row.tokens = ctx.ledger.total_tokens();
      res.rows.push_back(row);
      audit_library();

      if (config.probe_every && step % config.probe_every == 0) {
        auto now = snapshot(graph, probes, scorers, config);
        compare(last_probe, now, graph, probes, scorers, step, res.breaches);
        last_probe = std::move(now);
        record_eval(step);
      }
    }
  }
  return res;
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = "step,J,mean_depth,composites,mean_phi,rejections,tokens\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%zu,%.6f,%zu,%zu\n", r.step, r.j, r.mean_depth,
                  r.composites, r.mean_phi, r.rejections, r.tokens);
    out += buf;
  }
  return out;
}

std::string eval_csv(const std::vector<EvalPoint>& points) {
  std::string out = "step,J,r_res,mean_depth\n";
  char buf[160];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", p.step, p.j, p.r_res, p.mean_depth);
    out += buf;
  }
  return out;
}

std::string manifest_json(const SimConfig& c, const RunResult& r) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["group_size"] = c.group_size;
  j["lambda"] = c.lambda;
  j["rho"] = c.rho;
  j["eta"] = c.eta;
  j["eta_decay"] = c.eta_decay;
  j["eps_clip"] = c.eps_clip;
  j["k2"] = c.k2;
  j["epochs"] = c.epochs;
  j["tasks_per_epoch"] = c.tasks_per_epoch;
  j["queries"] = c.queries;
  j["min_depth"] = c.min_depth;
  j["max_depth"] = c.max_depth;
  j["m_min"] = c.m_min;
  j["m_max"] = c.m_max;
  j["recurrence"] = c.recurrence;
  j["buffer_queries"] = c.buffer_queries;
  j["warmup_tasks"] = c.warmup_tasks;
  j["warm_scale"] = c.warm_scale;
  j["relevance_weight"] = c.relevance_weight;
  j["eval_tasks"] = c.eval_tasks;
  j["probe_tasks"] = c.probe_tasks;
  j["probe_every"] = c.probe_every;
  j["input_match"] = c.input_match == InputMatch::Exact ? "exact" : "covariant";
  j["steps"] = r.rows.empty() ? 0 : r.rows.back().step;
  j["library_size"] = r.graph.size();
  j["composites"] = r.graph.composite_count();
  j["max_depth"] = r.graph.max_depth();
  j["rejections"] = r.graph.rejections().size();
  j["assumption_breaches"] = r.breaches.size();
  j["library_monotone"] = r.library_monotone;
  return j.dump(2) + "\n";
}

}  // namespace tooldag::sim
