#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tooldag/library_graph.hpp"
#include "tooldag/rational.hpp"
#include "tooldag/tool_record.hpp"

namespace tooldag {

// One executed tool call. `wiring` records where each argument came from:
// Arg::result(i) is the output of call i of the same trajectory, a constant
// is a literal of the query. The planner fills `template_key`.
struct Invocation {
  ToolId tool;
  std::vector<Rational> args;
  Rational result;
  std::vector<Arg> wiring;
  std::string template_key;
};

struct Trajectory {
  std::string query_id;
  std::vector<Invocation> calls;
  double r_res = 0.0;
  std::uint64_t graph_version = 0;
};

struct RewardBreakdown {
  double r_res = 0.0;
  std::uint64_t r_comp = 0;
  std::uint64_t t_prim = 0;
  std::uint64_t t_calls = 0;
  double lambda = 0.0;
  Rational shaped_exact;  // r_res + lambda * r_comp with both doubles read exactly
  double shaped = 0.0;
};

// Sum of saved calls / flat sizes over the calls. Throws StaleVersion when
// the trajectory claims a version the graph has not reached, UnknownTool
// for ids absent at that version.
std::uint64_t comp_reward(const LibraryGraph& graph, const Trajectory& traj);
std::uint64_t prim_workload(const LibraryGraph& graph, const Trajectory& traj);

RewardBreakdown shaped_reward(const LibraryGraph& graph, const Trajectory& traj, double lambda);

// (r - mean) / population std; zeros when every reward is equal.
// Throws GroupTooSmall below two rewards.
std::vector<double> group_advantage(const std::vector<double>& rewards);

}  // namespace tooldag
