#include "tooldag/reward.hpp"

#include <cmath>

#include "tooldag/error.hpp"

namespace tooldag {

namespace {

const ToolNode& resolve(const LibraryGraph& graph, const Trajectory& traj, const ToolId& id) {
  if (traj.graph_version > graph.version()) {
    throw Error(Errc::StaleVersion, "trajectory " + traj.query_id + " claims version " +
                                        std::to_string(traj.graph_version) + " but the graph is at " +
                                        std::to_string(graph.version()));
  }
  const ToolNode* n = graph.find(id);
  if (!n || n->since > traj.graph_version) {
    throw Error(Errc::UnknownTool, id + " is not in the library at version " +
                                       std::to_string(traj.graph_version));
  }
  return *n;
}

}  // namespace

std::uint64_t comp_reward(const LibraryGraph& graph, const Trajectory& traj) {
  std::uint64_t total = 0;
  for (const auto& c : traj.calls) total += resolve(graph, traj, c.tool).flat - 1;
  return total;
}

std::uint64_t prim_workload(const LibraryGraph& graph, const Trajectory& traj) {
  std::uint64_t total = 0;
  for (const auto& c : traj.calls) total += resolve(graph, traj, c.tool).flat;
  return total;
}

RewardBreakdown shaped_reward(const LibraryGraph& graph, const Trajectory& traj, double lambda) {
  if (!(traj.r_res >= 0.0 && traj.r_res <= 1.0)) {
    throw Error(Errc::InvalidArgument, "r_res outside [0, 1]");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(Errc::InvalidArgument, "lambda must be a finite non-negative number");
  }
  RewardBreakdown b;
  b.r_res = traj.r_res;
  b.lambda = lambda;
  b.r_comp = comp_reward(graph, traj);
  b.t_prim = prim_workload(graph, traj);
  b.t_calls = traj.calls.size();
  // -T = R_comp - T_prim, in integers.
  if (b.t_calls + b.r_comp != b.t_prim) {
    throw Error(Errc::InvalidArgument, "call accounting identity violated for " + traj.query_id);
  }
  b.shaped_exact = Rational(traj.r_res) + Rational(lambda) * Rational(static_cast<unsigned long>(b.r_comp));
  b.shaped = traj.r_res + lambda * static_cast<double>(b.r_comp);
  return b;
}

std::vector<double> group_advantage(const std::vector<double>& rewards) {
  if (rewards.size() < 2) throw Error(Errc::GroupTooSmall, "group advantage needs at least 2 rewards");
  std::vector<double> out(rewards.size(), 0.0);
  bool all_equal = true;
  for (double r : rewards) all_equal = all_equal && r == rewards.front();
  if (all_equal) return out;
  const double n = static_cast<double>(rewards.size());
  double mean = 0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  if (sd == 0) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

}  // namespace tooldag
