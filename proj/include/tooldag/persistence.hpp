#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tooldag/library_graph.hpp"

namespace tooldag {

// Library file: a header, then one block per node in topological order.
//
//   format : 1
//   version : 7
//   bases : [bool, float, int, str]
//   ctors : [dict/2, list/1, set/1, tuple/2]
//   lattice : [int <: float]
//
//   name : add
//   kind : primitive
//   depth : 0
//   since : 1
//   children : []
//   L1 : add :: (float, float) -> float ; deps = []
//   L2 : "Return the sum of two real numbers." ; tags = [arithmetic]
//   L3 : pre = [] ; post = "returns a + b" ; complexity = O(1)
//   L4 : [(1, 2) -> 3]
//   body : []
//
// Lines starting with '#' are comments. Depths are recomputed on load and
// compared against the stored value.
std::string library_text(const LibraryGraph& graph);
LibraryGraph parse_library(std::string_view text);

void save_library(const LibraryGraph& graph, const std::string& path);
LibraryGraph load_library(const std::string& path);

// A node block as read from text. Candidate files for batch insertion use
// the same blocks with depth and since left out.
struct NodeBlock {
  ToolNode node;
  std::optional<std::size_t> depth;
  std::optional<std::uint64_t> since;
  std::size_t line = 0;  // first line of the block
};

std::string node_text(const ToolNode& node);
std::vector<NodeBlock> parse_node_blocks(std::string_view text, const TypeRegistry* registry,
                                         std::size_t first_line = 1);
std::vector<NodeBlock> load_candidates(const std::string& path, const TypeRegistry& registry);

std::string dot_text(const LibraryGraph& graph);
void export_dot(const LibraryGraph& graph, const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace tooldag
