#include "tooldag/persistence.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tooldag/error.hpp"
#include "tooldag/text.hpp"

namespace tooldag {

namespace {

constexpr int kFormat = 1;

struct Line {
  std::size_t number;
  std::string key;
  std::string value;
};

std::vector<Line> key_lines(std::string_view text, std::size_t first_line) {
  std::vector<Line> out;
  std::size_t number = first_line;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto raw = text::trim(text.substr(pos, end - pos));
    if (!raw.empty() && raw.front() != '#') {
      auto colon = raw.find(':');
      if (colon == std::string_view::npos) {
        throw Error(Errc::ParseError, "expected 'key : value'", number);
      }
      out.push_back({number, std::string(text::trim(raw.substr(0, colon))),
                     std::string(text::trim(raw.substr(colon + 1)))});
    }
    pos = end + 1;
    ++number;
  }
  return out;
}

std::uint64_t parse_count(const Line& l) {
  if (l.value.empty() || l.value.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(Errc::ParseError, l.key + " must be a non-negative integer", l.number);
  }
  try {
    return std::stoull(l.value);
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, l.key + " out of range", l.number);
  }
}

template <typename Fn>
void at_line(std::size_t line, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw Error(Errc::ParseError, e.what(), line);
  } catch (const Error& e) {
    if (e.code() == Errc::ParseError && e.where()) throw;
    throw Error(Errc::ParseError, e.what(), line);
  }
}

std::string registry_ctors(const TypeRegistry& reg) {
  std::vector<std::string> items;
  for (const auto& [name, arity] : reg.constructors()) items.push_back(name + "/" + std::to_string(arity));
  return list_text(items);
}

std::string lattice_edges(const SubtypeLattice& lattice) {
  std::vector<std::string> items;
  for (const auto& [sub, super] : lattice.edges()) items.push_back(sub + " <: " + super);
  return list_text(items);
}

}  // namespace

std::string node_text(const ToolNode& n) {
  std::string out;
  out += "name : " + n.id + "\n";
  out += "kind : " + to_string(n.kind) + "\n";
  out += "depth : " + std::to_string(n.depth) + "\n";
  out += "since : " + std::to_string(n.since) + "\n";
  out += "children : " + list_text(n.children) + "\n";
  out += "L1 : " + n.id + " :: " + level_text(n.record, 1) + "\n";
  for (int level = 2; level <= 4; ++level) {
    out += "L" + std::to_string(level) + " : " + level_text(n.record, level) + "\n";
  }
  out += "body : " + body_text(n.body) + "\n";
  return out;
}

std::vector<NodeBlock> parse_node_blocks(std::string_view text, const TypeRegistry* registry,
                                         std::size_t first_line) {
  auto lines = key_lines(text, first_line);
  std::vector<NodeBlock> out;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (lines[i].key != "name") {
      throw Error(Errc::ParseError, "expected 'name : ...', got '" + lines[i].key + "'",
                  lines[i].number);
    }
    NodeBlock block;
    block.line = lines[i].number;
    const std::string id = lines[i].value;
    if (id.empty()) throw Error(Errc::ParseError, "empty tool name", block.line);
    std::map<std::string, const Line*> fields;
    for (++i; i < lines.size() && lines[i].key != "name"; ++i) {
      if (!fields.emplace(lines[i].key, &lines[i]).second) {
        throw Error(Errc::ParseError, "repeated field " + lines[i].key, lines[i].number);
      }
    }
    for (const auto& [key, line] : fields) {
      static const std::set<std::string> known = {"kind", "depth", "since", "children",
                                                  "L1",   "L2",    "L3",    "L4", "body"};
      if (!known.count(key)) throw Error(Errc::ParseError, "unknown field " + key, line->number);
    }
    auto need = [&](const char* key) -> const Line& {
      auto it = fields.find(key);
      if (it == fields.end()) {
        throw Error(Errc::ParseError, id + ": missing field " + key, block.line);
      }
      return *it->second;
    };

    ToolRecord record;
    const Line& l1 = need("L1");
    at_line(l1.number, [&] {
      std::string_view v = l1.value;
      auto sep = v.find("::");
      if (sep != std::string_view::npos) {
        if (text::trim(v.substr(0, sep)) != id) {
          throw std::invalid_argument("L1 names " + std::string(text::trim(v.substr(0, sep))) +
                                      ", block is " + id);
        }
        v = v.substr(sep + 2);
      }
      parse_l1(v, record, registry);
    });
    at_line(need("L2").number, [&] { parse_l2(need("L2").value, record); });
    at_line(need("L3").number, [&] { parse_l3(need("L3").value, record); });
    at_line(need("L4").number, [&] { parse_l4(need("L4").value, record); });

    std::vector<Call> body;
    const Line& body_line = need("body");
    at_line(body_line.number, [&] { body = parse_body(body_line.value); });

    const Line& kind = need("kind");
    if (kind.value == "primitive") {
      if (!body.empty()) throw Error(Errc::ParseError, "primitive with a body", body_line.number);
      if (!record.deps.empty()) throw Error(Errc::ParseError, "primitive with deps", l1.number);
      block.node = make_primitive(id, std::move(record));
    } else if (kind.value == "composite") {
      auto declared_deps = record.deps;
      block.node = make_composite(id, std::move(record), std::move(body));
      if (declared_deps != block.node.record.deps) {
        throw Error(Errc::ParseError, "deps disagree with the body", l1.number);
      }
    } else {
      throw Error(Errc::ParseError, "kind must be primitive or composite", kind.number);
    }

    const Line& children = need("children");
    std::vector<std::string> listed;
    at_line(children.number, [&] { listed = parse_list(children.value); });
    if (listed != block.node.children) {
      throw Error(Errc::ParseError, "children disagree with the body", children.number);
    }
    if (auto it = fields.find("depth"); it != fields.end()) block.depth = parse_count(*it->second);
    if (auto it = fields.find("since"); it != fields.end()) block.since = parse_count(*it->second);
    out.push_back(std::move(block));
  }
  return out;
}

std::string library_text(const LibraryGraph& graph) {
  std::string out = "format : " + std::to_string(kFormat) + "\n";
  out += "version : " + std::to_string(graph.version()) + "\n";
  out += "bases : " +
         list_text(std::vector<std::string>(graph.registry().bases().begin(),
                                            graph.registry().bases().end())) +
         "\n";
  out += "ctors : " + registry_ctors(graph.registry()) + "\n";
  out += "lattice : " + lattice_edges(graph.lattice()) + "\n";
  for (const auto& id : graph.topological_order()) out += "\n" + node_text(graph.node(id));
  return out;
}

LibraryGraph parse_library(std::string_view text) {
  // Header: everything up to the first "name" line.
  std::size_t header_end = 0, line_no = 1, pos = 0;
  bool found = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto raw = text::trim(text.substr(pos, end - pos));
    if (raw.substr(0, 4) == "name" && text::trim(raw.substr(4)).substr(0, 1) == ":") {
      header_end = pos;
      found = true;
      break;
    }
    pos = end + 1;
    ++line_no;
  }
  if (!found) header_end = text.size();

  std::map<std::string, Line> header;
  for (auto& l : key_lines(text.substr(0, header_end), 1)) {
    if (!header.emplace(l.key, l).second) throw Error(Errc::ParseError, "repeated " + l.key, l.number);
  }
  for (const char* key : {"format", "version", "bases", "ctors", "lattice"}) {
    if (!header.count(key)) throw Error(Errc::ParseError, std::string("missing header field ") + key, 1);
  }
  if (header.size() != 5) throw Error(Errc::ParseError, "unknown header field", 1);
  if (parse_count(header.at("format")) != kFormat) {
    throw Error(Errc::ParseError, "unsupported format", header.at("format").number);
  }
  const std::uint64_t version = parse_count(header.at("version"));

  TypeRegistry registry;
  at_line(header.at("bases").number, [&] {
    for (const auto& b : parse_list(header.at("bases").value)) registry.declare_base(b);
  });
  at_line(header.at("ctors").number, [&] {
    for (const auto& item : parse_list(header.at("ctors").value)) {
      auto slash = item.find('/');
      if (slash == std::string::npos) throw std::invalid_argument("constructor needs name/arity");
      registry.declare_constructor(item.substr(0, slash), std::stoul(item.substr(slash + 1)));
    }
  });
  std::vector<std::pair<std::string, std::string>> edges;
  at_line(header.at("lattice").number, [&] {
    for (const auto& item : parse_list(header.at("lattice").value)) {
      auto op = item.find("<:");
      if (op == std::string::npos) throw std::invalid_argument("lattice edge needs 'a <: b'");
      edges.emplace_back(std::string(text::trim(item.substr(0, op))),
                         std::string(text::trim(item.substr(op + 2))));
    }
  });
  std::optional<SubtypeLattice> lattice;
  try {
    lattice.emplace(edges);
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), header.at("lattice").number);
  }

  auto blocks = parse_node_blocks(text.substr(header_end), &registry, line_no);

  // Structural checks over the whole file before anything is committed.
  std::map<ToolId, std::size_t> position;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!position.emplace(blocks[i].node.id, i).second) {
      throw Error(Errc::ParseError, "duplicate tool " + blocks[i].node.id, blocks[i].line);
    }
  }
  std::map<ToolId, std::size_t> indegree;
  std::map<ToolId, std::vector<ToolId>> parents;
  for (const auto& b : blocks) {
    indegree[b.node.id];
    for (const auto& c : b.node.distinct_children()) {
      if (!position.count(c)) {
        throw Error(Errc::ParseError, b.node.id + " depends on missing tool " + c, b.line);
      }
      ++indegree[b.node.id];
      parents[c].push_back(b.node.id);
    }
  }
  std::vector<ToolId> ready;
  for (const auto& [id, d] : indegree) {
    if (d == 0) ready.push_back(id);
  }
  std::size_t seen = 0;
  while (!ready.empty()) {
    auto id = ready.back();
    ready.pop_back();
    ++seen;
    for (const auto& p : parents[id]) {
      if (--indegree[p] == 0) ready.push_back(p);
    }
  }
  if (seen != blocks.size()) {
    for (const auto& b : blocks) {
      if (indegree[b.node.id]) throw Error(Errc::CycleInFile, "cycle through " + b.node.id, b.line);
    }
  }

  LibraryGraph graph(registry, *lattice);
  for (auto& b : blocks) {
    for (const auto& c : b.node.children) {
      if (position.at(c) > position.at(b.node.id)) {
        throw Error(Errc::ParseError, b.node.id + " precedes its child " + c, b.line);
      }
    }
    if (b.since && *b.since > version) {
      throw Error(Errc::ParseError, "since exceeds the library version", b.line);
    }
    b.node.since = b.since.value_or(0);
    try {
      graph.restore(std::move(b.node), b.depth);
    } catch (const Error& e) {
      if (e.code() == Errc::DepthMismatch) throw;
      throw Error(Errc::ParseError, e.what(), b.line);
    }
  }
  graph.set_version(version);
  return graph;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::InvalidArgument, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::InvalidArgument, "cannot write " + path);
  out << contents;
  if (!out.flush()) throw Error(Errc::InvalidArgument, "write failed: " + path);
}

void save_library(const LibraryGraph& graph, const std::string& path) {
  write_file(path, library_text(graph));
}

LibraryGraph load_library(const std::string& path) { return parse_library(read_file(path)); }

std::vector<NodeBlock> load_candidates(const std::string& path, const TypeRegistry& registry) {
  return parse_node_blocks(read_file(path), &registry);
}

namespace {
std::string dot_id(const std::string& id) { return "\"" + id + "\""; }
}  // namespace

std::string dot_text(const LibraryGraph& graph) {
  std::string out = "digraph library {\n";
  for (const auto& id : graph.topological_order()) {
    const auto& n = graph.node(id);
    out += "  " + dot_id(id) + " [label=\"" + id + "\\nd=" + std::to_string(n.depth) + "\"" +
           (n.kind == ToolKind::Composite ? ", shape=box" : "") + "];\n";
  }
  for (const auto& [parent, child] : graph.edges()) {
    out += "  " + dot_id(parent) + " -> " + dot_id(child) + ";\n";
  }
  out += "}\n";
  return out;
}

void export_dot(const LibraryGraph& graph, const std::string& path) {
  write_file(path, dot_text(graph));
}

}  // namespace tooldag
