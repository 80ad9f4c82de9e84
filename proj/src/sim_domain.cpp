#include <algorithm>
#include <cmath>
#include <functional>

#include "tooldag/error.hpp"
#include "tooldag/sim.hpp"
#include "tooldag/text.hpp"

namespace tooldag::sim {

namespace {

struct OpInfo {
  std::string id;
  std::string keyword;
  std::string signature;
  std::string description;
  std::set<std::string> pre;
  std::string post;
  std::vector<std::string> examples;
};

const std::vector<OpInfo>& op_table() {
  static const std::vector<OpInfo> table = {
      {"add", "sum", "(float, float) -> float", "Return the sum of two real numbers.", {}, "result is the sum",
       {"(1, 2) -> 3", "(-1/2, 4) -> 7/2"}},
      {"sub", "difference", "(float, float) -> float", "Return the difference of two real numbers.", {},
       "result is the difference", {"(5, 2) -> 3", "(1, 4) -> -3"}},
      {"mul", "product", "(float, float) -> float", "Return the product of two real numbers.", {},
       "result is the product", {"(3, 4) -> 12", "(-1/2, 2) -> -1"}},
      {"div", "quotient", "(float, float) -> float", "Return the quotient of two real numbers.",
       {"nonzero-divisor"}, "result is the quotient", {"(6, 3) -> 2", "(1, 4) -> 1/4"}},
      {"pow_int", "power", "(float, int) -> float",
       "Raise a real number to a non-negative integer power.", {"nonneg-int-exponent"},
       "result is the power", {"(2, 3) -> 8", "(-3, 2) -> 9"}},
      {"neg", "negation", "(float) -> float", "Return the negation of a real number.", {},
       "result is the negation", {"(3) -> -3", "(-1/2) -> 1/2"}},
  };
  return table;
}

const OpInfo* op_info(const std::string& id) {
  for (const auto& o : op_table()) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

}  // namespace

const std::vector<std::string>& operators() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& o : op_table()) v.push_back(o.id);
    return v;
  }();
  return ids;
}

bool is_operator(const std::string& id) { return op_info(id) != nullptr; }

std::size_t operator_arity(const std::string& op) {
  const auto* o = op_info(op);
  if (!o) throw Error(Errc::UnknownTool, op);
  return op == "neg" ? 1 : 2;
}

const std::string& keyword(const std::string& op) {
  const auto* o = op_info(op);
  if (!o) throw Error(Errc::UnknownTool, op);
  return o->keyword;
}

Rational apply_operator(const std::string& op, const std::vector<Rational>& a) {
  if (!is_operator(op)) throw Error(Errc::UnknownTool, op);
  if (a.size() != operator_arity(op)) {
    throw Error(Errc::ArityMismatch, op + " takes " + std::to_string(operator_arity(op)) +
                                         " arguments, got " + std::to_string(a.size()));
  }
  if (op == "add") return a[0] + a[1];
  if (op == "sub") return a[0] - a[1];
  if (op == "mul") return a[0] * a[1];
  if (op == "neg") return -a[0];
  if (op == "div") {
    if (a[1] == 0) throw Error(Errc::DivisionByZero, "div by zero");
    return a[0] / a[1];
  }
  // pow_int
  if (!is_integer(a[1]) || a[1] < 0 || a[1] > 64) {
    throw Error(Errc::InvalidArgument, "pow_int exponent must be an integer in [0, 64]");
  }
  Rational r(1);
  for (long i = a[1].get_num().get_si(); i > 0; --i) r *= a[0];
  return r;
}

LibraryGraph arithmetic_library(InputMatch mode) {
  LibraryGraph g(TypeRegistry::standard(),
                 SubtypeLattice(std::vector<std::pair<std::string, std::string>>{{"int", "float"}}, mode));
  for (const auto& o : op_table()) {
    ToolRecord r;
    r.sig = parse_signature(o.signature);
    // Descriptions are the bare keyword: sub-goal intents in this domain are
    // keyword chains, and a sentence would rank the primitive below two-step
    // composites sharing the keyword.
    r.description = o.keyword;
    r.tags = {"arithmetic", "primitive"};
    r.spec.pre = o.pre;
    r.spec.post = o.post;
    r.spec.complexity = Complexity::Constant;
    for (const auto& e : o.examples) r.examples.push_back(parse_example(e));
    auto out = g.insert_tool(make_primitive(o.id, std::move(r)));
    if (!out.added()) throw Error(Errc::InvalidArgument, "seed primitive " + o.id + ": " + to_string(out));
  }
  return g;
}

Rational execute_body(const LibraryGraph& graph, const std::vector<Call>& body,
                      const std::vector<Rational>& args) {
  std::vector<Rational> results;
  results.reserve(body.size());
  for (const auto& call : body) {
    std::vector<Rational> in;
    in.reserve(call.args.size());
    for (const auto& a : call.args) {
      switch (a.kind) {
        case Arg::Kind::Param:
          if (a.index >= args.size()) throw Error(Errc::ArityMismatch, "missing parameter $" + std::to_string(a.index));
          in.push_back(args[a.index]);
          break;
        case Arg::Kind::Result:
          if (a.index >= results.size()) throw Error(Errc::ArityMismatch, "forward reference %" + std::to_string(a.index));
          in.push_back(results[a.index]);
          break;
        case Arg::Kind::Const:
          in.push_back(a.value);
          break;
      }
    }
    results.push_back(execute_tool(graph, call.callee, in));
  }
  if (results.empty()) throw Error(Errc::ArityMismatch, "empty body");
  return results.back();
}

Rational execute_tool(const LibraryGraph& graph, const ToolId& id, const std::vector<Rational>& args) {
  const auto& n = graph.node(id);
  if (args.size() != n.record.sig.inputs.size()) {
    throw Error(Errc::ArityMismatch, id + " takes " + std::to_string(n.record.sig.inputs.size()) +
                                         " arguments, got " + std::to_string(args.size()));
  }
  if (n.kind == ToolKind::Primitive) return apply_operator(id, args);
  return execute_body(graph, n.body, args);
}

std::vector<Call> primitive_expansion(const LibraryGraph& graph, const ToolId& id) {
  const auto& root = graph.node(id);
  if (root.kind == ToolKind::Primitive) {
    Call c{id, {}};
    for (std::size_t i = 0; i < root.record.sig.inputs.size(); ++i) c.args.push_back(Arg::param(i));
    return {c};
  }
  std::vector<Call> out;
  // Inline `body` with its params bound to `outer` args; returns the index
  // in `out` holding the body's result.
  std::function<std::size_t(const std::vector<Call>&, const std::vector<Arg>&)> inline_body =
      [&](const std::vector<Call>& body, const std::vector<Arg>& outer) {
        std::vector<std::size_t> where;  // body-local result -> index in out
        for (const auto& call : body) {
          std::vector<Arg> bound;
          for (const auto& a : call.args) {
            if (a.kind == Arg::Kind::Param) {
              bound.push_back(outer.at(a.index));
            } else if (a.kind == Arg::Kind::Result) {
              bound.push_back(Arg::result(where.at(a.index)));
            } else {
              bound.push_back(a);
            }
          }
          const auto& callee = graph.node(call.callee);
          if (callee.kind == ToolKind::Primitive) {
            out.push_back(Call{call.callee, std::move(bound)});
            where.push_back(out.size() - 1);
          } else {
            where.push_back(inline_body(callee.body, bound));
          }
        }
        return where.back();
      };
  std::vector<Arg> params;
  for (std::size_t i = 0; i < root.record.sig.inputs.size(); ++i) params.push_back(Arg::param(i));
  inline_body(root.body, params);
  return out;
}

std::string chain_phrase(const std::vector<std::pair<std::string, std::size_t>>& links) {
  std::string out;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (i) out += " then ";
    out += links[i].first;
    if (i) out += " w" + std::to_string(links[i].second);
  }
  return out;
}

std::string tool_phrase(const LibraryGraph& graph, const ToolId& id) {
  if (is_operator(id)) return keyword(id);
  return graph.node(id).record.description;
}

double chain_relevance(std::string_view intent, std::string_view description) {
  auto bag = [](std::string_view s) {
    std::map<std::string, double> f;
    const auto w = text::word_tokens(s);
    for (std::size_t i = 0; i < w.size(); ++i) {
      f[w[i]] += 1;
      if (i + 1 < w.size()) f[w[i] + " " + w[i + 1]] += 1;
    }
    return f;
  };
  const auto a = bag(intent), b = bag(description);
  double dot = 0, na = 0, nb = 0;
  for (const auto& [t, x] : a) {
    na += x * x;
    if (auto it = b.find(t); it != b.end()) dot += x * it->second;
  }
  for (const auto& [t, y] : b) nb += y * y;
  return (na > 0 && nb > 0) ? dot / std::sqrt(na * nb) : 0.0;
}

double ChainRelevance::score(const SubGoal& goal, const ToolRecord& record) const {
  return chain_relevance(goal.intent, record.description);
}

Scorers sim_scorers(const SubtypeLattice& lattice) {
  auto s = Scorers::deterministic(lattice);
  s.relevance = std::make_shared<ChainRelevance>();
  return s;
}

}  // namespace tooldag::sim
