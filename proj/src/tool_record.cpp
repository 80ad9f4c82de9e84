#include "tooldag/tool_record.hpp"

#include <stdexcept>

#include "tooldag/error.hpp"
#include "tooldag/text.hpp"

namespace tooldag {

std::string to_string(Complexity c) {
  switch (c) {
    case Complexity::Constant: return "O(1)";
    case Complexity::Logarithmic: return "O(log n)";
    case Complexity::Linear: return "O(n)";
    case Complexity::Linearithmic: return "O(n log n)";
    case Complexity::Quadratic: return "O(n^2)";
  }
  return "O(1)";
}

std::optional<Complexity> parse_complexity(std::string_view text) {
  std::string norm;
  for (char c : text) {
    if (c != ' ' && c != '\t') norm += c;
  }
  if (norm == "O(1)") return Complexity::Constant;
  if (norm == "O(logn)") return Complexity::Logarithmic;
  if (norm == "O(n)") return Complexity::Linear;
  if (norm == "O(nlogn)") return Complexity::Linearithmic;
  if (norm == "O(n^2)" || norm == "O(n²)" || norm == "O(n2)") return Complexity::Quadratic;
  return std::nullopt;
}

std::string canonical_tuple(std::string_view raw) {
  auto t = text::trim(raw);
  if (t.size() < 2 || t.front() != '(' || t.back() != ')') {
    throw std::invalid_argument("example input must be a parenthesized tuple: " + std::string(raw));
  }
  auto parts = text::split_top_level(t.substr(1, t.size() - 2), ',');
  return "(" + text::join(parts, ", ") + ")";
}

Example parse_example(std::string_view raw) {
  auto arrow = text::find_top_level(raw, "->");
  if (arrow == std::string_view::npos) {
    throw std::invalid_argument("example lacks '->': " + std::string(raw));
  }
  Example ex;
  ex.input = canonical_tuple(raw.substr(0, arrow));
  ex.output = std::string(text::trim(raw.substr(arrow + 2)));
  if (ex.output.empty()) throw std::invalid_argument("example lacks an output");
  return ex;
}

std::string list_text(const std::vector<std::string>& items) {
  return "[" + text::join(items, ", ") + "]";
}

std::vector<std::string> parse_list(std::string_view raw) {
  auto t = text::trim(raw);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']') {
    throw std::invalid_argument("expected a bracketed list: " + std::string(raw));
  }
  return text::split_top_level(t.substr(1, t.size() - 2), ',');
}

std::string to_string(const Arg& arg) {
  switch (arg.kind) {
    case Arg::Kind::Param: return "$" + std::to_string(arg.index);
    case Arg::Kind::Result: return "%" + std::to_string(arg.index);
    case Arg::Kind::Const: return format_rational(arg.value);
  }
  return "?";
}

std::string to_string(const Call& call) {
  std::vector<std::string> args;
  for (const auto& a : call.args) args.push_back(to_string(a));
  return call.callee + "(" + text::join(args, ", ") + ")";
}

std::string body_text(const std::vector<Call>& body) {
  std::vector<std::string> calls;
  for (const auto& c : body) calls.push_back(to_string(c));
  return list_text(calls);
}

namespace {

std::size_t parse_index(std::string_view digits) {
  if (digits.empty()) throw std::invalid_argument("missing index");
  std::size_t v = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') throw std::invalid_argument("bad index: " + std::string(digits));
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

}  // namespace

std::vector<Call> parse_body(std::string_view raw) {
  std::vector<Call> body;
  for (const auto& item : parse_list(raw)) {
    auto open = item.find('(');
    if (open == std::string::npos || item.back() != ')') {
      throw std::invalid_argument("bad call: " + item);
    }
    Call call;
    call.callee = std::string(text::trim(std::string_view(item).substr(0, open)));
    if (call.callee.empty()) throw std::invalid_argument("call without callee: " + item);
    auto inner = std::string_view(item).substr(open + 1, item.size() - open - 2);
    for (const auto& a : text::split_top_level(inner, ',')) {
      if (a.empty()) throw std::invalid_argument("empty argument in " + item);
      if (a[0] == '$') {
        call.args.push_back(Arg::param(parse_index(std::string_view(a).substr(1))));
      } else if (a[0] == '%') {
        call.args.push_back(Arg::result(parse_index(std::string_view(a).substr(1))));
      } else if (auto v = parse_rational(a)) {
        call.args.push_back(Arg::constant(*v));
      } else {
        throw std::invalid_argument("bad argument: " + a);
      }
    }
    body.push_back(std::move(call));
  }
  return body;
}

std::string level_text(const ToolRecord& r, int level) {
  switch (level) {
    case 1:
      return to_string(r.sig) + " ; deps = " + list_text(r.deps);
    case 2:
      return text::quote(r.description) + " ; tags = " + list_text(r.tags);
    case 3: {
      std::string pre = r.spec.structured()
                            ? list_text(std::vector<std::string>(r.spec.pre.begin(), r.spec.pre.end()))
                            : text::quote(*r.spec.pre_text);
      return "pre = " + pre + " ; post = " + text::quote(r.spec.post) +
             " ; complexity = " + to_string(r.spec.complexity);
    }
    case 4: {
      std::vector<std::string> items;
      for (const auto& e : r.examples) items.push_back(e.input + " -> " + e.output);
      return list_text(items);
    }
    default:
      throw Error(Errc::InvalidArgument, "record level must be 1..4");
  }
}

namespace {

// "key = value" with the expected key.
std::string_view field_value(std::string_view part, std::string_view key) {
  auto eq = part.find('=');
  if (eq == std::string_view::npos || text::trim(part.substr(0, eq)) != key) {
    throw std::invalid_argument("expected '" + std::string(key) + " = ...' in: " + std::string(part));
  }
  return text::trim(part.substr(eq + 1));
}

}  // namespace

void parse_l1(std::string_view raw, ToolRecord& record, const TypeRegistry* registry) {
  auto parts = text::split_top_level(raw, ';');
  if (parts.size() != 2) throw std::invalid_argument("L1 needs 'sig ; deps = [...]'");
  try {
    record.sig = parse_signature(parts[0], registry);
  } catch (const Error& e) {
    throw std::invalid_argument(std::string("L1 signature: ") + e.what());
  }
  record.deps = parse_list(field_value(parts[1], "deps"));
}

void parse_l2(std::string_view raw, ToolRecord& record) {
  auto parts = text::split_top_level(raw, ';');
  if (parts.size() != 2) throw std::invalid_argument("L2 needs '\"text\" ; tags = [...]'");
  record.description = text::unquote(parts[0]);
  record.tags = parse_list(field_value(parts[1], "tags"));
}

void parse_l3(std::string_view raw, ToolRecord& record) {
  auto parts = text::split_top_level(raw, ';');
  if (parts.size() != 3) throw std::invalid_argument("L3 needs pre/post/complexity");
  Spec spec;
  auto pre = field_value(parts[0], "pre");
  if (!pre.empty() && pre.front() == '"') {
    spec.pre_text = text::unquote(pre);
  } else {
    for (auto& atom : parse_list(pre)) {
      if (atom.empty()) throw std::invalid_argument("empty pre atom");
      spec.pre.insert(std::move(atom));
    }
  }
  spec.post = text::unquote(field_value(parts[1], "post"));
  auto cx = parse_complexity(field_value(parts[2], "complexity"));
  if (!cx) throw std::invalid_argument("unknown complexity class: " + parts[2]);
  spec.complexity = *cx;
  record.spec = std::move(spec);
}

void parse_l4(std::string_view raw, ToolRecord& record) {
  record.examples.clear();
  for (const auto& item : parse_list(raw)) record.examples.push_back(parse_example(item));
}

}  // namespace tooldag
