#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tooldag/rational.hpp"
#include "tooldag/signature_index.hpp"
#include "tooldag/type_term.hpp"

namespace tooldag {

// Ordered O(1) < O(log n) < O(n) < O(n log n) < O(n^2).
enum class Complexity { Constant, Logarithmic, Linear, Linearithmic, Quadratic };

std::string to_string(Complexity c);
std::optional<Complexity> parse_complexity(std::string_view text);

// L3. Structured specs carry predicate atoms; a free-text precondition is
// kept verbatim in `pre_text` and makes the spec unstructured.
struct Spec {
  std::set<std::string> pre;
  std::optional<std::string> pre_text;
  std::string post;
  Complexity complexity = Complexity::Constant;

  bool structured() const noexcept { return !pre_text.has_value(); }
  friend bool operator==(const Spec&, const Spec&) = default;
};

// One L4 pair. `input` is the canonical tuple text "(a, b)".
struct Example {
  std::string input;
  std::string output;
  friend bool operator==(const Example&, const Example&) = default;
};

// Example from raw text "(1, 2) -> 3"; throws std::invalid_argument.
Example parse_example(std::string_view text);
// Canonical "(a, b)" for a tuple text, element spacing normalized.
std::string canonical_tuple(std::string_view text);

struct ToolRecord {
  // L1
  Signature sig;
  std::vector<ToolId> deps;
  // L2
  std::string description;
  std::vector<std::string> tags;
  // L3
  Spec spec;
  // L4
  std::vector<Example> examples;

  friend bool operator==(const ToolRecord&, const ToolRecord&) = default;
};

// Argument of a body call: a composite parameter ($i), the result of an
// earlier call in the same body (%i), or a rational constant.
struct Arg {
  enum class Kind { Param, Result, Const };
  Kind kind = Kind::Param;
  std::size_t index = 0;
  Rational value;

  static Arg param(std::size_t i) { return {Kind::Param, i, Rational(0)}; }
  static Arg result(std::size_t i) { return {Kind::Result, i, Rational(0)}; }
  static Arg constant(Rational v) { return {Kind::Const, 0, std::move(v)}; }

  friend bool operator==(const Arg& a, const Arg& b) {
    return a.kind == b.kind && a.index == b.index && a.value == b.value;
  }
};

struct Call {
  ToolId callee;
  std::vector<Arg> args;
  friend bool operator==(const Call&, const Call&) = default;
};

std::string to_string(const Arg& arg);
std::string to_string(const Call& call);
std::string body_text(const std::vector<Call>& body);
// Throws std::invalid_argument.
std::vector<Call> parse_body(std::string_view text);

// Canonical field text per level; this is what token costs are counted on
// and what the library file stores after "L<k> : ".
//   L1  (float, float) -> float ; deps = [a, b]
//   L2  "text" ; tags = [x, y]
//   L3  pre = [p, q] ; post = "..." ; complexity = O(1)
//   L4  [(1, 2) -> 3, (0, 0) -> 0]
std::string level_text(const ToolRecord& record, int level);

// Parsers for the same forms; throw std::invalid_argument.
void parse_l1(std::string_view text, ToolRecord& record, const TypeRegistry* registry);
void parse_l2(std::string_view text, ToolRecord& record);
void parse_l3(std::string_view text, ToolRecord& record);
void parse_l4(std::string_view text, ToolRecord& record);

std::string list_text(const std::vector<std::string>& items);
std::vector<std::string> parse_list(std::string_view text);

}  // namespace tooldag
