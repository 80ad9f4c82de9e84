#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tooldag {

// A first-order type: a base symbol, a constructor applied to arguments, or
// a type variable (spelled ?T). Equality is structural.
class TypeTerm {
 public:
  enum class Kind { Base, Constructor, Var };

  static TypeTerm base(std::string name);
  static TypeTerm ctor(std::string name, std::vector<TypeTerm> args);
  static TypeTerm var(std::string id);

  Kind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<TypeTerm>& args() const noexcept { return args_; }

  bool is_base() const noexcept { return kind_ == Kind::Base; }
  bool is_ctor() const noexcept { return kind_ == Kind::Constructor; }
  bool is_var() const noexcept { return kind_ == Kind::Var; }
  bool is_ground() const;

  friend bool operator==(const TypeTerm&, const TypeTerm&) = default;

 private:
  TypeTerm(Kind kind, std::string name, std::vector<TypeTerm> args)
      : kind_(kind), name_(std::move(name)), args_(std::move(args)) {}

  Kind kind_ = Kind::Base;
  std::string name_;
  std::vector<TypeTerm> args_;
};

std::string to_string(const TypeTerm& term);

struct Signature {
  std::vector<TypeTerm> inputs;
  TypeTerm output = TypeTerm::base("unit");

  bool is_ground() const;
  friend bool operator==(const Signature&, const Signature&) = default;
};

// "(float, float) -> float"
std::string to_string(const Signature& sig);

// Printed signature with every type variable replaced by `_`. Two signatures
// with equal erased keys have the same constructor skeleton.
std::string erased_key(const Signature& sig);

// Base-type alphabet plus constructor arities. The alphabet is open: a
// library file declares what it uses. Constructors not declared here are
// accepted at any arity by the parser.
class TypeRegistry {
 public:
  static TypeRegistry standard();

  void declare_base(const std::string& name);
  void declare_constructor(const std::string& name, std::size_t arity);

  bool has_base(const std::string& name) const { return bases_.count(name) > 0; }
  std::optional<std::size_t> arity(const std::string& ctor) const;

  const std::set<std::string>& bases() const noexcept { return bases_; }
  const std::map<std::string, std::size_t>& constructors() const noexcept { return ctors_; }

  // Throws UnknownConstructorArity when a declared constructor is used at
  // the wrong arity.
  void check(const TypeTerm& term) const;

  friend bool operator==(const TypeRegistry&, const TypeRegistry&) = default;

 private:
  std::set<std::string> bases_;
  std::map<std::string, std::size_t> ctors_;
};

// Grammar: base | ctor '[' type (',' type)* ']' | '?' ident. Whitespace is
// insignificant. Throws MalformedType with the byte offset of the failure.
TypeTerm parse_type(std::string_view text, const TypeRegistry* registry = nullptr);

// "(t1, t2, ...) -> t" with an empty list written "()".
Signature parse_signature(std::string_view text, const TypeRegistry* registry = nullptr);

// How candidate inputs are matched against goal inputs.
enum class InputMatch { Contravariant, Exact };

// Subtyping among base symbols, reflexive-transitively closed at
// construction. Constructors never participate: they are invariant.
class SubtypeLattice {
 public:
  // Exactly int <: float.
  SubtypeLattice();
  explicit SubtypeLattice(std::vector<std::pair<std::string, std::string>> edges,
                          InputMatch input_match = InputMatch::Contravariant);

  static SubtypeLattice identity();

  bool base_leq(const std::string& sub, const std::string& super) const;
  // Every base above (resp. below) `name`, including `name` itself.
  std::vector<std::string> supertypes_of(const std::string& name) const;
  std::vector<std::string> subtypes_of(const std::string& name) const;

  // Declared edges, as given (not the closure), sorted.
  const std::vector<std::pair<std::string, std::string>>& edges() const noexcept { return declared_; }
  const std::set<std::string>& symbols() const noexcept { return symbols_; }

  InputMatch input_match() const noexcept { return input_match_; }
  void set_input_match(InputMatch mode) noexcept { input_match_ = mode; }

 private:
  std::vector<std::pair<std::string, std::string>> declared_;
  std::set<std::pair<std::string, std::string>> closure_;
  std::set<std::string> symbols_;
  InputMatch input_match_ = InputMatch::Contravariant;
};

// a <: b for ground terms. Throws NonGroundTerm otherwise.
bool subtype(const TypeTerm& a, const TypeTerm& b, const SubtypeLattice& lattice);

using Substitution = std::map<std::string, TypeTerm>;

TypeTerm apply(const Substitution& sigma, const TypeTerm& term);
Signature apply(const Substitution& sigma, const Signature& sig);

struct UnifyResult {
  bool ok = false;
  Substitution sigma;
  // Term nodes touched while matching and solving.
  std::size_t visits = 0;

  explicit operator bool() const noexcept { return ok; }
};

// Can `candidate` serve `goal`? Inputs are contravariant (or exact, per the
// lattice mode), the output covariant, constructor arguments invariant.
// Throws NonGroundGoal if the goal has a type variable.
UnifyResult unify(const Signature& candidate, const Signature& goal,
                  const SubtypeLattice& lattice);

// Equal up to a consistent renaming of type variables.
bool alpha_equivalent(const Signature& a, const Signature& b);

}  // namespace tooldag
