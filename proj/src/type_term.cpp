#include "tooldag/type_term.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

#include "tooldag/error.hpp"

namespace tooldag {

TypeTerm TypeTerm::base(std::string name) {
  return TypeTerm(Kind::Base, std::move(name), {});
}

TypeTerm TypeTerm::ctor(std::string name, std::vector<TypeTerm> args) {
  return TypeTerm(Kind::Constructor, std::move(name), std::move(args));
}

TypeTerm TypeTerm::var(std::string id) {
  return TypeTerm(Kind::Var, std::move(id), {});
}

bool TypeTerm::is_ground() const {
  if (kind_ == Kind::Var) return false;
  return std::all_of(args_.begin(), args_.end(), [](const TypeTerm& a) { return a.is_ground(); });
}

namespace {

void print_term(const TypeTerm& term, std::string& out, bool erase_vars) {
  switch (term.kind()) {
    case TypeTerm::Kind::Base:
      out += term.name();
      return;
    case TypeTerm::Kind::Var:
      if (erase_vars) {
        out += '_';
      } else {
        out += '?';
        out += term.name();
      }
      return;
    case TypeTerm::Kind::Constructor:
      out += term.name();
      out += '[';
      for (std::size_t i = 0; i < term.args().size(); ++i) {
        if (i) out += ", ";
        print_term(term.args()[i], out, erase_vars);
      }
      out += ']';
      return;
  }
}

std::string print_signature(const Signature& sig, bool erase_vars) {
  std::string out = "(";
  for (std::size_t i = 0; i < sig.inputs.size(); ++i) {
    if (i) out += ", ";
    print_term(sig.inputs[i], out, erase_vars);
  }
  out += ") -> ";
  print_term(sig.output, out, erase_vars);
  return out;
}

class Parser {
 public:
  Parser(std::string_view text, const TypeRegistry* registry) : text_(text), registry_(registry) {}

  TypeTerm parse_term() {
    skip_ws();
    if (peek() == '?') {
      ++pos_;
      return TypeTerm::var(ident());
    }
    std::size_t start = pos_;
    std::string name = ident();
    skip_ws();
    if (peek() != '[') return TypeTerm::base(std::move(name));
    ++pos_;
    std::vector<TypeTerm> args;
    args.push_back(parse_term());
    skip_ws();
    while (peek() == ',') {
      ++pos_;
      args.push_back(parse_term());
      skip_ws();
    }
    expect(']');
    if (registry_) {
      if (auto arity = registry_->arity(name); arity && *arity != args.size()) {
        throw Error(Errc::UnknownConstructorArity,
                    name + " expects " + std::to_string(*arity) + " arguments, got " +
                        std::to_string(args.size()),
                    start);
      }
    }
    return TypeTerm::ctor(std::move(name), std::move(args));
  }

  Signature parse_signature() {
    Signature sig;
    skip_ws();
    expect('(');
    skip_ws();
    if (peek() != ')') {
      sig.inputs.push_back(parse_term());
      skip_ws();
      while (peek() == ',') {
        ++pos_;
        sig.inputs.push_back(parse_term());
        skip_ws();
      }
    }
    expect(')');
    skip_ws();
    expect('-');
    expect('>');
    sig.output = parse_term();
    return sig;
  }

  void finish() {
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    auto is_head = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
    auto is_tail = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    if (!is_head(peek())) fail("expected identifier");
    while (pos_ < text_.size() && is_tail(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::MalformedType, what + " at offset " + std::to_string(pos_), pos_);
  }

  std::string_view text_;
  const TypeRegistry* registry_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(const TypeTerm& term) {
  std::string out;
  print_term(term, out, false);
  return out;
}

bool Signature::is_ground() const {
  return output.is_ground() &&
         std::all_of(inputs.begin(), inputs.end(), [](const TypeTerm& t) { return t.is_ground(); });
}

std::string to_string(const Signature& sig) { return print_signature(sig, false); }

std::string erased_key(const Signature& sig) { return print_signature(sig, true); }

TypeRegistry TypeRegistry::standard() {
  TypeRegistry reg;
  for (const char* b : {"bool", "float", "int", "str"}) reg.declare_base(b);
  reg.declare_constructor("list", 1);
  reg.declare_constructor("set", 1);
  reg.declare_constructor("tuple", 2);
  reg.declare_constructor("dict", 2);
  return reg;
}

void TypeRegistry::declare_base(const std::string& name) { bases_.insert(name); }

void TypeRegistry::declare_constructor(const std::string& name, std::size_t arity) {
  auto [it, inserted] = ctors_.emplace(name, arity);
  if (!inserted && it->second != arity) {
    throw Error(Errc::UnknownConstructorArity,
                name + " already declared with arity " + std::to_string(it->second));
  }
}

std::optional<std::size_t> TypeRegistry::arity(const std::string& ctor) const {
  auto it = ctors_.find(ctor);
  if (it == ctors_.end()) return std::nullopt;
  return it->second;
}

void TypeRegistry::check(const TypeTerm& term) const {
  if (!term.is_ctor()) return;
  if (auto a = arity(term.name()); a && *a != term.args().size()) {
    throw Error(Errc::UnknownConstructorArity,
                term.name() + " expects " + std::to_string(*a) + " arguments");
  }
  for (const auto& arg : term.args()) check(arg);
}

TypeTerm parse_type(std::string_view text, const TypeRegistry* registry) {
  Parser p(text, registry);
  TypeTerm t = p.parse_term();
  p.finish();
  return t;
}

Signature parse_signature(std::string_view text, const TypeRegistry* registry) {
  Parser p(text, registry);
  Signature s = p.parse_signature();
  p.finish();
  return s;
}

// ---------------------------------------------------------------------------
// Lattice

SubtypeLattice::SubtypeLattice()
    : SubtypeLattice(std::vector<std::pair<std::string, std::string>>{{"int", "float"}}) {}

SubtypeLattice::SubtypeLattice(std::vector<std::pair<std::string, std::string>> edges,
                               InputMatch input_match)
    : input_match_(input_match) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  declared_ = edges;
  for (const auto& [a, b] : edges) {
    symbols_.insert(a);
    symbols_.insert(b);
  }
  for (const auto& s : symbols_) closure_.emplace(s, s);
  for (const auto& e : edges) closure_.insert(e);
  // Warshall over the small symbol set.
  for (const auto& k : symbols_) {
    for (const auto& i : symbols_) {
      if (!closure_.count({i, k})) continue;
      for (const auto& j : symbols_) {
        if (closure_.count({k, j})) closure_.emplace(i, j);
      }
    }
  }
  for (const auto& [a, b] : closure_) {
    if (a != b && closure_.count({b, a})) {
      throw Error(Errc::LatticeCycle, a + " and " + b + " are mutual subtypes");
    }
  }
}

SubtypeLattice SubtypeLattice::identity() { return SubtypeLattice(std::vector<std::pair<std::string, std::string>>{}); }

bool SubtypeLattice::base_leq(const std::string& sub, const std::string& super) const {
  return sub == super || closure_.count({sub, super}) > 0;
}

std::vector<std::string> SubtypeLattice::supertypes_of(const std::string& name) const {
  std::vector<std::string> out{name};
  for (const auto& [a, b] : closure_) {
    if (a == name && b != name) out.push_back(b);
  }
  return out;
}

std::vector<std::string> SubtypeLattice::subtypes_of(const std::string& name) const {
  std::vector<std::string> out{name};
  for (const auto& [a, b] : closure_) {
    if (b == name && a != name) out.push_back(a);
  }
  return out;
}

bool subtype(const TypeTerm& a, const TypeTerm& b, const SubtypeLattice& lattice) {
  if (!a.is_ground() || !b.is_ground()) {
    throw Error(Errc::NonGroundTerm, to_string(a) + " <: " + to_string(b));
  }
  if (a == b) return true;
  if (a.is_base() && b.is_base()) return lattice.base_leq(a.name(), b.name());
  return false;
}

TypeTerm apply(const Substitution& sigma, const TypeTerm& term) {
  switch (term.kind()) {
    case TypeTerm::Kind::Var: {
      auto it = sigma.find(term.name());
      return it == sigma.end() ? term : it->second;
    }
    case TypeTerm::Kind::Base:
      return term;
    case TypeTerm::Kind::Constructor: {
      std::vector<TypeTerm> args;
      args.reserve(term.args().size());
      for (const auto& a : term.args()) args.push_back(apply(sigma, a));
      return TypeTerm::ctor(term.name(), std::move(args));
    }
  }
  return term;
}

Signature apply(const Substitution& sigma, const Signature& sig) {
  Signature out;
  out.inputs.reserve(sig.inputs.size());
  for (const auto& t : sig.inputs) out.inputs.push_back(apply(sigma, t));
  out.output = apply(sigma, sig.output);
  return out;
}

// ---------------------------------------------------------------------------
// Unification

namespace {

// Requested relation between σ(candidate) and the goal term.
enum class Polarity {
  Super,  // σ(candidate) :> goal   (inputs)
  Sub,    // σ(candidate) <: goal   (output)
  Equal,  // under a constructor
};

struct Bound {
  Polarity polarity;
  TypeTerm goal;
};

class Matcher {
 public:
  explicit Matcher(const SubtypeLattice& lattice) : lattice_(lattice) {}

  bool match(const TypeTerm& cand, const TypeTerm& goal, Polarity pol) {
    ++visits;
    switch (cand.kind()) {
      case TypeTerm::Kind::Var: {
        auto [it, fresh] = bounds.try_emplace(cand.name());
        if (fresh) order.push_back(cand.name());
        it->second.push_back({pol, goal});
        return true;
      }
      case TypeTerm::Kind::Base:
        if (!goal.is_base()) return false;
        switch (pol) {
          case Polarity::Equal: return cand.name() == goal.name();
          case Polarity::Super: return lattice_.base_leq(goal.name(), cand.name());
          case Polarity::Sub: return lattice_.base_leq(cand.name(), goal.name());
        }
        return false;
      case TypeTerm::Kind::Constructor:
        if (!goal.is_ctor() || goal.name() != cand.name() ||
            goal.args().size() != cand.args().size()) {
          return false;
        }
        for (std::size_t i = 0; i < cand.args().size(); ++i) {
          if (!match(cand.args()[i], goal.args()[i], Polarity::Equal)) return false;
        }
        return true;
    }
    return false;
  }

  bool satisfies(const TypeTerm& value, const std::vector<Bound>& bs) {
    for (const auto& b : bs) {
      ++visits;
      bool ok = false;
      switch (b.polarity) {
        case Polarity::Equal: ok = value == b.goal; break;
        case Polarity::Super: ok = subtype(b.goal, value, lattice_); break;
        case Polarity::Sub: ok = subtype(value, b.goal, lattice_); break;
      }
      if (!ok) return false;
    }
    return true;
  }

  // Picks a value for one variable. With an equality bound the value is
  // forced; otherwise the pool is the up-set of the first lower bound (or the
  // down-set of the first upper bound) and we take the least (resp.
  // greatest) admissible element, ties by printed form.
  std::optional<TypeTerm> solve(const std::vector<Bound>& bs) {
    for (const auto& b : bs) {
      if (b.polarity == Polarity::Equal) {
        if (satisfies(b.goal, bs)) return b.goal;
        return std::nullopt;
      }
    }
    const Bound* lower = nullptr;
    const Bound* upper = nullptr;
    for (const auto& b : bs) {
      if (b.polarity == Polarity::Super && !lower) lower = &b;
      if (b.polarity == Polarity::Sub && !upper) upper = &b;
    }
    const Bound& seed = lower ? *lower : *upper;
    std::vector<TypeTerm> pool;
    if (seed.goal.is_base()) {
      auto names = lower ? lattice_.supertypes_of(seed.goal.name())
                         : lattice_.subtypes_of(seed.goal.name());
      for (auto& n : names) pool.push_back(TypeTerm::base(std::move(n)));
    } else {
      pool.push_back(seed.goal);
    }
    std::vector<TypeTerm> admissible;
    for (auto& t : pool) {
      if (satisfies(t, bs)) admissible.push_back(std::move(t));
    }
    if (admissible.empty()) return std::nullopt;
    std::sort(admissible.begin(), admissible.end(),
              [](const TypeTerm& a, const TypeTerm& b) { return to_string(a) < to_string(b); });
    for (const auto& cand : admissible) {
      bool extremal = std::all_of(admissible.begin(), admissible.end(), [&](const TypeTerm& o) {
        return lower ? subtype(cand, o, lattice_) : subtype(o, cand, lattice_);
      });
      if (extremal) return cand;
    }
    return admissible.front();
  }

  std::map<std::string, std::vector<Bound>> bounds;
  std::vector<std::string> order;
  std::size_t visits = 0;

 private:
  const SubtypeLattice& lattice_;
};

}  // namespace

UnifyResult unify(const Signature& candidate, const Signature& goal,
                  const SubtypeLattice& lattice) {
  if (!goal.is_ground()) throw Error(Errc::NonGroundGoal, to_string(goal));
  UnifyResult result;
  if (candidate.inputs.size() != goal.inputs.size()) {
    result.visits = 1;
    return result;
  }
  Matcher m(lattice);
  const Polarity in_pol =
      lattice.input_match() == InputMatch::Exact ? Polarity::Equal : Polarity::Super;
  bool ok = true;
  for (std::size_t i = 0; ok && i < candidate.inputs.size(); ++i) {
    ok = m.match(candidate.inputs[i], goal.inputs[i], in_pol);
  }
  ok = ok && m.match(candidate.output, goal.output, Polarity::Sub);
  if (ok) {
    for (const auto& v : m.order) {
      auto value = m.solve(m.bounds.at(v));
      if (!value) {
        ok = false;
        break;
      }
      result.sigma.emplace(v, std::move(*value));
    }
  }
  result.visits = m.visits;
  result.ok = ok;
  if (!ok) result.sigma.clear();
  return result;
}

bool alpha_equivalent(const Signature& a, const Signature& b) {
  if (a.inputs.size() != b.inputs.size()) return false;
  std::map<std::string, std::string> fwd, bwd;
  std::function<bool(const TypeTerm&, const TypeTerm&)> eq = [&](const TypeTerm& x,
                                                                 const TypeTerm& y) {
    if (x.kind() != y.kind()) return false;
    if (x.is_var()) {
      auto [f, fnew] = fwd.emplace(x.name(), y.name());
      auto [g, gnew] = bwd.emplace(y.name(), x.name());
      return f->second == y.name() && g->second == x.name();
    }
    if (x.name() != y.name() || x.args().size() != y.args().size()) return false;
    for (std::size_t i = 0; i < x.args().size(); ++i) {
      if (!eq(x.args()[i], y.args()[i])) return false;
    }
    return true;
  };
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    if (!eq(a.inputs[i], b.inputs[i])) return false;
  }
  return eq(a.output, b.output);
}

}  // namespace tooldag
