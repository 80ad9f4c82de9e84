#include "tooldag/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tooldag/error.hpp"
#include "tooldag/rational.hpp"
#include "tooldag/text.hpp"

namespace tooldag {

void validate(const SubGoal& goal) {
  if (!goal.goal_sig.is_ground()) throw Error(Errc::NonGroundGoal, to_string(goal.goal_sig));
  if (text::trim(goal.intent).empty()) throw Error(Errc::InvalidArgument, "sub-goal intent is empty");
}

double lexical_score(std::string_view intent, std::string_view description,
                     const std::vector<std::string>& tags) {
  const auto a = text::word_tokens(intent);
  const auto b = text::word_tokens(description);
  std::map<std::string, double> fa, fb;
  for (const auto& t : a) fa[t] += 1;
  for (const auto& t : b) fb[t] += 1;
  double dot = 0, na = 0, nb = 0;
  for (const auto& [t, x] : fa) {
    na += x * x;
    if (auto it = fb.find(t); it != fb.end()) dot += x * it->second;
  }
  for (const auto& [t, y] : fb) nb += y * y;
  double score = (na > 0 && nb > 0) ? dot / std::sqrt(na * nb) : 0.0;
  for (const auto& tag : tags) {
    if (fa.count(text::normalize_phrase(tag))) score += 0.1;
  }
  return std::clamp(score, 0.0, 1.0);
}

SpecVerdict spec_compatible(const SubGoal& goal, const Spec& spec, const SpecCheckOptions& opt) {
  if (spec.structured()) {
    for (const auto& atom : spec.pre) {
      if (!goal.available_facts.count(atom)) {
        return {false, "pre-condition '" + atom + "' is not among the sub-goal facts"};
      }
    }
    if (!goal.goal_effect.empty()) {
      const auto post = text::normalize_phrase(spec.post);
      const auto want = text::normalize_phrase(goal.goal_effect);
      bool entailed = post == want;
      for (auto it = opt.entails.begin(); !entailed && it != opt.entails.end(); ++it) {
        entailed = text::normalize_phrase(it->first) == post &&
                   text::normalize_phrase(it->second) == want;
      }
      if (!entailed) return {false, "post-condition does not entail '" + goal.goal_effect + "'"};
    }
  } else {
    if (text::trim(spec.post).empty()) throw Error(Errc::MalformedSpec, "free-text spec without a post");
    if (!goal.goal_effect.empty() &&
        lexical_score(goal.goal_effect, spec.post) < opt.theta_spec) {
      return {false, "free-text post-condition scores below the threshold"};
    }
  }
  if (goal.budget && static_cast<int>(spec.complexity) > static_cast<int>(*goal.budget)) {
    return {false, "complexity " + to_string(spec.complexity) + " exceeds budget " +
                       to_string(*goal.budget)};
  }
  return {true, "ok"};
}

std::optional<TypeTerm> infer_value_type(std::string_view raw) {
  auto s = text::trim(raw);
  if (s.empty()) return std::nullopt;
  if (s == "true" || s == "false" || s == "True" || s == "False") return TypeTerm::base("bool");
  if (s.front() == '"' || s.front() == '\'') return TypeTerm::base("str");
  if (s.front() == '[' && s.back() == ']') {
    auto items = text::split_top_level(s.substr(1, s.size() - 2), ',');
    if (items.empty()) return std::nullopt;
    std::optional<TypeTerm> elem;
    for (const auto& it : items) {
      auto t = infer_value_type(it);
      if (!t) return std::nullopt;
      if (!elem) {
        elem = t;
      } else if (*elem != *t) {
        // int and float mix to float; anything else is heterogeneous.
        bool numeric = (elem->name() == "int" || elem->name() == "float") &&
                       (t->name() == "int" || t->name() == "float") && elem->is_base() && t->is_base();
        if (!numeric) return std::nullopt;
        elem = TypeTerm::base("float");
      }
    }
    return TypeTerm::ctor("list", {*elem});
  }
  if (parse_rational(s)) {
    bool integral = s.find('.') == std::string_view::npos && s.find('/') == std::string_view::npos;
    return TypeTerm::base(integral ? "int" : "float");
  }
  return std::nullopt;
}

double example_score(const SubGoal& goal, const std::vector<Example>& examples,
                     const SubtypeLattice& lattice) {
  if (examples.empty()) return 0.0;
  const auto& sig = goal.goal_sig;
  double in_ok = 0, out_ok = 0;
  for (const auto& ex : examples) {
    auto inner = std::string_view(ex.input).substr(1, ex.input.size() - 2);
    auto values = text::split_top_level(inner, ',');
    if (values.size() == sig.inputs.size()) {
      bool all = true;
      for (std::size_t i = 0; all && i < values.size(); ++i) {
        auto t = infer_value_type(values[i]);
        all = t && subtype(*t, sig.inputs[i], lattice);
      }
      if (all) in_ok += 1;
    }
    auto t = infer_value_type(ex.output);
    if (t && subtype(*t, sig.output, lattice)) out_ok += 1;
  }
  const double n = static_cast<double>(examples.size());
  return (in_ok / n + out_ok / n) / 2.0;
}

double LexicalRelevance::score(const SubGoal& goal, const ToolRecord& record) const {
  return lexical_score(goal.intent, record.description, record.tags);
}

SpecVerdict StructuredSpecChecker::check(const SubGoal& goal, const ToolRecord& record) const {
  return spec_compatible(goal, record.spec, options_);
}

double ExampleShapeScorer::score(const SubGoal& goal, const ToolRecord& record) const {
  return example_score(goal, record.examples, lattice_);
}

Scorers Scorers::deterministic(const SubtypeLattice& lattice, SpecCheckOptions options) {
  return {std::make_shared<LexicalRelevance>(),
          std::make_shared<StructuredSpecChecker>(std::move(options)),
          std::make_shared<ExampleShapeScorer>(lattice)};
}

}  // namespace tooldag
