#include "tooldag/error.hpp"
#include "tooldag/sim.hpp"

namespace tooldag::sim {

namespace {

Rational draw_constant(Rng& rng, bool exponent) {
  if (exponent) return Rational(static_cast<long>(rng.range(0, 3)));
  if (rng.bernoulli(0.75)) return Rational(static_cast<long>(rng.range(-5, 5)));
  // odd halves in [-9/2, 9/2]
  Rational r(static_cast<long>(2 * rng.range(-5, 4) + 1), 2L);
  r.canonicalize();
  return r;
}

TypeTerm param_type(const std::string& op, std::size_t pos) {
  return TypeTerm::base(op == "pow_int" && pos == 1 ? "int" : "float");
}

const Rational& arg_value(const Task& task, const Arg& a) {
  return a.kind == Arg::Kind::Const ? a.value : task.steps.at(a.index).value;
}

}  // namespace

std::vector<Task> generate_tasks(std::uint64_t seed, std::size_t count, std::size_t min_depth,
                                 std::size_t max_depth, const std::string& prefix) {
  if (min_depth < 1 || max_depth > 8 || min_depth > max_depth) {
    throw Error(Errc::InvalidArgument, "depth range must lie within [1, 8]");
  }
  Rng rng(seed);
  const auto& ops = operators();
  std::vector<Task> tasks;
  tasks.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    Task task;
    task.id = prefix + std::to_string(t);
    const auto depth = static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(min_depth),
                                                          static_cast<std::int64_t>(max_depth)));
    for (std::size_t i = 0; i < depth; ++i) {
      // Resample the step until its operands are legal.
      for (;;) {
        Step s;
        s.op = ops[rng.below(ops.size())];
        const std::size_t arity = operator_arity(s.op);
        std::size_t ref = arity;
        if (i > 0) ref = (arity == 1 || s.op == "pow_int") ? 0 : rng.below(arity);
        std::vector<Rational> values;
        for (std::size_t k = 0; k < arity; ++k) {
          if (k == ref) {
            s.args.push_back(Arg::result(i - 1));
            values.push_back(task.steps[i - 1].value);
          } else {
            auto c = draw_constant(rng, s.op == "pow_int" && k == 1);
            values.push_back(c);
            s.args.push_back(Arg::constant(std::move(c)));
          }
        }
        try {
          s.value = apply_operator(s.op, values);
        } catch (const Error&) {
          continue;
        }
        task.steps.push_back(std::move(s));
        break;
      }
    }
    task.oracle_value = task.steps.back().value;
    for (std::size_t i = 0; i < depth; ++i) task.subgoals.push_back(make_window(task, i, 1).goal);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

Window make_window(const Task& task, std::size_t start, std::size_t length) {
  if (length == 0 || start + length > task.steps.size()) {
    throw Error(Errc::InvalidArgument, "window outside the task");
  }
  Window w;
  w.start = start;
  w.length = length;
  std::vector<std::pair<std::string, std::size_t>> links;
  for (std::size_t s = start; s < start + length; ++s) {
    const auto& step = task.steps[s];
    std::size_t link_pos = 0;
    for (std::size_t k = 0; k < step.args.size(); ++k) {
      const auto& a = step.args[k];
      if (a.kind == Arg::Kind::Result && a.index >= start) {
        link_pos = k;
        continue;
      }
      w.inputs.push_back(a);
      w.goal.goal_sig.inputs.push_back(param_type(step.op, k));
    }
    links.emplace_back(keyword(step.op), link_pos);
    if (step.args.size() == 2) {
      const auto& v = arg_value(task, step.args[1]);
      if (v != 0) w.goal.available_facts.insert("nonzero-divisor");
      if (is_integer(v) && v >= 0) w.goal.available_facts.insert("nonneg-int-exponent");
    }
  }
  w.goal.goal_sig.output = TypeTerm::base("float");
  w.goal.intent = chain_phrase(links);
  w.template_key = to_string(w.goal.goal_sig) + "|" + w.goal.intent;
  return w;
}

}  // namespace tooldag::sim
