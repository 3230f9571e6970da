#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lexicost/combiner.hpp"
#include "lexicost/cost.hpp"
#include "lexicost/evaluator.hpp"
#include "lexicost/generator.hpp"
#include "lexicost/kb.hpp"

namespace lexicost {

struct LearnOptions {
  CostSpec spec = costs::errorsize();
  std::optional<std::size_t> max_size;       // defaults to the bias's largest program
  std::optional<std::size_t> candidate_cap;  // stop after this many tested candidates
  std::size_t combine_every = 1;             // run combine after this many new promising entries
  bool prune_specializations = true;
  bool dominance_filter = true;
  bool size_bound = true;  // tighten the generator's size cap from the best cost
  EvalLimits eval_limits{};
  // Called with every combine problem before it is solved.
  std::function<void(const CombineProblem&)> on_combine;
};

enum class Proof { optimal, cap_exhausted };

struct LearnStats {
  std::size_t generated = 0;
  std::size_t tested = 0;
  std::size_t promising = 0;
  std::size_t combine_calls = 0;
  std::size_t pruned = 0;  // candidates the generator skipped under constraints
};

struct LearnResult {
  Program best;
  CostVector cost;
  Confusion train_conf;
  LearnStats stats;
  Proof proof = Proof::optimal;
  std::vector<CostVector> trace;  // best cost after every improvement, in order
};

namespace detail {

// Programs whose fp > 0 can never join an optimum when the top level counts
// only false positives: the empty program already scores 0 there.
inline bool admits_false_positives(const CostSpec& spec) {
  if (spec.components.empty()) return true;
  return !(spec.components.front() == costs::kFp);
}

}  // namespace detail

/// Generate, test, combine, constrain. Returns a hypothesis whose cost is
/// minimal over the bias-defined space whenever the generator runs dry
/// without hitting candidate_cap.
inline LearnResult learn(const Task& t, const LearnOptions& o) {
  if (o.combine_every < 1) throw std::invalid_argument("combine_every must be at least 1");
  if (o.spec.components.empty()) throw std::invalid_argument("cost spec has no components");

  const Evaluator eval(t, o.eval_limits);
  const std::size_t n_pos = t.pos.size();
  const std::size_t n_neg = t.neg.size();
  const std::size_t space_cap = o.max_size.value_or(t.bias.max_program_size());

  Generator gen(t.bias, o.spec.uses_size() ? Ordering::by_size : Ordering::unordered, space_cap);

  LearnResult res;
  res.train_conf = Confusion{0, 0, n_neg, n_pos};
  res.cost = evaluate(o.spec, res.train_conf, 0);
  res.trace.push_back(res.cost);

  auto improve = [&](Program p, const Confusion& conf, const CostVector& cost) {
    res.best = std::move(p);
    res.train_conf = conf;
    res.cost = cost;
    res.trace.push_back(cost);
    if (!o.size_bound) return;
    auto bound = generator_size_bound(o.spec, res.cost);
    gen.set_size_cap(bound ? std::min(*bound, space_cap) : space_cap);
  };

  CombineProblem problem;
  problem.n_pos = n_pos;
  problem.n_neg = n_neg;
  problem.spec = o.spec;
  problem.max_rules = t.bias.max_clauses;
  problem.max_size = space_cap;
  std::size_t pending = 0;

  auto combine = [&] {
    pending = 0;
    ++res.stats.combine_calls;
    if (o.on_combine) o.on_combine(problem);
    auto sol = optimal_combination(problem, CombineOptions{o.dominance_filter});
    if (sol.cost >= res.cost) return;
    std::vector<Rule> rules;
    for (auto id : sol.selected) {
      const auto& rs = problem.entries[id].program.rules();
      rules.insert(rules.end(), rs.begin(), rs.end());
    }
    improve(Program(std::move(rules)), sol.conf, sol.cost);
  };

  while (true) {
    if (o.candidate_cap && res.stats.tested >= *o.candidate_cap) {
      res.proof = Proof::cap_exhausted;
      break;
    }
    auto candidate = gen.next();
    if (!candidate) break;
    ++res.stats.generated;

    auto cov = eval.coverage(*candidate);
    ++res.stats.tested;
    auto conf = confusion(cov, n_pos, n_neg);
    auto size = program_size(*candidate);
    const bool recursive = is_recursive(*candidate);

    // Any candidate can win on its own; recursive ones have no other route.
    if (auto own = evaluate(o.spec, conf, size); own < res.cost) improve(*candidate, conf, own);

    if (!recursive && conf.tp > 0 && (conf.fp == 0 || detail::admits_false_positives(o.spec))) {
      problem.entries.push_back(
          PromisingEntry{*candidate, cov, size, problem.entries.size(), candidate->rule_count()});
      ++res.stats.promising;
      if (++pending >= o.combine_every) combine();
    }

    if (o.prune_specializations && conf.tp == 0)
      gen.add_constraint({ConstraintKind::prune_specializations, *candidate});
    gen.add_constraint({ConstraintKind::prune_exact, *candidate});
  }
  if (pending > 0) combine();

  res.stats.pruned = gen.skipped();
  return res;
}

/// Confusion of the learned hypothesis on held-out examples, evaluated
/// against the task's background facts.
inline Confusion evaluate_on_test(const LearnResult& r, const Task& t,
                                  std::span<const Atom> test_pos, std::span<const Atom> test_neg,
                                  EvalLimits limits = {}) {
  Evaluator eval(t, limits);
  auto cov = eval.coverage(r.best, test_pos, test_neg);
  return confusion(cov, test_pos.size(), test_neg.size());
}

}  // namespace lexicost
