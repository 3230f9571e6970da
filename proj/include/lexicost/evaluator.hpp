#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lexicost/bitset.hpp"
#include "lexicost/errors.hpp"
#include "lexicost/kb.hpp"

namespace lexicost {

/// Which examples B ∪ h entails: bit i of pos_bits for pos[i], same for neg.
struct Coverage {
  Bitset pos_bits;
  Bitset neg_bits;

  bool operator==(const Coverage&) const = default;
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  bool operator==(const Confusion&) const = default;
};

inline Confusion confusion(const Coverage& c, std::size_t n_pos, std::size_t n_neg) {
  if (c.pos_bits.size() != n_pos || c.neg_bits.size() != n_neg)
    throw LengthMismatch("coverage bitsets do not match the example counts");
  Confusion out;
  out.tp = c.pos_bits.count();
  out.fn = n_pos - out.tp;
  out.fp = c.neg_bits.count();
  out.tn = n_neg - out.fp;
  return out;
}

inline Confusion confusion(const Coverage& c, const Task& t) {
  return confusion(c, t.pos.size(), t.neg.size());
}

struct EvalLimits {
  std::size_t max_derived = 10'000'000;
};

namespace detail {

using Tuple = std::vector<std::int32_t>;

struct TupleHash {
  std::size_t operator()(const Tuple& t) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (auto v : t) {
      h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(v));
      h *= 0x100000001b3ULL;
    }
    return h;
  }
};

/// Set of same-arity tuples with per-column value indexes kept up to date
/// on insertion.
class Relation {
 public:
  explicit Relation(std::size_t arity = 0) : arity_(arity), columns_(arity) {}

  std::size_t arity() const noexcept { return arity_; }
  std::size_t size() const noexcept { return tuples_.size(); }
  const Tuple& operator[](std::size_t i) const { return tuples_[i]; }

  bool contains(const Tuple& t) const { return members_.count(t) != 0; }

  bool insert(const Tuple& t) {
    if (!members_.insert(t).second) return false;
    auto id = static_cast<std::uint32_t>(tuples_.size());
    tuples_.push_back(t);
    for (std::size_t c = 0; c < arity_; ++c) columns_[c][t[c]].push_back(id);
    return true;
  }

  /// Tuple ids with value v in column c (nullptr when none).
  const std::vector<std::uint32_t>* lookup(std::size_t c, std::int32_t v) const {
    auto it = columns_[c].find(v);
    return it == columns_[c].end() ? nullptr : &it->second;
  }

 private:
  std::size_t arity_;
  std::vector<Tuple> tuples_;
  std::unordered_set<Tuple, TupleHash> members_;
  std::vector<std::unordered_map<std::int32_t, std::vector<std::uint32_t>>> columns_;
};

struct PredKey {
  std::string name;
  std::size_t arity;
  auto operator<=>(const PredKey&) const = default;
};

// One argument of a compiled literal: a variable slot or a constant id.
struct Arg {
  bool is_var;
  std::int32_t value;
};

struct CompiledLiteral {
  PredKey pred;
  std::vector<Arg> args;
};

struct CompiledRule {
  CompiledLiteral head;
  std::vector<CompiledLiteral> body;
  std::size_t n_vars = 0;
};

}  // namespace detail

/// Background facts interned for repeated evaluation. Immutable after
/// construction; evaluations never modify it and may run concurrently.
class Database {
 public:
  explicit Database(std::span<const Atom> facts) {
    for (const auto& f : facts) {
      detail::Tuple t;
      t.reserve(f.arity());
      for (const auto& a : f.args) t.push_back(intern(a.name));
      auto& rel = relations_.try_emplace(detail::PredKey{f.predicate, f.arity()}, f.arity())
                      .first->second;
      rel.insert(t);
    }
  }

  std::optional<std::int32_t> constant_id(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& constant_name(std::int32_t id) const { return names_[id]; }
  std::size_t constant_count() const noexcept { return names_.size(); }

  const detail::Relation* relation(const detail::PredKey& key) const {
    auto it = relations_.find(key);
    return it == relations_.end() ? nullptr : &it->second;
  }
  const std::map<detail::PredKey, detail::Relation>& relations() const noexcept {
    return relations_;
  }

 private:
  std::int32_t intern(const std::string& name) {
    auto [it, inserted] = ids_.try_emplace(name, static_cast<std::int32_t>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }

  std::unordered_map<std::string, std::int32_t> ids_;
  std::vector<std::string> names_;
  std::map<detail::PredKey, detail::Relation> relations_;
};

namespace detail {

// Per-evaluation state: program constants unknown to the database get fresh
// ids local to this evaluation.
class Scope {
 public:
  explicit Scope(const Database& db) : db_(db) {}

  std::int32_t constant(const std::string& name) {
    if (auto id = db_.constant_id(name)) return *id;
    auto [it, inserted] = extra_.try_emplace(
        name, static_cast<std::int32_t>(db_.constant_count() + extra_names_.size()));
    if (inserted) extra_names_.push_back(name);
    return it->second;
  }

  const std::string& name(std::int32_t id) const {
    auto n = static_cast<std::size_t>(id);
    return n < db_.constant_count() ? db_.constant_name(id)
                                    : extra_names_[n - db_.constant_count()];
  }

  std::size_t domain_size() const { return db_.constant_count() + extra_names_.size(); }

  CompiledRule compile(const Rule& r) {
    std::map<std::string, std::int32_t> slots;
    auto lit = [&](const Atom& a) {
      CompiledLiteral out{PredKey{a.predicate, a.arity()}, {}};
      for (const auto& t : a.args) {
        if (t.is_var()) {
          auto [it, _] = slots.try_emplace(t.name, static_cast<std::int32_t>(slots.size()));
          out.args.push_back({true, it->second});
        } else {
          out.args.push_back({false, constant(t.name)});
        }
      }
      return out;
    };
    CompiledRule out;
    out.head = lit(r.head);
    for (const auto& b : r.body) out.body.push_back(lit(b));
    out.n_vars = slots.size();
    return out;
  }

 private:
  const Database& db_;
  std::unordered_map<std::string, std::int32_t> extra_;
  std::vector<std::string> extra_names_;
};

using Binding = std::vector<std::int32_t>;
constexpr std::int32_t kUnbound = -1;

// Resolves a body literal to the relation it should be matched against.
using RelationFor = std::function<const Relation*(std::size_t body_index)>;

// Backtracking join over a rule body. Literal order is chosen at each step:
// most bound arguments first, then the smaller relation. `first` (if set) is
// matched before anything else.
class BodyMatcher {
 public:
  BodyMatcher(const CompiledRule& rule, RelationFor relation_for)
      : rule_(rule), relation_for_(std::move(relation_for)), used_(rule.body.size(), false) {}

  // Calls emit(binding) for every match; stops early when emit returns false.
  template <typename Emit>
  bool run(Binding& binding, std::optional<std::size_t> first, Emit&& emit) {
    return step(binding, first, emit, 0);
  }

 private:
  template <typename Emit>
  bool step(Binding& binding, std::optional<std::size_t> first, Emit& emit, std::size_t depth) {
    if (depth == rule_.body.size()) return emit(binding);

    std::size_t pick = rule_.body.size();
    if (first && !used_[*first]) {
      pick = *first;
    } else {
      std::size_t best_bound = 0;
      std::size_t best_size = std::numeric_limits<std::size_t>::max();
      for (std::size_t i = 0; i < rule_.body.size(); ++i) {
        if (used_[i]) continue;
        std::size_t bound = 0;
        for (const auto& a : rule_.body[i].args)
          if (!a.is_var || binding[a.value] != kUnbound) ++bound;
        const Relation* rel = relation_for_(i);
        std::size_t size = rel ? rel->size() : 0;
        if (pick == rule_.body.size() || bound > best_bound ||
            (bound == best_bound && size < best_size)) {
          pick = i;
          best_bound = bound;
          best_size = size;
        }
      }
    }

    const Relation* rel = relation_for_(pick);
    if (!rel || rel->size() == 0) return true;
    const auto& lit = rule_.body[pick];

    // Narrow by the bound column with the fewest candidates.
    const std::vector<std::uint32_t>* candidates = nullptr;
    bool bound_any = false;
    for (std::size_t c = 0; c < lit.args.size(); ++c) {
      const auto& a = lit.args[c];
      std::int32_t v = a.is_var ? binding[a.value] : a.value;
      if (v == kUnbound) continue;
      bound_any = true;
      const auto* ids = rel->lookup(c, v);
      if (!ids) return true;
      if (!candidates || ids->size() < candidates->size()) candidates = ids;
    }

    used_[pick] = true;
    std::vector<std::int32_t> newly_bound;
    auto try_tuple = [&](const Tuple& t) {
      newly_bound.clear();
      bool ok = true;
      for (std::size_t c = 0; c < lit.args.size() && ok; ++c) {
        const auto& a = lit.args[c];
        if (!a.is_var) {
          ok = t[c] == a.value;
        } else if (binding[a.value] == kUnbound) {
          binding[a.value] = t[c];
          newly_bound.push_back(a.value);
        } else {
          ok = binding[a.value] == t[c];
        }
      }
      bool keep_going = true;
      if (ok) keep_going = step(binding, std::nullopt, emit, depth + 1);
      for (auto slot : newly_bound) binding[slot] = kUnbound;
      return keep_going;
    };

    bool keep_going = true;
    if (bound_any) {
      for (auto id : *candidates)
        if (!(keep_going = try_tuple((*rel)[id]))) break;
    } else {
      for (std::size_t id = 0; id < rel->size(); ++id)
        if (!(keep_going = try_tuple((*rel)[id]))) break;
    }
    used_[pick] = false;
    return keep_going;
  }

  const CompiledRule& rule_;
  RelationFor relation_for_;
  std::vector<bool> used_;
};

// Instantiates the head under a full body match. Head variables that the body
// leaves unbound range over the whole active domain.
template <typename Emit>
void for_each_head(const CompiledRule& rule, Binding& binding, std::size_t domain, Emit&& emit) {
  std::vector<std::int32_t> free;
  for (const auto& a : rule.head.args)
    if (a.is_var && binding[a.value] == kUnbound &&
        std::find(free.begin(), free.end(), a.value) == free.end())
      free.push_back(a.value);
  auto build = [&] {
    Tuple t;
    t.reserve(rule.head.args.size());
    for (const auto& a : rule.head.args) t.push_back(a.is_var ? binding[a.value] : a.value);
    emit(std::move(t));
  };
  if (free.empty()) {
    build();
    return;
  }
  if (domain == 0) return;
  std::function<void(std::size_t)> assign = [&](std::size_t k) {
    if (k == free.size()) {
      build();
      return;
    }
    for (std::size_t v = 0; v < domain; ++v) {
      binding[free[k]] = static_cast<std::int32_t>(v);
      assign(k + 1);
    }
    binding[free[k]] = kUnbound;
  };
  assign(0);
}

// Semi-naive fixpoint for the predicates the program defines. Returns the
// full extension (bk facts included) of every defined predicate.
inline std::map<PredKey, Relation> fixpoint(const Database& db, Scope& scope,
                                            const std::vector<CompiledRule>& rules,
                                            const EvalLimits& limits) {
  std::map<PredKey, Relation> full;
  for (const auto& r : rules) {
    auto [it, inserted] = full.try_emplace(r.head.pred, r.head.pred.arity);
    if (inserted) {
      if (const Relation* base = db.relation(r.head.pred))
        for (std::size_t i = 0; i < base->size(); ++i) it->second.insert((*base)[i]);
    }
  }

  std::size_t derived = 0;
  std::map<PredKey, Relation> delta;
  std::map<PredKey, std::vector<Tuple>> pending;
  auto add = [&](const PredKey& key, Tuple t) {
    if (!full.at(key).contains(t)) pending[key].push_back(std::move(t));
  };

  // Round 0: every rule over the full relations (delta = everything so far).
  for (const auto& r : rules) {
    Binding binding(r.n_vars, kUnbound);
    BodyMatcher matcher(r, [&](std::size_t i) -> const Relation* {
      const auto& p = r.body[i].pred;
      if (auto it = full.find(p); it != full.end()) return &it->second;
      return db.relation(p);
    });
    matcher.run(binding, std::nullopt, [&](Binding& b) {
      for_each_head(r, b, scope.domain_size(), [&](Tuple t) { add(r.head.pred, std::move(t)); });
      return true;
    });
  }

  auto merge = [&] {
    delta.clear();
    for (auto& [key, tuples] : pending) {
      auto& d = delta.try_emplace(key, key.arity).first->second;
      auto& f = full.at(key);
      for (auto& t : tuples) {
        if (f.insert(t)) {
          d.insert(t);
          if (++derived > limits.max_derived)
            throw ResourceLimit("derived-atom cap of " + std::to_string(limits.max_derived) +
                                " exceeded");
        }
      }
    }
    pending.clear();
    for (auto it = delta.begin(); it != delta.end();)
      it = it->second.size() == 0 ? delta.erase(it) : std::next(it);
  };
  merge();

  while (!delta.empty()) {
    for (const auto& r : rules) {
      for (std::size_t i = 0; i < r.body.size(); ++i) {
        auto d = delta.find(r.body[i].pred);
        if (d == delta.end()) continue;
        Binding binding(r.n_vars, kUnbound);
        BodyMatcher matcher(r, [&, i](std::size_t j) -> const Relation* {
          const auto& p = r.body[j].pred;
          if (j == i) return &d->second;
          if (auto it = full.find(p); it != full.end()) return &it->second;
          return db.relation(p);
        });
        matcher.run(binding, i, [&](Binding& b) {
          for_each_head(r, b, scope.domain_size(),
                        [&](Tuple t) { add(r.head.pred, std::move(t)); });
          return true;
        });
      }
    }
    merge();
  }
  return full;
}

}  // namespace detail

/// Coverage testing against one task. Holds the interned background facts
/// and example tuples; const member functions are safe to call concurrently.
class Evaluator {
 public:
  explicit Evaluator(const Task& task, EvalLimits limits = {})
      : db_(task.bk_facts), limits_(limits) {
    intern_examples(task.pos, pos_);
    intern_examples(task.neg, neg_);
  }

  const Database& database() const noexcept { return db_; }
  std::size_t n_pos() const noexcept { return pos_.size(); }
  std::size_t n_neg() const noexcept { return neg_.size(); }

  /// Coverage of the task's own examples.
  Coverage coverage(const Program& p) const { return coverage_of(p, pos_, neg_); }

  /// Coverage of other examples against the same background facts.
  Coverage coverage(const Program& p, std::span<const Atom> pos, std::span<const Atom> neg) const {
    std::vector<Example> ip, in;
    intern_examples(pos, ip);
    intern_examples(neg, in);
    return coverage_of(p, ip, in);
  }

  /// Least Herbrand model of bk ∪ p, sorted.
  std::vector<Atom> least_model(const Program& p) const {
    detail::Scope scope(db_);
    auto rules = compile(p, scope);
    auto idb = detail::fixpoint(db_, scope, rules, limits_);
    std::set<Atom> out;
    auto emit = [&](const detail::PredKey& key, const detail::Relation& rel) {
      for (std::size_t i = 0; i < rel.size(); ++i) {
        Atom a{key.name, {}};
        for (auto v : rel[i]) a.args.push_back(Term::constant(scope.name(v)));
        out.insert(std::move(a));
      }
    };
    for (const auto& [key, rel] : db_.relations()) emit(key, rel);
    for (const auto& [key, rel] : idb) emit(key, rel);
    return {out.begin(), out.end()};
  }

 private:
  struct Example {
    detail::PredKey pred;
    std::optional<detail::Tuple> tuple;  // empty when a constant is unknown to bk
    Atom atom;
  };

  void intern_examples(std::span<const Atom> atoms, std::vector<Example>& out) const {
    out.clear();
    out.reserve(atoms.size());
    for (const auto& a : atoms) {
      Example e{detail::PredKey{a.predicate, a.arity()}, detail::Tuple{}, a};
      for (const auto& t : a.args) {
        auto id = db_.constant_id(t.name);
        if (!id) {
          e.tuple.reset();
          break;
        }
        e.tuple->push_back(*id);
      }
      out.push_back(std::move(e));
    }
  }

  std::vector<detail::CompiledRule> compile(const Program& p, detail::Scope& scope) const {
    std::vector<detail::CompiledRule> rules;
    rules.reserve(p.rule_count());
    for (const auto& r : p.rules()) rules.push_back(scope.compile(r));
    return rules;
  }

  // Resolves example tuples in a scope that may know extra constants.
  static std::optional<detail::Tuple> resolve(const Example& e, detail::Scope& scope) {
    if (e.tuple) return e.tuple;
    detail::Tuple t;
    for (const auto& term : e.atom.args) t.push_back(scope.constant(term.name));
    return t;
  }

  Coverage coverage_of(const Program& p, const std::vector<Example>& pos,
                       const std::vector<Example>& neg) const {
    Coverage cov{Bitset(pos.size()), Bitset(neg.size())};
    if (p.empty()) {
      // Examples already among the background facts stay entailed.
      mark_facts(pos, cov.pos_bits);
      mark_facts(neg, cov.neg_bits);
      return cov;
    }
    detail::Scope scope(db_);
    auto rules = compile(p, scope);
    if (is_recursive(p)) {
      auto idb = detail::fixpoint(db_, scope, rules, limits_);
      mark_model(idb, pos, scope, cov.pos_bits);
      mark_model(idb, neg, scope, cov.neg_bits);
    } else {
      const std::size_t domain = scope.domain_size();
      mark_goal_directed(rules, pos, scope, domain, cov.pos_bits);
      mark_goal_directed(rules, neg, scope, domain, cov.neg_bits);
    }
    return cov;
  }

  void mark_facts(const std::vector<Example>& exs, Bitset& bits) const {
    for (std::size_t i = 0; i < exs.size(); ++i) {
      if (!exs[i].tuple) continue;
      const auto* rel = db_.relation(exs[i].pred);
      if (rel && rel->contains(*exs[i].tuple)) bits.set(i);
    }
  }

  void mark_model(const std::map<detail::PredKey, detail::Relation>& idb,
                  const std::vector<Example>& exs, detail::Scope& scope, Bitset& bits) const {
    for (std::size_t i = 0; i < exs.size(); ++i) {
      auto t = resolve(exs[i], scope);
      if (auto it = idb.find(exs[i].pred); it != idb.end()) {
        if (it->second.contains(*t)) bits.set(i);
      } else if (const auto* rel = db_.relation(exs[i].pred); rel && rel->contains(*t)) {
        bits.set(i);
      }
    }
  }

  // Non-recursive programs: an example is entailed iff it is a fact or some
  // rule's head unifies with it and the body has a match under that binding.
  void mark_goal_directed(const std::vector<detail::CompiledRule>& rules,
                          const std::vector<Example>& exs, detail::Scope& scope,
                          std::size_t domain, Bitset& bits) const {
    mark_facts(exs, bits);
    for (std::size_t i = 0; i < exs.size(); ++i) {
      if (bits.test(i)) continue;
      auto t = resolve(exs[i], scope);
      // Constants outside bk ∪ program are not in the Herbrand universe.
      if (std::any_of(t->begin(), t->end(),
                      [&](std::int32_t v) { return static_cast<std::size_t>(v) >= domain; }))
        continue;
      for (const auto& r : rules) {
        if (!(r.head.pred == exs[i].pred)) continue;
        detail::Binding binding(r.n_vars, detail::kUnbound);
        bool unifies = true;
        for (std::size_t c = 0; c < r.head.args.size() && unifies; ++c) {
          const auto& a = r.head.args[c];
          if (!a.is_var) {
            unifies = a.value == (*t)[c];
          } else if (binding[a.value] == detail::kUnbound) {
            binding[a.value] = (*t)[c];
          } else {
            unifies = binding[a.value] == (*t)[c];
          }
        }
        if (!unifies) continue;
        bool found = false;
        detail::BodyMatcher matcher(r, [&](std::size_t j) { return db_.relation(r.body[j].pred); });
        matcher.run(binding, std::nullopt, [&](detail::Binding&) {
          found = true;
          return false;
        });
        if (found) {
          bits.set(i);
          break;
        }
      }
    }
  }

  Database db_;
  EvalLimits limits_;
  std::vector<Example> pos_;
  std::vector<Example> neg_;
};

/// Least model of facts ∪ p.
inline std::vector<Atom> least_model(const Program& p, std::span<const Atom> facts,
                                     EvalLimits limits = {}) {
  Task t;
  t.bk_facts.assign(facts.begin(), facts.end());
  return Evaluator(t, limits).least_model(p);
}

inline Coverage coverage(const Program& p, const Task& t, EvalLimits limits = {}) {
  return Evaluator(t, limits).coverage(p);
}

}  // namespace lexicost
