#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lexicost/kb.hpp"

namespace lexicost {

namespace detail {

using Substitution = std::map<std::string, Term>;

inline bool match_atom(const Atom& general, const Atom& specific, Substitution& theta,
                       std::vector<std::string>& bound) {
  if (general.predicate != specific.predicate || general.arity() != specific.arity()) return false;
  for (std::size_t i = 0; i < general.args.size(); ++i) {
    const auto& g = general.args[i];
    const auto& s = specific.args[i];
    if (!g.is_var()) {
      if (g != s) return false;
      continue;
    }
    auto it = theta.find(g.name);
    if (it == theta.end()) {
      theta.emplace(g.name, s);
      bound.push_back(g.name);
    } else if (it->second != s) {
      return false;
    }
  }
  return true;
}

inline bool subsume_body(const std::vector<Atom>& general, std::size_t k,
                         const std::vector<Atom>& specific, Substitution& theta) {
  if (k == general.size()) return true;
  for (const auto& target : specific) {
    std::vector<std::string> bound;
    if (match_atom(general[k], target, theta, bound) && subsume_body(general, k + 1, specific, theta))
      return true;
    for (const auto& v : bound) theta.erase(v);
  }
  return false;
}

}  // namespace detail

/// True iff some substitution θ maps r1's head onto r2's head and every body
/// literal of r1 into r2's body. The variables of r2 are treated as fixed.
inline bool theta_subsumes(const Rule& r1, const Rule& r2) {
  detail::Substitution theta;
  std::vector<std::string> bound;
  if (!detail::match_atom(r1.head, r2.head, theta, bound)) return false;
  return detail::subsume_body(r1.body, 0, r2.body, theta);
}

/// Literal-level redundancy: a repeated body literal, a body literal with no
/// variable chain to the head, or a head variable the body never mentions.
inline bool is_redundant(const Rule& r) {
  for (std::size_t i = 0; i < r.body.size(); ++i)
    for (std::size_t j = i + 1; j < r.body.size(); ++j)
      if (r.body[i] == r.body[j]) return true;

  std::set<std::string> body_vars;
  for (const auto& b : r.body)
    for (const auto& t : b.args)
      if (t.is_var()) body_vars.insert(t.name);

  std::set<std::string> reached;
  for (const auto& t : r.head.args)
    if (t.is_var()) {
      if (!body_vars.count(t.name)) return true;
      reached.insert(t.name);
    }
  if (r.body.empty()) return false;

  std::vector<bool> linked(r.body.size(), false);
  if (reached.empty()) {
    // A ground head has nothing to chain from; the body must still hang together.
    linked[0] = true;
    for (const auto& t : r.body[0].args)
      if (t.is_var()) reached.insert(t.name);
  }
  for (bool grew = true; grew;) {
    grew = false;
    for (std::size_t i = 0; i < r.body.size(); ++i) {
      if (linked[i]) continue;
      bool touches = std::any_of(r.body[i].args.begin(), r.body[i].args.end(),
                                 [&](const Term& t) { return t.is_var() && reached.count(t.name); });
      if (!touches) continue;
      linked[i] = grew = true;
      for (const auto& t : r.body[i].args)
        if (t.is_var()) reached.insert(t.name);
    }
  }
  return std::find(linked.begin(), linked.end(), false) != linked.end();
}

/// Program-level redundancy: any redundant rule, or one rule subsuming another.
inline bool is_redundant(const Program& p) {
  const auto& rules = p.rules();
  for (const auto& r : rules)
    if (is_redundant(r)) return true;
  for (std::size_t i = 0; i < rules.size(); ++i)
    for (std::size_t j = 0; j < rules.size(); ++j)
      if (i != j && theta_subsumes(rules[i], rules[j])) return true;
  return false;
}

enum class Ordering { by_size, unordered };

enum class ConstraintKind { prune_specializations, prune_exact };

struct Constraint {
  ConstraintKind kind;
  Program anchor;
};

/// All canonical, non-redundant single rules the bias admits. Heads use
/// distinct variables; bodies draw from body_preds (and the head predicate
/// itself when recursion is enabled).
inline std::vector<Rule> enumerate_rules(const Bias& bias) {
  std::set<Rule> out;
  for (const auto& head : bias.head_preds) {
    if (head.arity > bias.max_vars) continue;
    Atom head_atom{head.name, {}};
    for (std::size_t i = 0; i < head.arity; ++i) head_atom.args.push_back(Term::var(var_name(i)));

    std::vector<PredicateSig> preds(bias.body_preds.begin(), bias.body_preds.end());
    if (bias.enable_recursion && !bias.body_preds.count(head)) preds.push_back(head);

    std::vector<Atom> pool;
    std::vector<std::vector<std::size_t>> pool_vars;
    for (const auto& p : preds) {
      std::vector<std::size_t> idx(p.arity, 0);
      while (true) {
        Atom a{p.name, {}};
        for (auto v : idx) a.args.push_back(Term::var(var_name(v)));
        pool.push_back(std::move(a));
        pool_vars.push_back(idx);
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == bias.max_vars) idx[k++] = 0;
        if (k == idx.size()) break;
      }
    }

    std::vector<std::size_t> pick;
    auto consider = [&] {
      Rule r{head_atom, {}};
      std::vector<bool> used(bias.max_vars, false);
      for (auto i : pick) {
        r.body.push_back(pool[i]);
        for (auto v : pool_vars[i]) used[v] = true;
      }
      // Variables must be exactly 0..m-1 with every head variable present;
      // any other rule is a renaming of one that is.
      std::size_t m = 0;
      while (m < used.size() && used[m]) ++m;
      if (std::find(used.begin() + static_cast<std::ptrdiff_t>(m), used.end(), true) != used.end())
        return;
      if (m < head.arity) return;
      if (is_redundant(r)) return;
      out.insert(canonical(r));
    };
    auto choose = [&](auto&& self, std::size_t from, std::size_t left) -> void {
      if (left == 0) {
        consider();
        return;
      }
      for (std::size_t i = from; i + left <= pool.size(); ++i) {
        pick.push_back(i);
        self(self, i + 1, left - 1);
        pick.pop_back();
      }
    };
    for (std::size_t b = 1; b <= bias.max_body; ++b) choose(choose, 0, b);
  }
  return {out.begin(), out.end()};
}

/// Candidate stream over the bias. Candidates come in size classes of
/// non-decreasing size, each class in rendered-text order. Single rules are
/// emitted on their own; with recursion enabled, programs of 2..max_clauses
/// rules for one head predicate that contain a recursive rule and a base rule
/// are emitted as well. Both orderings produce the same stream; only
/// by_size promises the order.
class Generator {
 public:
  Generator(Bias bias, Ordering ordering, std::optional<std::size_t> size_cap = std::nullopt)
      : bias_(std::move(bias)), ordering_(ordering), size_cap_(size_cap) {
    for (auto& r : enumerate_rules(bias_)) {
      bool rec = std::any_of(r.body.begin(), r.body.end(),
                             [&](const Atom& b) { return b.predicate == r.head.predicate; });
      if (bias_.enable_recursion && bias_.max_clauses >= 2)
        by_head_[PredicateSig{r.head.predicate, r.head.arity()}].push_back({r, rec});
      if (!rec) singles_by_size_[r.size()].push_back(std::move(r));
    }
    for (auto& [head, pool] : by_head_) {
      auto& m = subsumes_[head];
      m.assign(pool.size(), std::vector<bool>(pool.size(), false));
      for (std::size_t i = 0; i < pool.size(); ++i)
        for (std::size_t j = 0; j < pool.size(); ++j)
          m[i][j] = i != j && theta_subsumes(pool[i].rule, pool[j].rule);
    }
    max_size_ = std::min(bias_.max_program_size(),
                         bias_.enable_recursion ? bias_.max_program_size() : 1 + bias_.max_body);
  }

  Ordering ordering() const noexcept { return ordering_; }
  std::optional<std::size_t> size_cap() const noexcept { return size_cap_; }
  void set_size_cap(std::optional<std::size_t> cap) noexcept { size_cap_ = cap; }

  std::size_t emitted() const noexcept { return emitted_; }
  std::size_t skipped() const noexcept { return skipped_; }

  /// Next constraint-consistent candidate, or nullopt once the space (up to
  /// the size cap) is spent.
  std::optional<Program> next() {
    while (true) {
      if (cursor_ == current_.size()) {
        if (!load_class(current_size_ + 1)) return std::nullopt;
        continue;
      }
      if (size_cap_ && current_size_ > *size_cap_) return std::nullopt;
      auto& [text, program] = current_[cursor_++];
      if (excluded(text, program)) {
        ++skipped_;
        continue;
      }
      ++emitted_;
      return std::move(program);
    }
  }

  /// Future candidates respect c; already emitted ones are unaffected.
  void add_constraint(const Constraint& c) {
    if (c.kind == ConstraintKind::prune_specializations && c.anchor.rule_count() == 1) {
      const auto& r = c.anchor.rules().front();
      auto& list = anchors_[PredicateSig{r.head.predicate, r.head.arity()}];
      if (std::find(list.begin(), list.end(), r) == list.end()) list.push_back(r);
      return;
    }
    // A multi-rule anchor has no sound specialization test here; only the
    // program itself is excluded.
    exact_.insert(render_program(c.anchor));
  }

 private:
  struct PoolRule {
    Rule rule;
    bool recursive;
  };

  bool excluded(const std::string& text, const Program& p) const {
    if (exact_.count(text)) return true;
    if (p.rule_count() != 1) return false;
    const auto& r = p.rules().front();
    auto it = anchors_.find(PredicateSig{r.head.predicate, r.head.arity()});
    if (it == anchors_.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const Rule& a) { return theta_subsumes(a, r); });
  }

  bool load_class(std::size_t size) {
    current_.clear();
    cursor_ = 0;
    current_size_ = size;
    if (size > max_size_ || (size_cap_ && size > *size_cap_)) return false;

    std::vector<Program> programs;
    if (auto it = singles_by_size_.find(size); it != singles_by_size_.end())
      for (const auto& r : it->second) programs.emplace_back(std::vector<Rule>{r});
    for (const auto& [head, pool] : by_head_) add_recursive(head, pool, size, programs);

    current_.reserve(programs.size());
    for (auto& p : programs) current_.emplace_back(render_program(p), std::move(p));
    std::sort(current_.begin(), current_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return true;
  }

  // Subsets of one head's rules with total size `size`, 2..max_clauses rules,
  // at least one recursive and one base rule, and no rule subsuming another.
  void add_recursive(const PredicateSig& head, const std::vector<PoolRule>& pool, std::size_t size,
                     std::vector<Program>& out) const {
    const auto& sub = subsumes_.at(head);
    std::vector<std::size_t> pick;
    auto dfs = [&](auto&& self, std::size_t from, std::size_t left) -> void {
      if (left == 0) {
        if (pick.size() < 2) return;
        bool rec = false, base = false;
        for (auto i : pick) (pool[i].recursive ? rec : base) = true;
        if (!rec || !base) return;
        std::vector<Rule> rules;
        for (auto i : pick) rules.push_back(pool[i].rule);
        out.emplace_back(std::move(rules));
        return;
      }
      if (pick.size() == bias_.max_clauses) return;
      for (std::size_t i = from; i < pool.size(); ++i) {
        if (pool[i].rule.size() > left) continue;
        bool clash = std::any_of(pick.begin(), pick.end(),
                                 [&](std::size_t j) { return sub[i][j] || sub[j][i]; });
        if (clash) continue;
        pick.push_back(i);
        self(self, i + 1, left - pool[i].rule.size());
        pick.pop_back();
      }
    };
    dfs(dfs, 0, size);
  }

  Bias bias_;
  Ordering ordering_;
  std::optional<std::size_t> size_cap_;
  std::size_t max_size_ = 0;

  std::map<std::size_t, std::vector<Rule>> singles_by_size_;
  std::map<PredicateSig, std::vector<PoolRule>> by_head_;
  std::map<PredicateSig, std::vector<std::vector<bool>>> subsumes_;

  std::vector<std::pair<std::string, Program>> current_;
  std::size_t cursor_ = 0;
  std::size_t current_size_ = 1;

  std::map<PredicateSig, std::vector<Rule>> anchors_;
  std::set<std::string> exact_;
  std::size_t emitted_ = 0;
  std::size_t skipped_ = 0;
};

}  // namespace lexicost
