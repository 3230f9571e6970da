#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lexicost/bitset.hpp"
#include "lexicost/cost.hpp"
#include "lexicost/errors.hpp"
#include "lexicost/evaluator.hpp"
#include "lexicost/kb.hpp"

// Combine stage: pick the subset of promising programs whose union minimises
// a lexico-linear cost. Union coverage is the bitwise OR of the members'
// coverages and union size is the sum of their sizes.

namespace lexicost {

struct PromisingEntry {
  Program program;
  Coverage cov;
  std::size_t size = 0;
  std::size_t id = 0;
  std::size_t rules = 1;  // rule count, for the clause limit
};

struct CombineProblem {
  std::vector<PromisingEntry> entries;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  CostSpec spec;
  std::optional<std::size_t> max_rules;  // union may hold at most this many rules
  std::optional<std::size_t> max_size;   // and at most this many literals
};

struct CombineSolution {
  std::vector<std::size_t> selected;  // entry ids, ascending
  CostVector cost;
  Confusion conf;
  std::size_t total_size = 0;

  bool operator==(const CombineSolution&) const = default;
};

struct CombineOptions {
  bool dominance_filter = true;
};

namespace detail {

inline void validate(const CombineProblem& p) {
  for (const auto& e : p.entries)
    if (e.cov.pos_bits.size() != p.n_pos || e.cov.neg_bits.size() != p.n_neg)
      throw LengthMismatch("entry " + std::to_string(e.id) +
                           " coverage does not match the example counts");
}

// Entries ordered by id; tie-breaking is defined on ids.
inline std::vector<const PromisingEntry*> by_id(const CombineProblem& p) {
  std::vector<const PromisingEntry*> out;
  out.reserve(p.entries.size());
  for (const auto& e : p.entries) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i - 1]->id == out[i]->id)
      throw std::invalid_argument("duplicate combine entry id " + std::to_string(out[i]->id));
  return out;
}

inline CombineSolution make_solution(const CombineProblem& p,
                                     const std::vector<const PromisingEntry*>& chosen) {
  CombineSolution s;
  Coverage cov{Bitset(p.n_pos), Bitset(p.n_neg)};
  for (auto* e : chosen) {
    s.selected.push_back(e->id);
    cov.pos_bits |= e->cov.pos_bits;
    cov.neg_bits |= e->cov.neg_bits;
    s.total_size += e->size;
  }
  std::sort(s.selected.begin(), s.selected.end());
  s.conf = confusion(cov, p.n_pos, p.n_neg);
  s.cost = evaluate(p.spec, s.conf, s.total_size);
  return s;
}

// e1 dominates e2: at least the positives, at most the negatives, no larger.
inline bool dominates(const PromisingEntry& a, const PromisingEntry& b) {
  if (!b.cov.pos_bits.is_subset_of(a.cov.pos_bits)) return false;
  if (!a.cov.neg_bits.is_subset_of(b.cov.neg_bits)) return false;
  if (a.size > b.size || a.rules > b.rules) return false;
  bool strict = a.cov.pos_bits != b.cov.pos_bits || a.cov.neg_bits != b.cov.neg_bits ||
                a.size < b.size || a.rules < b.rules;
  return strict || a.id < b.id;
}

inline std::vector<const PromisingEntry*> drop_dominated(
    const std::vector<const PromisingEntry*>& entries) {
  std::vector<const PromisingEntry*> out;
  for (auto* e : entries) {
    bool dominated = std::any_of(entries.begin(), entries.end(),
                                 [&](auto* other) { return other != e && dominates(*other, *e); });
    if (!dominated) out.push_back(e);
  }
  return out;
}

// Minimises one level subject to every earlier level staying at its optimum.
// Depth-first over ascending id lists visits subsets in lexicographic order,
// so the first subset reaching the optimum is the tie-break winner.
class StageSearch {
 public:
  StageSearch(const CombineProblem& p, const std::vector<const PromisingEntry*>& entries,
              const CostVector& fixed, std::size_t level)
      : p_(p), entries_(entries), fixed_(fixed), level_(level) {
    suffix_pos_.assign(entries.size() + 1, Bitset(p.n_pos));
    for (std::size_t i = entries.size(); i-- > 0;)
      suffix_pos_[i] = suffix_pos_[i + 1] | entries[i]->cov.pos_bits;
  }

  void run() {
    State root{Bitset(p_.n_pos), Bitset(p_.n_neg), 0, 0};
    visit(root);
    dfs(root, 0);
  }

  std::int64_t best_value() const noexcept { return best_; }
  const std::vector<const PromisingEntry*>& best_set() const noexcept { return best_set_; }

 private:
  struct State {
    Bitset pos;
    Bitset neg;
    std::size_t size;
    std::size_t rules;
  };

  std::int64_t level_value(std::size_t j, const State& s, std::size_t covered_pos) const {
    auto fp = static_cast<std::int64_t>(s.neg.count());
    auto fn = static_cast<std::int64_t>(p_.n_pos - covered_pos);
    return p_.spec.components[j].apply(fp, fn, static_cast<std::int64_t>(s.size));
  }

  void visit(const State& s) {
    auto covered = s.pos.count();
    for (std::size_t j = 0; j < level_; ++j)
      if (level_value(j, s, covered) > fixed_[j]) return;
    auto v = level_value(level_, s, covered);
    if (v < best_) {
      best_ = v;
      best_set_ = chosen_;
    }
  }

  // Admissible: fp and size never shrink below the node; fn cannot drop
  // below what the node plus every later entry could cover.
  bool prunable(const State& s, std::size_t next) const {
    auto optimistic = s.pos.union_count(suffix_pos_[next]);
    for (std::size_t j = 0; j < level_; ++j)
      if (level_value(j, s, optimistic) > fixed_[j]) return true;
    return level_value(level_, s, optimistic) >= best_;
  }

  void dfs(const State& s, std::size_t from) {
    for (std::size_t i = from; i < entries_.size(); ++i) {
      const auto& e = *entries_[i];
      State t{s.pos | e.cov.pos_bits, s.neg | e.cov.neg_bits, s.size + e.size, s.rules + e.rules};
      if (p_.max_rules && t.rules > *p_.max_rules) continue;
      if (p_.max_size && t.size > *p_.max_size) continue;
      if (prunable(t, i + 1)) continue;
      chosen_.push_back(entries_[i]);
      visit(t);
      dfs(t, i + 1);
      chosen_.pop_back();
    }
  }

  const CombineProblem& p_;
  const std::vector<const PromisingEntry*>& entries_;
  const CostVector& fixed_;
  std::size_t level_;
  std::vector<Bitset> suffix_pos_;
  std::vector<const PromisingEntry*> chosen_;
  std::int64_t best_ = std::numeric_limits<std::int64_t>::max();
  std::vector<const PromisingEntry*> best_set_;
};

}  // namespace detail

/// Exact lexicographic optimum over all subsets (the empty one included),
/// found level by level: each stage minimises one component while holding
/// every earlier component at its optimum. The id tie-break is exact without
/// the dominance filter; with it, ties are broken among the surviving entries.
inline CombineSolution optimal_combination(const CombineProblem& p, CombineOptions opts = {}) {
  detail::validate(p);
  auto entries = detail::by_id(p);
  if (opts.dominance_filter) entries = detail::drop_dominated(entries);

  CostVector fixed;
  std::vector<const PromisingEntry*> chosen;
  for (std::size_t level = 0; level < p.spec.components.size(); ++level) {
    detail::StageSearch stage(p, entries, fixed, level);
    stage.run();
    fixed.push_back(stage.best_value());
    chosen = stage.best_set();
  }
  return detail::make_solution(p, chosen);
}

inline constexpr std::size_t kBruteForceLimit = 20;

/// Enumerates all 2^n subsets. Same contract and tie-break as
/// optimal_combination without dominance filtering.
inline CombineSolution brute_force_combination(const CombineProblem& p) {
  if (p.entries.size() > kBruteForceLimit)
    throw TooLarge("brute force is limited to " + std::to_string(kBruteForceLimit) + " entries");
  detail::validate(p);
  auto entries = detail::by_id(p);
  const std::size_t n = entries.size();

  std::optional<CombineSolution> best;
  std::vector<const PromisingEntry*> chosen;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    chosen.clear();
    std::size_t rules = 0;
    std::size_t size = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) {
        chosen.push_back(entries[i]);
        rules += entries[i]->rules;
        size += entries[i]->size;
      }
    }
    if (p.max_rules && rules > *p.max_rules) continue;
    if (p.max_size && size > *p.max_size) continue;
    auto s = detail::make_solution(p, chosen);
    if (!best || s.cost < best->cost || (s.cost == best->cost && s.selected < best->selected))
      best = std::move(s);
  }
  return *best;
}

/// Debug/fuzzing format: `#` header lines, then one `id size pos_bits
/// neg_bits` line per entry. An empty bitstring is written as `-`.
inline void write_combine_problem(std::ostream& out, const CombineProblem& p) {
  out << "# n_pos " << p.n_pos << "\n";
  out << "# n_neg " << p.n_neg << "\n";
  out << "# cost " << format_cost_spec(p.spec) << "\n";
  if (p.max_rules) out << "# max_rules " << *p.max_rules << "\n";
  if (p.max_size) out << "# max_size " << *p.max_size << "\n";
  auto bits = [](const Bitset& b) { return b.size() == 0 ? std::string("-") : b.to_string(); };
  for (const auto& e : p.entries)
    out << e.id << ' ' << e.size << ' ' << bits(e.cov.pos_bits) << ' ' << bits(e.cov.neg_bits)
        << "\n";
}

inline CombineProblem read_combine_problem(std::istream& in) {
  CombineProblem p;
  p.spec = costs::error();
  std::optional<std::size_t> n_pos, n_neg;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError(ParseErrorKind::syntax_error, what, lineno, 1);
  };
  auto bits = [](const std::string& s) { return s == "-" ? Bitset(0) : Bitset::from_string(s); };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "#") {
      std::string key, value;
      ls >> key >> value;
      try {
        if (key == "n_pos") n_pos = std::stoull(value);
        else if (key == "n_neg") n_neg = std::stoull(value);
        else if (key == "cost") p.spec = parse_cost_spec(value);
        else if (key == "max_rules") p.max_rules = std::stoull(value);
        else if (key == "max_size") p.max_size = std::stoull(value);
      } catch (const std::exception& e) {
        fail(std::string("bad header: ") + e.what());
      }
      continue;
    }
    PromisingEntry e;
    std::string size, pos, neg;
    if (!(ls >> size >> pos >> neg)) fail("expected: id size pos_bits neg_bits");
    try {
      e.id = std::stoull(first);
      e.size = std::stoull(size);
      e.cov = Coverage{bits(pos), bits(neg)};
    } catch (const std::exception& ex) {
      fail(ex.what());
    }
    p.entries.push_back(std::move(e));
  }
  if (!p.entries.empty()) {
    if (!n_pos) n_pos = p.entries.front().cov.pos_bits.size();
    if (!n_neg) n_neg = p.entries.front().cov.neg_bits.size();
  }
  p.n_pos = n_pos.value_or(0);
  p.n_neg = n_neg.value_or(0);
  detail::validate(p);
  return p;
}

}  // namespace lexicost
