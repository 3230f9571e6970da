#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lexicost/kb.hpp"

// Random function-free programs and fact sets for evaluator cross-checks.
// Extensional predicates e0/2, e1/2, e2/1; intensional p0/2, p1/1, p2/2, any
// of which may appear in bodies (so mutual recursion happens).

namespace randprog {

using lexicost::Atom;
using lexicost::Rule;
using lexicost::Term;

struct Pred {
  const char* name;
  std::size_t arity;
};

inline constexpr Pred kEdb[] = {{"e0", 2}, {"e1", 2}, {"e2", 1}};
inline constexpr Pred kIdb[] = {{"p0", 2}, {"p1", 1}, {"p2", 2}};

inline std::string constant(std::mt19937_64& rng, std::size_t n) {
  return "c" + std::to_string(rng() % n);
}

inline std::vector<Atom> facts(std::mt19937_64& rng, std::size_t max_facts = 50,
                               std::size_t constants = 6) {
  std::set<Atom> out;
  const std::size_t n = 1 + rng() % max_facts;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = kEdb[rng() % 3];
    Atom a{p.name, {}};
    for (std::size_t k = 0; k < p.arity; ++k) a.args.push_back(Term::constant(constant(rng, constants)));
    out.insert(a);
  }
  return {out.begin(), out.end()};
}

struct Options {
  bool recursive = true;       // idb predicates allowed in bodies
  std::size_t max_rules = 4;
  std::size_t max_body = 3;
  std::size_t max_vars = 4;
  std::size_t constants = 6;
  const char* only_head = nullptr;  // restrict heads to one predicate
};

inline Rule rule(std::mt19937_64& rng, const Options& o) {
  const Pred* heads = kIdb;
  Pred head_pred = kIdb[rng() % 3];
  if (o.only_head)
    for (std::size_t i = 0; i < 3; ++i)
      if (std::string(heads[i].name) == o.only_head) head_pred = heads[i];

  Rule r;
  std::vector<std::string> body_vars;
  const std::size_t body_len = 1 + rng() % o.max_body;
  for (std::size_t i = 0; i < body_len; ++i) {
    const Pred& p = o.recursive && rng() % 3 == 0 ? kIdb[rng() % 3] : kEdb[rng() % 3];
    Atom a{p.name, {}};
    for (std::size_t k = 0; k < p.arity; ++k) {
      if (rng() % 10 == 0) {
        a.args.push_back(Term::constant(constant(rng, o.constants)));
      } else {
        auto v = "X" + std::to_string(rng() % o.max_vars);
        body_vars.push_back(v);
        a.args.push_back(Term::var(v));
      }
    }
    r.body.push_back(std::move(a));
  }
  r.head.predicate = head_pred.name;
  for (std::size_t k = 0; k < head_pred.arity; ++k) {
    if (body_vars.empty()) r.head.args.push_back(Term::constant(constant(rng, o.constants)));
    else r.head.args.push_back(Term::var(body_vars[rng() % body_vars.size()]));
  }
  return r;
}

inline std::vector<Rule> program(std::mt19937_64& rng, const Options& o = {}) {
  std::vector<Rule> out;
  const std::size_t n = 1 + rng() % o.max_rules;
  for (std::size_t i = 0; i < n; ++i) out.push_back(rule(rng, o));
  return out;
}

}  // namespace randprog
