#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lexicost/kb.hpp"

// Reference semantics for tests: repeat "apply every rule under every
// assignment of its variables to constants" until nothing new appears.
// Deliberately slow and shares no code with the real evaluator.

namespace naive {

using lexicost::Atom;
using lexicost::Rule;
using lexicost::Term;

inline std::set<Atom> least_model(const std::vector<Rule>& rules, const std::vector<Atom>& facts) {
  std::set<Atom> model(facts.begin(), facts.end());
  std::set<std::string> consts;
  for (const auto& f : facts)
    for (const auto& t : f.args) consts.insert(t.name);
  for (const auto& r : rules) {
    for (const auto& t : r.head.args)
      if (!t.is_var()) consts.insert(t.name);
    for (const auto& b : r.body)
      for (const auto& t : b.args)
        if (!t.is_var()) consts.insert(t.name);
  }
  const std::vector<std::string> domain(consts.begin(), consts.end());

  auto ground = [](const Atom& a, const std::map<std::string, std::string>& theta) {
    Atom g{a.predicate, {}};
    for (const auto& t : a.args) g.args.push_back(Term::constant(t.is_var() ? theta.at(t.name) : t.name));
    return g;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : rules) {
      std::set<std::string> var_set;
      for (const auto& t : r.head.args)
        if (t.is_var()) var_set.insert(t.name);
      for (const auto& b : r.body)
        for (const auto& t : b.args)
          if (t.is_var()) var_set.insert(t.name);
      const std::vector<std::string> vars(var_set.begin(), var_set.end());
      if (domain.empty() && !vars.empty()) continue;

      std::vector<std::size_t> idx(vars.size(), 0);
      std::vector<Atom> fresh;
      while (true) {
        std::map<std::string, std::string> theta;
        for (std::size_t i = 0; i < vars.size(); ++i) theta[vars[i]] = domain[idx[i]];
        bool holds = true;
        for (const auto& b : r.body)
          if (!model.count(ground(b, theta))) {
            holds = false;
            break;
          }
        if (holds) {
          auto h = ground(r.head, theta);
          if (!model.count(h)) fresh.push_back(h);
        }
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == domain.size()) idx[k++] = 0;
        if (k == idx.size()) break;
      }
      for (auto& h : fresh) changed = model.insert(std::move(h)).second || changed;
    }
  }
  return model;
}

struct Counts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Counts confusion(const std::vector<Rule>& rules, const std::vector<Atom>& facts,
                        const std::vector<Atom>& pos, const std::vector<Atom>& neg) {
  auto model = least_model(rules, facts);
  Counts c;
  for (const auto& a : pos) (model.count(a) ? c.tp : c.fn)++;
  for (const auto& a : neg) (model.count(a) ? c.fp : c.tn)++;
  return c;
}

}  // namespace naive
