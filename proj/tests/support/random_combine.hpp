#pragma once

#include <cstddef>
#include <random>

#include "lexicost/combiner.hpp"

namespace randcombine {

using lexicost::Bitset;
using lexicost::CombineProblem;

// Random coverages with a per-problem density so that both sparse and dense
// instances occur; every entry covers at least one positive.
inline CombineProblem problem(std::mt19937_64& rng, const lexicost::CostSpec& spec,
                              std::size_t max_entries = 12, std::size_t max_examples = 30) {
  CombineProblem p;
  p.spec = spec;
  p.n_pos = 1 + rng() % max_examples;
  p.n_neg = rng() % (max_examples + 1);
  const std::size_t n = rng() % (max_entries + 1);
  const unsigned density = 1 + static_cast<unsigned>(rng() % 6);  // out of 8
  for (std::size_t i = 0; i < n; ++i) {
    lexicost::PromisingEntry e;
    e.id = i;
    e.size = 2 + rng() % 6;
    e.cov = {Bitset(p.n_pos), Bitset(p.n_neg)};
    for (std::size_t k = 0; k < p.n_pos; ++k)
      if (rng() % 8 < density) e.cov.pos_bits.set(k);
    for (std::size_t k = 0; k < p.n_neg; ++k)
      if (rng() % 8 < density / 2) e.cov.neg_bits.set(k);
    if (e.cov.pos_bits.none()) e.cov.pos_bits.set(rng() % p.n_pos);
    p.entries.push_back(std::move(e));
  }
  return p;
}

}  // namespace randcombine
