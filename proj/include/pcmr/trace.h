#pragma once

#include <vector>

#include "pcmr/graph.h"
#include "pcmr/word.h"

namespace pcmr {

// The partially commutative monoid T(A^{+-1}) with involution: dependence
// graphs, clans and the inversion-compatible DM-normal form.

// Dependence graph of a word: vertices are positions, an edge (i, j) with
// i < j whenever the labels do not commute.
struct DependenceGraph {
  size_t n = 0;
  std::vector<Syllable> labels;
  std::vector<std::pair<int, int>> edges;  // i < j

  // Reachability order of the induced partial order.
  std::vector<std::vector<bool>> closure() const;
};

DependenceGraph dependence_graph(const CommutationGraph& g, const Word& w);

// A clan: maximal set of signed letters with identical non-commutation
// neighbourhoods, closed under inversion. Stored by underlying letters.
struct Clan {
  std::vector<int> letters;
  bool thin = false;
};

// Clan partition of the signed alphabet with thin/thick classification.
std::vector<Clan> clans(const CommutationGraph& g);

// DM-normal form: a linearization of the trace of w that is constant on trace
// classes and compatible with inversion.
Word dm_nf(const CommutationGraph& g, const Word& w);

// The position order realizing dm_nf: dm_nf(w)[k] == w[order[k]].
std::vector<int> dm_linearization(const CommutationGraph& g, const Word& w);

// True iff u and v are equal in the trace monoid.
bool trace_equal(const CommutationGraph& g, const Word& u, const Word& v);

}  // namespace pcmr
