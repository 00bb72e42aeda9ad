#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcmr/gen_eq.h"

namespace pcmr {

// Solution-tree leaf machinery: the parabolic graph, the constraint graph of
// a coefficient-only leaf, admissible homomorphism enumeration, leaf-group
// presentations, and big-power discrimination probes.

// Vertices are letter subsets (canonical parabolic subgroups), edges the
// disjoint-commutation pairs. Materialized only under a rank cap; the edge
// predicate works at any rank.
struct ParabolicGraph {
  CommutationGraph graph;
  std::vector<uint64_t> vertices;  // all subsets, when materialized
};

bool parabolic_edge(const CommutationGraph& g, uint64_t s1, uint64_t s2);

ParabolicGraph build_digamma(const CommutationGraph& g, size_t rank_cap = 8);

// The constraint graph of a coefficient-only equation: letters plus the
// items free of coefficient equations; edges per the three rules.
struct ConstraintGraph {
  CommutationGraph graph;
  std::vector<int> item_vertices;                  // items (1-based)
  std::set<std::pair<int, int>> item_item;         // both 1-based items
  std::set<std::pair<int, int>> item_letter;       // (item, letter)
};

ConstraintGraph build_pi(const GeneralisedEquation& ge);

// An admissible assignment of items to nonempty parabolic vertices.
struct ParabolicHom {
  std::vector<uint64_t> image;  // per item_vertices entry
};

std::vector<ParabolicHom> enumerate_homs(const ConstraintGraph& pi,
                                         const CommutationGraph& g,
                                         bool allow_empty = false);

// A leaf group presented as a partially commutative group on the letters
// plus item components.
struct LeafGroupPresentation {
  CommutationGraph graph;  // ambient letters
  struct Generator {
    int item;       // source item
    int component;  // 1-based factor index within the item's vertex group
    std::string name;
    uint64_t parabolic;  // letter subset of its direct factor
    bool abelian_factor = false;
  };
  std::vector<Generator> generators;
  // Commutation edges among either letters or item components:
  // kind 0 letter-letter, 1 letter-generator, 2 generator-generator.
  std::set<std::pair<int, int>> letter_letter;
  std::set<std::pair<int, int>> letter_generator;  // (letter, generator index)
  std::set<std::pair<int, int>> generator_generator;

  // The full commutation graph on letters + generators.
  CommutationGraph flattened() const;
  std::vector<std::string> relator_strings() const;  // excludes ambient edges
};

LeafGroupPresentation leaf_group(const ParabolicHom& hom, const ConstraintGraph& pi,
                                 const CommutationGraph& g);

// Big-power discrimination probe: search bounded substitutions (items into
// their allowed parabolics) keeping every element nontrivial.
struct ProbeResult {
  bool found = false;
  std::vector<Word> assignment;  // per pi.item_vertices when found
  size_t tried = 0;
};

ProbeResult discrimination_probe(const ConstraintGraph& pi, const CommutationGraph& g,
                                 const std::vector<ItemWord>& elements, size_t max_len,
                                 size_t cap = 5000000);

}  // namespace pcmr
