#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcmr/gen_eq.h"

namespace pcmr {

// Periodic solutions and periodic structures: the structure extracted from a
// periodic solution, its graph, cycle and lattice bases, classification,
// cycle evaluation, Euclidean exponent reduction, and strongly-singular
// witnesses.

// w = Q^r Q1 with Q a cyclic permutation of P or its inverse.
struct PeriodDecomposition {
  Word q;
  int r = 1;
  Word q1;
  bool inverse_orientation = false;  // Q conjugate to P^-1
};

bool is_period(const CommutationGraph& g, const Word& p);

// Decomposition of a P-periodic word; nullopt when w is not P-periodic.
std::optional<PeriodDecomposition> periodic_decomposition(const CommutationGraph& g,
                                                          const Word& w, const Word& p);

// Max exponent of a P-periodic subword of w.
int periodicity_exponent(const CommutationGraph& g, const Word& w, const Word& p);

enum class SectionPeriodicity { Periodic, Short, OtherPeriod };

struct SectionTagging {
  int from = 0, to = 0;
  SectionPeriodicity tag = SectionPeriodicity::Short;
};

struct PeriodicClassification {
  std::vector<SectionTagging> sections;
  bool periodic = false;  // some section is P-periodic with exponent >= 2
};

PeriodicClassification classify_periodic_solution(const GeneralisedEquation& ge,
                                                  const SolutionTuple& H, const Word& p);

// The structure <P, R>: member sets plus the boundary equivalence.
struct PeriodicStructure {
  std::vector<int> items;                    // members of P (1-based)
  std::vector<int> bases;                    // base ids in P
  std::vector<std::pair<int, int>> sections; // closed sections in P
  std::map<int, int> x_of_section;           // section start -> +-1
  // R as a partition of the boundary set B; boundaries of two-section joints
  // are split into (boundary, side) with side 0 = left copy, 1 = right copy.
  std::map<std::pair<int, int>, int> r_class;
  // Phase data delta(l) for solution-built structures: |P1| per boundary copy.
  std::map<std::pair<int, int>, int> phase;

  bool item_in(int item) const {
    return std::find(items.begin(), items.end(), item) != items.end();
  }
  bool base_in(int id) const { return std::find(bases.begin(), bases.end(), id) != bases.end(); }
};

// P(H, P) per the construction; validates the structure axioms.
PeriodicStructure structure_from_solution(const GeneralisedEquation& ge, const SolutionTuple& H,
                                          const Word& p);

// Axioms (a)-(f); returns a failure description or nothing.
std::optional<std::string> validate_structure(const GeneralisedEquation& ge,
                                              const PeriodicStructure& ps);

// The graph of the structure, cycle bases and the integer-lattice split.
struct CycleData {
  // Vertices = R-classes, named by class id; edges e_k per item h_k of a
  // P-section, from the class of its left boundary copy to the right one.
  int num_vertices = 0;
  struct Edge {
    int item;  // label h_item
    int from, to;
  };
  std::vector<Edge> edges;          // indexed by position; edge k has label items[k]
  std::vector<int> sh;              // edge indices with short labels
  std::vector<int> forest_t0;       // edge indices in the forest of the short graph
  std::vector<int> tree_t;          // edge indices of the spanning tree (includes t0)
  int base_vertex = 0;              // v_Gamma
  std::vector<int> off_tree;        // edge indices not in T, ascending
  // Cycles c_e for off-tree edges, as item words (labels along the loop).
  std::vector<ItemWord> cycles;
  // b_mu expressions: per structure base pair, exponents over the off-tree
  // cycle coordinates.
  std::vector<std::vector<long long>> b_rows;
  std::vector<int> b_row_base;  // base id per row
  // Lattice data over the off-tree coordinates.
  std::vector<std::vector<long long>> c1;  // basis of the saturation of B
  std::vector<std::vector<long long>> c2;  // complement basis
  long long index_b_in_z1 = 1;             // [Z1 : B]
  // Extra generator bookkeeping for edges of T \ T0.
  struct UZGen {
    int tree_edge;   // e_i in T \ T0
    int short_edge;  // e not in T, in Sh
    ItemWord u, z;
  };
  std::vector<UZGen> uz;
  // Paths from the base vertex, per vertex, as edge index sequences (+-).
  std::vector<std::vector<std::pair<int, int>>> path_from_base;  // (edge, dir)

  ItemWord cycle_word(const std::vector<long long>& coords) const;
};

CycleData build_cycle_data(const GeneralisedEquation& ge, const PeriodicStructure& ps);

enum class StructureVerdict {
  StronglySingularA,
  StronglySingularB,
  Singular,
  Regular,
  Unknown,
};

struct StructureClassification {
  StructureVerdict verdict = StructureVerdict::Unknown;
  bool certified = false;  // a witness backs the verdict
  std::string evidence;
  size_t bound_used = 0;
};

StructureClassification classify_structure(const GeneralisedEquation& ge,
                                           const PeriodicStructure& ps, const CycleData& cd,
                                           size_t bound);

// H(c) for a cycle given as an item word; returns the value and its exponent
// n with H(c) = rot^n for the base vertex rotation of P.
struct CycleValue {
  Word value;
  int exponent = 0;
};

CycleValue evaluate_cycle(const GeneralisedEquation& ge, const PeriodicStructure& ps,
                          const CycleData& cd, const SolutionTuple& H, const Word& p,
                          const ItemWord& cycle);

// Euclidean reduction over the free cycle coordinates (the singular case):
// returns the reduced solution and the generator-automorphism log.
struct EuclidResult {
  SolutionTuple h_plus;
  std::vector<std::string> log;
  std::vector<long long> exponents_before;
  std::vector<long long> exponents_after;
};

EuclidResult euclid_reduce_c2(const GeneralisedEquation& ge, const PeriodicStructure& ps,
                              const CycleData& cd, const SolutionTuple& H, const Word& p);

// Witness family for strongly singular structures.
std::vector<ItemWord> strongly_singular_witnesses(const GeneralisedEquation& ge,
                                                  const PeriodicStructure& ps,
                                                  const CycleData& cd,
                                                  const StructureClassification& cls);

}  // namespace pcmr
