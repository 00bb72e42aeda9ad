#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcmr/gen_eq.h"

namespace pcmr {

// The two-stage reduction: a system over the group becomes constrained
// generalised equations over the trace monoid via partition tables, and
// those become constrained generalised equations over the free monoid via
// normal-form splittings.

// A system of equations over the group, each written as a product of cells
// equal to 1.
struct EquationSystem {
  CommutationGraph graph;
  std::vector<std::string> variables;
  struct Cell {
    bool is_var = false;
    int var = -1;  // 0-based into variables
    int sign = 1;
    Syllable letter;  // when !is_var
  };
  std::vector<std::vector<Cell>> equations;

  static EquationSystem parse(const CommutationGraph& g,
                              const std::vector<std::string>& variables,
                              const std::vector<std::string>& equation_texts);
};

// A signed reference to an auxiliary variable z_k (1-based).
struct ZRef {
  int z = 0;
  int sign = 1;

  friend bool operator==(const ZRef& a, const ZRef& b) { return a.z == b.z && a.sign == b.sign; }
};

// The cancellation data of a system: per equation and cell the word V_ij in
// the z's, plus the auxiliary group on A u Z whose commutations reflect
// band crossings.
struct PartitionTable {
  std::vector<std::vector<std::vector<ZRef>>> v;  // [eq][cell] -> word in z
  int num_z = 0;
  CommutationGraph aux;                          // letters of A, then z_1..z_p
  std::vector<std::pair<int, int>> z_edges;      // commuting z pairs (i < j)
  std::vector<Word> z_values;                    // set when built from a solution

  bool valid(const EquationSystem& sys, std::string* why = nullptr) const;
};

struct TableEnumeration {
  std::vector<PartitionTable> tables;
  bool complete = true;
};

// All partition tables with at most `bound` auxiliary variables; the default
// bound is the paper's sum (l_i - 1) l_i.
TableEnumeration enumerate_partition_tables(const EquationSystem& sys, int bound = -1,
                                            size_t cap = 200000);

// The table realized by a solution, via greedy pairwise cancellation.
PartitionTable table_from_solution(const EquationSystem& sys, const std::vector<Word>& w);

// The generalised equation over the trace monoid associated to a table.
struct GeOverT {
  GeneralisedEquation ge;
  std::vector<ItemWord> witness;  // P_x per variable, word in the ge's items
  SolutionTuple induced;          // set when the table carries z values
};

GeOverT ge_over_t(const PartitionTable& table, const EquationSystem& sys);

// One occurrence's splitting inside a side: slots in occurrence order.
struct OccSplit {
  int item = 0;  // the geT item this occurrence refers to
  int sign = 1;
  std::vector<int> slots;  // distinct, 1-based; order = occurrence order
};

// A splitting choice for one side of the associated system.
struct SplitChoice {
  std::vector<OccSplit> occs;  // item occurrences only, in side order
  // Piece (pos, t) denotes occs[pos].slots[t]; rel pairs follow the two
  // disjoint-commutation patterns of the normal-form interleaving.
  std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>> rel;

  bool operator==(const SplitChoice& o) const;
};

// All splitting choices of a side with at most k_cap slots; max_pieces
// bounds the pieces per occurrence (0 = k_cap).
std::vector<SplitChoice> enumerate_split_choices(const GeneralisedEquation& geT,
                                                 const ItemWord& side, int k_cap,
                                                 int max_pieces = 0, size_t cap = 200000);

// The choice realized by a solution of the geT (aligning with dm_nf).
SplitChoice split_choice_from_solution(const GeneralisedEquation& geT, const ItemWord& side,
                                       const SolutionTuple& H);

// The generalised equation over the free monoid for a full tuple of choices
// (one per side of geT's associated system, sides in order lhs_1, rhs_1,
// lhs_2, rhs_2, ...).
struct GeOverF {
  GeneralisedEquation ge;
  std::vector<ItemWord> witness_item;  // P_{h'_j} per geT item, in geF items
  SolutionTuple induced;               // set when solution values are supplied
};

GeOverF ge_over_f(const GeOverT& geT, const std::vector<SplitChoice>& tuple,
                  const std::vector<std::vector<Word>>* piece_values = nullptr);

// Composition of the stages with full enumeration at desk scale.
struct ReducedOutput {
  GeneralisedEquation ge;               // over F
  std::vector<ItemWord> witness_x;      // per variable, in the ge's items
  std::vector<bool> trivial_vars;       // variables substituted by 1
};

struct ReduceResult {
  std::vector<ReducedOutput> outputs;
  bool complete = true;
};

struct ReduceBudget {
  int table_bound = -1;
  int k_cap = 0;  // 0 = max(3, longest side)
  size_t table_cap = 50000;
  size_t tuple_cap = 50000;
  bool allow_trivial_vars = true;
  // Window caps: with a solution window of length w, cells wider than w and
  // occurrences split into more than w nonempty pieces admit no in-window
  // solutions; 0 disables the cap.
  int max_cell_width = 0;
  int max_pieces = 0;
};

ReduceResult reduce_system(const EquationSystem& sys, const ReduceBudget& budget = {});

// Solution-guided tracing of the whole pipeline.
struct TraceResult {
  std::vector<bool> trivial_vars;
  PartitionTable table;
  GeOverT over_t;
  std::vector<SplitChoice> tuple;
  GeOverF over_f;
  std::vector<Word> p_image;  // P(H) per variable, trace-equal to the input
};

TraceResult trace_solution(const EquationSystem& sys, const std::vector<Word>& w);

}  // namespace pcmr
