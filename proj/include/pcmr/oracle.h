#pragma once

#include <set>
#include <vector>

#include "pcmr/graph.h"
#include "pcmr/word.h"

namespace pcmr {

// Independent brute-force references for tests and acceptance runs. Each
// search raises budget_error rather than silently truncating.
namespace oracle {

struct SearchBounds {
  size_t max_word_len = 4;
  size_t node_cap = 2'000'000;
};

// True geodesic length by BFS over free cancellations and commuting swaps.
size_t bfs_geodesic_length(const CommutationGraph& g, const Word& w,
                           size_t node_cap = 2'000'000);

// Full swap-closure of w (commuting adjacent transpositions only).
std::set<Word> swap_closure_trace_class(const CommutationGraph& g, const Word& w,
                                        size_t node_cap = 2'000'000);

// All geodesic words of length <= max_len, in deterministic order.
std::vector<Word> all_geodesics(const CommutationGraph& g, size_t max_len,
                                size_t node_cap = 2'000'000);

// Exhaustive centraliser elements of w up to length bound.
std::vector<Word> brute_centraliser(const CommutationGraph& g, const Word& w,
                                    const SearchBounds& bounds);

// A system of equations over the group: each equation is a list of cells,
// each cell a variable occurrence (index, sign) or a constant word.
struct EqCell {
  bool is_var = false;
  int var = -1;
  int sign = 1;
  Word constant;
};
using GroupEquation = std::vector<EqCell>;  // product of cells = 1

// All tuples (one word per variable, possibly empty, all geodesic) up to the
// length bound solving every equation.
std::vector<std::vector<Word>> brute_solutions(const CommutationGraph& g,
                                               const std::vector<GroupEquation>& system,
                                               size_t num_vars, const SearchBounds& bounds);

}  // namespace oracle
}  // namespace pcmr
