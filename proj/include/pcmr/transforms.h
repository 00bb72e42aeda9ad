#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcmr/gen_eq.h"

namespace pcmr {

// Elementary transformations ET1-ET5 and derived transformations D1-D6.
// Each application yields a finite set of successor equations together with
// word maps and enough data to transport a solution through the unique
// admitting branch.

// Word map: assignment of every source item to a word over target items and
// constants, so that H_src(i) = eval(assign[i], H_tgt) graphically.
struct WordMap {
  int source_items = 0;
  int target_items = 0;
  std::vector<ItemWord> assign;  // index i-1 for source item i

  static WordMap identity(int items);
  SolutionTuple pull_back(const SolutionTuple& target) const;
};

// map_first applied to the source, then map_second: source -> final target.
WordMap compose(const WordMap& map_first, const WordMap& map_second);

// One mechanical step of solution transport.
struct TransportStep {
  enum class Kind { Identity, SplitItem, DeleteRange, Permute, MergeItem };
  Kind kind = Kind::Identity;
  // SplitItem: item splits into two; the split length is measured on the
  // pre-step solution: piece_len = |eval(len_a)| - |eval(len_b)|, taken from
  // the left by default and from the right when from_right is set.
  int item = 0;
  ItemWord len_a, len_b;
  bool from_right = false;
  // DeleteRange: items [from, to) removed (pre-step numbering).
  int from = 0, to = 0;
  // Permute: new_of_old[i-1] = position of old item i in the new tuple.
  std::vector<int> new_of_old;
};

SolutionTuple transport_apply(const TransportStep& step, const SolutionTuple& H);

enum class EdgeKind { Principal, Auxiliary };
enum class Properness { Iso = 0, Unknown = 1, Proper = 2 };

struct Branch {
  GeneralisedEquation ge;
  WordMap map;
  EdgeKind kind = EdgeKind::Principal;
  Properness properness = Properness::Iso;
  std::vector<TransportStep> transport;
  std::string label;
};

struct TransformOutcome {
  std::vector<Branch> branches;
};

// ET1: cutting the base mu (and its dual) at the boundary connection (p, mu, q).
TransformOutcome et1_cut(const GeneralisedEquation& ge, int p, int mu_id);

// ET2: transferring lambda from mu onto the dual of mu.
TransformOutcome et2_transfer(const GeneralisedEquation& ge, int lambda_id, int mu_id);

// ET3: removing a matched pair.
TransformOutcome et3_remove_matched(const GeneralisedEquation& ge, int mu_id);

// ET4: removing a linear base together with its closed span.
TransformOutcome et4_remove_linear(const GeneralisedEquation& ge, int mu_id);

// ET5: mu-tying the boundary p in all possible ways. properness_bound > 0
// runs a bounded search certifying proper branches.
TransformOutcome et5_tie(const GeneralisedEquation& ge, int p, int mu_id,
                         size_t properness_bound = 0);

// D1: closing the section [from, to].
TransformOutcome d1_close(const GeneralisedEquation& ge, int from, int to,
                          size_t properness_bound = 0);

// D2: transporting the closed section [from, to] to the front or back.
// Splits the stored partition at closed boundaries as needed.
TransformOutcome d2_to_front(const GeneralisedEquation& ge, int from, int to);
TransformOutcome d2_to_end(const GeneralisedEquation& ge, int from, int to,
                           SectionTag retag);

// D3: completing the cut (applying ET1 to all boundary connections). The
// result carries provenance: root_of[id] is the id, in the input equation,
// of the base an output base descends from.
struct CutCompletion {
  GeneralisedEquation ge;
  WordMap map;
  std::map<int, int> root_of;
};
CutCompletion d3_complete_cut(const GeneralisedEquation& ge);

// D4: the kernel. Input is made connection-free first.
struct Elimination {
  int base_id = 0;
  int dual_id = 0;
  char case_tag = 'a';
  std::string relation;  // h_i = w_mu, for reporting
};
struct KernelResult {
  GeneralisedEquation kernel;
  std::vector<Elimination> log;
  std::vector<int> free_items;            // items (1-based) outside the kernel
  std::vector<std::string> commutators;   // the symbolic set K
  std::vector<int> elimination_order;     // base ids in removal order
};
KernelResult d4_kernel(const GeneralisedEquation& ge,
                       const std::vector<int>& preferred_order = {});

bool item_in_kernel(const KernelResult& k, int item);

// D5: the entire transformation. Requires gamma >= 2 on all active items.
// forced_carrier selects the carrier base (Case 13); -1 picks the
// beta-maximal leading base with least id.
TransformOutcome d5_entire(const GeneralisedEquation& ge, size_t properness_bound = 0,
                           int forced_carrier = -1);

// Carrier/transfer structure used by D5 and by path analyses.
struct CarrierInfo {
  int carrier = -1;
  std::vector<int> transfer_bases;
};
std::optional<CarrierInfo> carrier_info(const GeneralisedEquation& ge, int forced_carrier = -1);

// D6: identifying the closed constant sections [i, i+1] and [j, j+1] carrying
// equally-labelled constant bases c1 (at i) and c2 (at j).
TransformOutcome d6_identify_constants(const GeneralisedEquation& ge, int c1_id, int c2_id);

// Applies a transform outcome to a solution: finds the unique branch whose
// transported solution checks, returns its index with the new solution.
std::pair<size_t, SolutionTuple> apply_to_solution(const TransformOutcome& outcome,
                                                   const GeneralisedEquation& src,
                                                   const SolutionTuple& H);

// Composition engine for case recipes: each step maps an equation to an
// outcome; branches multiply.
using Step = std::function<TransformOutcome(const GeneralisedEquation&)>;
TransformOutcome compose_steps(const GeneralisedEquation& start, const std::vector<Step>& steps);

// Bounded solver for the relaxed system Omega^* (group-level equalities,
// constraints as plain commutators): all assignments with geodesic components
// of length <= max_len, empty allowed. Throws budget_error past the cap.
std::vector<SolutionTuple> solve_relaxed_bounded(const GeneralisedEquation& ge, size_t max_len,
                                                 size_t cap = 200000);

// Splits stored sections at interior closed boundaries so every stored
// section is closed in the paper's sense.
void normalize_sections(GeneralisedEquation& ge);

// Inserts a new boundary inside item q (between boundaries q and q+1);
// renumbers, duplicates Re of the split item onto both halves.
void insert_boundary(GeneralisedEquation& ge, int q);

}  // namespace pcmr
