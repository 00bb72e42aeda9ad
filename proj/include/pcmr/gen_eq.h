#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "pcmr/graph.h"
#include "pcmr/word.h"

namespace pcmr {

// The constrained generalised equation data model: boundaries, bases with
// duals, boundary connections, the disjoint-commutation constraint relation
// Re on items, and an explicit section partition.

enum class BaseKind { Variable, Constant };

struct BaseRec {
  int id = 0;
  BaseKind kind = BaseKind::Variable;
  Syllable letter;  // constant bases only
  int alpha = 0;    // left boundary, 1-based
  int beta = 0;     // right boundary; constant => beta == alpha + 1
  int eps = 1;      // orientation, variable bases only
  int dual = -1;    // id of the dual base, variable bases only
  int parent = -1;  // provenance: id of the base this one was cut from
};

enum class SectionTag { Active, NonActive, Constant };

struct Section {
  int from = 0;
  int to = 0;
  SectionTag tag = SectionTag::Active;
};

// A term of a word over items and constants.
struct ItemRef {
  int item = 0;  // 1-based
  int sign = 1;
};
using Term = std::variant<ItemRef, Syllable>;
using ItemWord = std::vector<Term>;

ItemWord item_word_inverse(const ItemWord& w);
ItemWord item_word_concat(const ItemWord& a, const ItemWord& b);
bool operator==(const ItemRef& a, const ItemRef& b);

enum class EquationKind { Basic, Coefficient, Boundary };

struct Equation {
  EquationKind kind = EquationKind::Basic;
  ItemWord lhs, rhs;
};

struct BoundaryConnection {
  int p = 0;
  int base = 0;  // id of mu; the symmetric triple (q, dual, p) is implicit
  int q = 0;
};

class GeneralisedEquation {
 public:
  CommutationGraph graph;
  int num_items = 0;  // items h_1..h_rho, boundaries 1..rho+1
  std::vector<BaseRec> bases;
  std::vector<BoundaryConnection> connections;  // stored once per pair; see below
  std::set<std::pair<int, int>> constraints;    // Re, stored with i < j
  std::vector<Section> sections;
  int next_base_id = 1;

  int rho() const { return num_items; }
  const BaseRec& base(int id) const;
  BaseRec& base(int id);
  bool has_base(int id) const;
  const BaseRec& dual(const BaseRec& b) const { return base(b.dual); }

  int fresh_base_id() { return next_base_id++; }

  // Structure queries.
  bool boundary_intersects(int i, const BaseRec& b) const { return b.alpha < i && i < b.beta; }
  bool boundary_touches(int i, const BaseRec& b) const { return i == b.alpha || i == b.beta; }
  bool boundary_open(int i) const;
  bool is_boundary_tied(int i, int base_id) const;
  bool is_boundary_tied(int i) const;
  bool boundary_free(int i) const;
  bool item_in_base(int i, const BaseRec& b) const { return b.alpha <= i && i <= b.beta - 1; }
  int gamma(int item) const;
  bool item_free(int item) const { return gamma(item) == 0; }
  bool item_constant(int item) const;
  bool matched_pair(const BaseRec& b) const;
  std::optional<int> connection_of(int p, int base_id) const;  // returns q

  const Section& section_of_base(const BaseRec& b) const;
  const Section& section_of_item(int item) const;
  bool base_active(const BaseRec& b) const {
    return section_of_base(b).tag == SectionTag::Active;
  }
  bool item_active(int item) const {
    return section_of_item(item).tag == SectionTag::Active;
  }
  bool section_closed(int from, int to) const;

  // First boundary of the non-active part when the equation is in standard
  // form (all active sections precede all others); rho+1 if all active.
  int rho_a() const;

  ItemWord h_interval(int from, int to, int sign = 1) const;  // h_from .. h_{to-1}
  ItemWord h_of_base(const BaseRec& b) const;                 // with eps applied

  void add_connection(int p, int mu, int q);
  void remove_connections_of(int base_id);

  void validate() const;  // invariants; throws internal_error
};

// The associated system: basic equations per dual pair, coefficient equations
// per constant base, boundary equations per connection.
std::vector<Equation> associated_system(const GeneralisedEquation& ge);

// Least symmetric superset of `seed` closed under the (star) condition with
// respect to the given equations.
std::set<std::pair<int, int>> star_close(std::set<std::pair<int, int>> seed,
                                         const std::vector<Equation>& equations);

void star_close_constraints(GeneralisedEquation& ge);

struct ConsistencyReport {
  bool ok = true;
  int condition = 0;  // 1..6 when violated
  std::string detail;
};

ConsistencyReport is_formally_consistent(const GeneralisedEquation& ge);

// A solution tuple: one non-empty geodesic word per item.
struct SolutionTuple {
  std::vector<Word> words;  // indexed 0..rho-1 for items 1..rho

  size_t total_length() const;
  const Word& of(int item) const { return words.at(item - 1); }
};

enum class SolutionMonoid { F, T };

struct SolutionCheck {
  bool ok = true;
  std::string failure;
};

Word eval_item_word(const ItemWord& w, const SolutionTuple& H);

SolutionCheck check_solution(const GeneralisedEquation& ge, const SolutionTuple& H,
                             SolutionMonoid monoid);

// Structural metrics of a generalised equation.
struct Metrics {
  std::vector<int> gamma;  // per item, 1-based at index item-1
  int n_active_bases = 0;  // n_A
  int open_boundaries_active = 0;  // xi
  int complexity = 0;              // comp
  int quadratic_part_end = 1;      // boundary j+1: [1, j+1] is the quadratic part
  bool standard_form = false;
  int rho_a = 1;
};

Metrics metrics(const GeneralisedEquation& ge);

// Excess of a solution: total base-covered length over the active part minus
// twice the active length.
struct Excess {
  long long d_active = 0;
  long long psi = 0;
};

Excess excess(const GeneralisedEquation& ge, const SolutionTuple& H);

// Construction of a combinatorial generalised equation from a system of
// equations over a monoid (sides are words over variables and constants).
struct MonoidSystem {
  CommutationGraph graph;
  int num_vars = 0;
  // Each equation: lhs = rhs, both words over variables (1-based ItemRef
  // indices denote variables here) and constants.
  std::vector<Equation> equations;
  // Optional constraint relation on variables.
  std::set<std::pair<int, int>> var_constraints;
};

struct GeFromSystemResult {
  GeneralisedEquation ge;
  // Item index of the first occurrence of each variable (1-based) and its sign.
  std::vector<ItemRef> var_occurrence;
};

GeFromSystemResult ge_from_system(const MonoidSystem& system);

// Renumbering helper (Remark on boundary re-enumeration): deletes the
// half-open boundary range [from, to) together with its items, shifting
// everything to the right of it; connections and constraints transported.
void collapse_boundary_range(GeneralisedEquation& ge, int from, int to);

std::string print_item_word(const GeneralisedEquation& ge, const ItemWord& w);
std::string print_equation(const GeneralisedEquation& ge, const Equation& e);

// All solutions with components of length <= max_len (desk scale). Uses
// sign-aware union-find over single-item basic equations, then backtracking
// over class representatives. Throws budget_error past the cap.
std::vector<SolutionTuple> bounded_solutions(const GeneralisedEquation& ge,
                                             SolutionMonoid monoid, size_t max_len,
                                             size_t cap = 500000);

}  // namespace pcmr
