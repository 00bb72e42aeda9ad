#pragma once

#include <limits>
#include <string>
#include <vector>

#include "pcmr/transforms.h"

namespace pcmr {

// Case classification (1-15), budget-bounded construction of the process
// tree, solution-guided path tracing, and prohibited-path detection.

struct Budget {
  int max_depth = 6;
  int max_nodes = 500;
  size_t properness_bound = 0;  // 0 disables bounded properness searches
  // Repetition thresholds for prohibited paths of types 7-10 and 12;
  // -1 selects the paper formula 2^(4 rho^2 (2^rho + 1)) + 1, saturated.
  long long rep_threshold_710 = -1;
  long long rep_threshold_12 = -1;
  long long s_value = 4;   // stand-in for the computable bound s(Omega)
  long long f1_value = 1;  // stand-in for the computable bound f_1
  int expand_branch_cap = 4096;
  bool unknown_properness_is_proper = false;  // Case 1 policy for "unknown"
};

long long rep_threshold_formula(int rho);

// Least applicable case for a formally consistent equation. The incoming
// edge's properness feeds Case 1.
int classify_case(const GeneralisedEquation& ge, Properness incoming,
                  const Budget& budget = {});

// Children of a non-leaf equation per its case recipe. Case 4/5 edges are
// auxiliary; Case 15.1 adds auxiliary children through the hat equation.
TransformOutcome expand(const GeneralisedEquation& ge, int tp, const Budget& budget);

struct ProcessNode {
  std::string id;  // path-encoded: "v0", "v0.2", ...
  GeneralisedEquation ge;
  int tp = 0;
  int parent = -1;
  WordMap edge_map;  // from parent
  EdgeKind edge_kind = EdgeKind::Principal;
  Properness edge_properness = Properness::Iso;
  std::string edge_label;
  std::vector<int> children;
  bool budget_cut = false;
};

struct ProcessTree {
  std::vector<ProcessNode> nodes;
  bool budget_exhausted = false;
};

// Preprocessing (all active sections moved to the left), then breadth-first
// expansion with deterministic child order.
ProcessTree build_tree(const GeneralisedEquation& ge, const Budget& budget);

struct TraceRecord {
  GeneralisedEquation ge;
  SolutionTuple solution;
  int tp = 0;
  int carrier = -1;                 // for tp >= 12 when defined
  std::vector<int> transfer_bases;  // carrier's transfer set
  bool principal = true;
  bool aux_available = false;  // Case 15.1 shape at this node
  std::string note;
};

// Solution-guided trace through the case recipes. At type-15 nodes whose
// carrier overlaps its dual, the periodicity cutoff routes the trace through
// the hat equation and freezes the periodic section as non-active.
std::vector<TraceRecord> trace_path(const GeneralisedEquation& ge, const SolutionTuple& H,
                                    const Budget& budget);

// Canonical relabeling of a generalised equation: equal hash iff equal up to
// base-id renaming.
struct CanonicalForm {
  std::string text;
  uint64_t hash = 0;
};
CanonicalForm canonical_form(const GeneralisedEquation& ge);

struct ProhibitedReport {
  bool found = false;
  std::string type;  // "7-10", "12", "15"
  size_t from = 0, to = 0;
  std::string detail;
};

// Earliest prohibited subpath per the type 7-10/12 repetition thresholds and
// the type-15 decomposition into eta-reducing segments.
ProhibitedReport detect_prohibited(const std::vector<TraceRecord>& path, const Budget& budget);

// A mu-reducing window starting at `start`: carriers all of type 15 and mu
// recurring often enough; returns one past the end when found.
std::optional<size_t> mu_reducing_end(const std::vector<TraceRecord>& path, size_t start,
                                      const Budget& budget);

}  // namespace pcmr
