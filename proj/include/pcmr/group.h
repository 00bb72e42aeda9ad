#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "pcmr/graph.h"
#include "pcmr/word.h"

namespace pcmr {

// Exact algorithms over the partially commutative group defined by a
// commutation graph: geodesic reduction, normal forms, divisibility,
// centralisers, roots and big-power substitutions. All operations are pure.

// A geodesic word that is lexicographically least among all geodesics of its
// group element; canonical representative of the element.
struct GroupElement {
  Word canonical;

  friend bool operator==(const GroupElement& a, const GroupElement& b) {
    return a.canonical == b.canonical;
  }
  friend bool operator<(const GroupElement& a, const GroupElement& b) {
    return a.canonical < b.canonical;
  }
};

// Geodesic reduction by leftmost-cancellable-pair rewriting.
Word reduce(const CommutationGraph& g, const Word& w);

// True iff w contains no cancellable pair (w is geodesic as written).
bool is_geodesic(const CommutationGraph& g, const Word& w);

// Lexicographic normal form; a complete invariant of the group element.
GroupElement lex_nf(const CommutationGraph& g, const Word& w);

// True iff u and v represent the same group element.
bool group_equal(const CommutationGraph& g, const Word& u, const Word& v);

// az(w): letters occurring in a geodesic of w (independent of the geodesic).
std::set<int> alphabet_of(const CommutationGraph& g, const Word& w);

// Generators of A(w): letters not in az(w) commuting with every letter of az(w).
std::set<int> a_set(const CommutationGraph& g, const Word& w);

// Disjoint commutation u <-> v: [u,v]=1 and az(u) and az(v) disjoint.
bool disjoint_commute(const CommutationGraph& g, const Word& u, const Word& v);

// u left-divides w: some geodesic of w starts with (a geodesic of) u.
// Both inputs must be geodesic.
bool left_divides(const CommutationGraph& g, const Word& u, const Word& w);
bool right_divides(const CommutationGraph& g, const Word& u, const Word& w);

// Greatest common left divisor d of u^-1 and v, so that uv reduces to
// u1 v2 with u = u1 d^-1 and v = d v2. Inputs must be geodesic.
Word cancellation_divisor(const CommutationGraph& g, const Word& u, const Word& v);

// w = conjugator^-1 . core . conjugator with core cyclically reduced.
std::pair<Word, Word> cyclic_reduce(const CommutationGraph& g, const Word& w);

bool is_cyclically_reduced(const CommutationGraph& g, const Word& w);

// Pairwise disjointly-commuting blocks, each with connected non-commutation
// graph on its support; their product is w. Input must be geodesic.
std::vector<Word> block_decomposition(const CommutationGraph& g, const Word& w);

bool is_block(const CommutationGraph& g, const Word& w);

// Least root: w = root(w)^m with root(w) not a proper power; returns (root, m).
std::pair<Word, int> root(const CommutationGraph& g, const Word& w);

// Generators of the centraliser C(w): block roots of the cyclically reduced
// core plus the A(core) letters, conjugated back.
std::vector<Word> centraliser_generators(const CommutationGraph& g, const Word& w);

// A word over the alphabet extended by one variable symbol x.
struct XWord {
  struct Tok {
    bool is_x = false;
    int x_sign = 1;  // when is_x
    Syllable syl;    // when !is_x
  };
  std::vector<Tok> toks;

  static XWord x(int sign = 1) {
    XWord w;
    w.toks.push_back({true, sign, {}});
    return w;
  }
  void push_const(Syllable s) { toks.push_back({false, 1, s}); }
  void push_x(int sign) { toks.push_back({true, sign, {}}); }
  void append_const(const Word& w) {
    for (size_t i = 0; i < w.size(); ++i) push_const(w[i]);
  }
};

// Value of w under x -> b^n, reduced. b must be a cyclically reduced block.
Word big_power_substitute(const CommutationGraph& g, const XWord& w, const Word& b, int n);

}  // namespace pcmr
