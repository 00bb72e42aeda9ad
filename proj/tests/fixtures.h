#pragma once

// Shared test fixtures: the pentagon group and the quadratic generalised
// equation from the periodic-structure example, plus small helpers.

#include <random>

#include "pcmr/gen_eq.h"
#include "pcmr/group.h"

namespace pcmr::fixtures {

inline CommutationGraph pentagon() {
  return CommutationGraph::cycle({"a", "b", "c", "d", "e"});
}

// The quadratic generalised equation with associated system
//   h1 h2 h3 h4 = h4 h5 h6 h7;  h1 = h5;  h3 = h7;  h2 = h8;  h6 = h8;  h8 = a
// over the pentagon group. Sections: [1,9) split as active [1,8] and a
// constant section [8,9]. Base ids are fixed for test reference:
//   1/2  nu pair [1,5] / [4,8]
//   3/4  lambda1 pair [1,2] / [5,6]
//   5/6  lambda2 pair [2,3] / [8,9]
//   7/8  lambda3 pair [3,4] / [7,8]
//   9/10 lambda4 pair [6,7] / [8,9]
//   11   constant a at [8,9]
struct QuadraticExample {
  GeneralisedEquation ge;
  int nu = 1, nu_dual = 2;
  int lambda1 = 3, lambda3 = 7;
};

inline QuadraticExample quadratic_example() {
  QuadraticExample ex;
  GeneralisedEquation& ge = ex.ge;
  ge.graph = pentagon();
  ge.num_items = 8;
  auto add_pair = [&](int a1, int b1, int a2, int b2) {
    BaseRec mu, dm;
    mu.id = ge.fresh_base_id();
    dm.id = ge.fresh_base_id();
    mu.kind = dm.kind = BaseKind::Variable;
    mu.alpha = a1;
    mu.beta = b1;
    dm.alpha = a2;
    dm.beta = b2;
    mu.eps = dm.eps = 1;
    mu.dual = dm.id;
    dm.dual = mu.id;
    ge.bases.push_back(mu);
    ge.bases.push_back(dm);
  };
  add_pair(1, 5, 4, 8);  // nu
  add_pair(1, 2, 5, 6);  // lambda1
  add_pair(2, 3, 8, 9);  // lambda2
  add_pair(3, 4, 7, 8);  // lambda3
  add_pair(6, 7, 8, 9);  // lambda4
  BaseRec c;
  c.id = ge.fresh_base_id();
  c.kind = BaseKind::Constant;
  c.letter = Syllable(0, 1);  // a
  c.alpha = 8;
  c.beta = 9;
  ge.bases.push_back(c);
  ge.sections.push_back({1, 8, SectionTag::Active});
  ge.sections.push_back({8, 9, SectionTag::Constant});
  ge.validate();
  return ex;
}

// The solution H = ((bac)^2 b, a, (cba)^2 c, (bac)^6, (bac)^2 b, a, (cba)^2 c, a).
inline SolutionTuple quadratic_solution() {
  auto g = pentagon();
  SolutionTuple H;
  H.words = {g.parse_word("bacbacb"), g.parse_word("a"),      g.parse_word("cbacbac"),
             g.parse_word("bac").pow(6), g.parse_word("bacbacb"), g.parse_word("a"),
             g.parse_word("cbacbac"), g.parse_word("a")};
  return H;
}

inline Word rand_word(const CommutationGraph& g, std::mt19937& rng, size_t len) {
  std::uniform_int_distribution<int> letter(0, static_cast<int>(g.rank()) - 1);
  std::uniform_int_distribution<int> sign(0, 1);
  Word w;
  for (size_t i = 0; i < len; ++i) w.push_back(Syllable(letter(rng), sign(rng) ? 1 : -1));
  return w;
}

inline CommutationGraph rand_graph(std::mt19937& rng, size_t max_rank, size_t min_rank = 1) {
  std::uniform_int_distribution<size_t> rk(min_rank, max_rank);
  size_t r = rk(rng);
  std::vector<std::string> names;
  for (size_t i = 0; i < r; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  std::vector<std::pair<std::string, std::string>> edges;
  std::uniform_int_distribution<int> coin(0, 1);
  for (size_t i = 0; i < r; ++i)
    for (size_t j = i + 1; j < r; ++j)
      if (coin(rng)) edges.emplace_back(names[i], names[j]);
  return CommutationGraph(names, edges);
}

}  // namespace pcmr::fixtures
