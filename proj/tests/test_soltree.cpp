#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.h"
#include "pcmr/soltree.h"

using namespace pcmr;
using namespace pcmr::fixtures;

namespace {

CommutationGraph path4() { return CommutationGraph::path({"a", "b", "c", "d"}); }

// The coefficient-only leaf of the solution-tree example: items h1..h6 with
// h5 = a, h6 = `last`, and the six commutation constraints.
GeneralisedEquation soltree_leaf(const std::string& last) {
  auto g = path4();
  GeneralisedEquation ge;
  ge.graph = g;
  ge.num_items = 6;
  BaseRec c1, c2;
  c1.id = 1;
  c2.id = 2;
  c1.kind = c2.kind = BaseKind::Constant;
  c1.letter = Syllable(g.letter_index("a"), 1);
  c2.letter = Syllable(g.letter_index(last), 1);
  c1.alpha = 5;
  c1.beta = 6;
  c2.alpha = 6;
  c2.beta = 7;
  ge.bases = {c1, c2};
  for (int i = 1; i <= 6; ++i) ge.sections.push_back({i, i + 1, SectionTag::Constant});
  ge.constraints = {{1, 2}, {2, 3}, {3, 4}, {1, 4}, {1, 5}, {4, 6}};
  ge.validate();
  return ge;
}

uint64_t mask(const CommutationGraph& g, const std::string& letters) {
  uint64_t m = 0;
  for (char c : letters) m |= uint64_t{1} << g.letter_index(std::string(1, c));
  return m;
}

}  // namespace

TEST_CASE("parabolic graph basics") {
  auto g = path4();
  CHECK(parabolic_edge(g, mask(g, "a"), mask(g, "b")));
  CHECK_FALSE(parabolic_edge(g, mask(g, "a"), mask(g, "c")));
  CHECK_FALSE(parabolic_edge(g, mask(g, "a"), mask(g, "ab")));  // not disjoint
  CHECK(parabolic_edge(g, 0, mask(g, "a")));                    // empty vertex convention
  CHECK(parabolic_edge(g, mask(g, "ac"), mask(g, "b")));

  auto pent = pentagon();
  auto dig = build_digamma(pent);
  CHECK(dig.vertices.size() == 32);
  CHECK_THROWS_AS(build_digamma(CommutationGraph::free_group({"a", "b", "c", "d", "e", "f",
                                                              "g", "h", "i"})),
                  input_error);
}

TEST_CASE("constraint graph of the example leaf") {
  auto ge = soltree_leaf("b");
  auto pi = build_pi(ge);
  CHECK(pi.item_vertices == std::vector<int>{1, 2, 3, 4});
  std::set<std::pair<int, int>> expect_items{{1, 2}, {2, 3}, {3, 4}, {1, 4}};
  CHECK(pi.item_item == expect_items);
  auto g = path4();
  std::set<std::pair<int, int>> expect_letters{{1, g.letter_index("a")},
                                               {4, g.letter_index("b")}};
  CHECK(pi.item_letter == expect_letters);

  // Variable bases forbid the construction.
  auto ex = quadratic_example();
  CHECK_THROWS_AS(build_pi(ex.ge), input_error);
}

TEST_CASE("the example leaf has exactly the 11 homomorphisms of the table") {
  auto g = path4();
  auto ge = soltree_leaf("b");
  auto pi = build_pi(ge);
  auto homs = enumerate_homs(pi, g);
  REQUIRE(homs.size() == 11);

  std::set<std::vector<uint64_t>> got;
  for (const auto& h : homs) got.insert(h.image);
  auto expect_one = [&](const std::string& h1, const std::string& h2, const std::string& h3,
                        const std::string& h4) {
    return std::vector<uint64_t>{mask(g, h1), mask(g, h2), mask(g, h3), mask(g, h4)};
  };
  std::set<std::vector<uint64_t>> expect{
      expect_one("b", "a", "b", "a"),  expect_one("b", "a", "b", "ac"),
      expect_one("b", "a", "b", "c"),  expect_one("b", "ac", "b", "a"),
      expect_one("b", "ac", "b", "ac"), expect_one("b", "ac", "b", "c"),
      expect_one("b", "c", "b", "a"),  expect_one("b", "c", "b", "ac"),
      expect_one("b", "c", "b", "c"),  expect_one("b", "c", "bd", "c"),
      expect_one("b", "c", "d", "c"),
  };
  CHECK(got == expect);
}

TEST_CASE("leaf group of phi_v6 matches the displayed presentation") {
  auto g = path4();
  auto ge = soltree_leaf("b");
  auto pi = build_pi(ge);
  // phi_v6: h1 -> b, h2 -> {a,c}, h3 -> b, h4 -> c.
  ParabolicHom hom;
  hom.image = {mask(g, "b"), mask(g, "ac"), mask(g, "b"), mask(g, "c")};
  auto leaf = leaf_group(hom, pi, g);

  auto rels = leaf.relator_strings();
  std::vector<std::string> expect{
      "[a, h1]", "[a, h3]", "[b, h1]", "[b, h2]", "[b, h3]", "[b, h4]",
      "[c, h1]", "[c, h3]", "[c, h4]", "[d, h4]", "[h1, h2]", "[h1, h3]",
      "[h1, h4]", "[h2, h3]", "[h3, h4]",
  };
  std::sort(expect.begin(), expect.end());
  CHECK(rels == expect);

  // The flattened presentation is a genuine commutation graph.
  auto flat = leaf.flattened();
  CHECK(flat.rank() == 8);
}

TEST_CASE("degenerate empty image maps to a free factor") {
  auto g = path4();
  auto ge = soltree_leaf("b");
  auto pi = build_pi(ge);
  auto homs = enumerate_homs(pi, g, true);
  CHECK(homs.size() > 11);
  ParabolicHom hom;
  hom.image = {0, mask(g, "ac"), mask(g, "b"), mask(g, "c")};
  auto leaf = leaf_group(hom, pi, g);
  // The h1 generator commutes with nothing.
  for (const auto& gen : leaf.generators)
    if (gen.item == 1) CHECK(gen.parabolic == 0);
  for (auto [a, gi] : leaf.letter_generator) {
    (void)a;
    CHECK(leaf.generators[gi].item != 1);
  }
}

TEST_CASE("discrimination probe: the non-discriminable pair") {
  // First example: h5 = a, h6 = c; no substitution keeps both [h1,h3] and
  // [h2,h4] nontrivial.
  auto ge = soltree_leaf("c");
  auto pi = build_pi(ge);
  std::vector<ItemWord> elements{
      {ItemRef{1, 1}, ItemRef{3, 1}, ItemRef{1, -1}, ItemRef{3, -1}},
      {ItemRef{2, 1}, ItemRef{4, 1}, ItemRef{2, -1}, ItemRef{4, -1}},
  };
  auto res = discrimination_probe(pi, path4(), elements, 3);
  CHECK_FALSE(res.found);
  CHECK(res.tried > 0);
}

TEST_CASE("discrimination probe finds single commutator witnesses") {
  // Either commutator alone is realizable: h1=a, h2=b, h3=c, h4=b works in
  // the paper's first psi.
  auto ge = soltree_leaf("c");
  auto pi = build_pi(ge);
  std::vector<ItemWord> one{
      {ItemRef{1, 1}, ItemRef{3, 1}, ItemRef{1, -1}, ItemRef{3, -1}},
  };
  auto res = discrimination_probe(pi, path4(), one, 2);
  CHECK(res.found);
  // Certify: re-evaluate the commutator under the found assignment.
  auto g = path4();
  std::map<int, Word> val;
  for (size_t k = 0; k < pi.item_vertices.size(); ++k) val[pi.item_vertices[k]] = res.assignment[k];
  Word c = val[1] * val[3] * val[1].inverse() * val[3].inverse();
  CHECK_FALSE(reduce(g, c).empty());

  std::vector<ItemWord> empty_set;
  CHECK(discrimination_probe(pi, path4(), empty_set, 1).found);
}
