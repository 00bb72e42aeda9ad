#include "pcmr/soltree.h"

#include <algorithm>
#include <functional>

#include "pcmr/group.h"
#include "pcmr/oracle.h"

namespace pcmr {

bool parabolic_edge(const CommutationGraph& g, uint64_t s1, uint64_t s2) {
  if (s1 & s2) return false;
  if (s1 == 0 && s2 == 0) return false;  // no loop at the empty vertex
  for (size_t x = 0; x < g.rank(); ++x) {
    if (!((s1 >> x) & 1)) continue;
    for (size_t y = 0; y < g.rank(); ++y) {
      if (!((s2 >> y) & 1)) continue;
      if (!g.commutes(static_cast<int>(x), static_cast<int>(y))) return false;
    }
  }
  return true;
}

ParabolicGraph build_digamma(const CommutationGraph& g, size_t rank_cap) {
  if (g.rank() > rank_cap) throw input_error("build_digamma: rank exceeds the cap");
  ParabolicGraph out;
  out.graph = g;
  for (uint64_t s = 0; s < (uint64_t{1} << g.rank()); ++s) out.vertices.push_back(s);
  return out;
}

ConstraintGraph build_pi(const GeneralisedEquation& ge) {
  for (const auto& b : ge.bases)
    if (b.kind == BaseKind::Variable)
      throw input_error("build_pi: equation still has variable bases");
  ConstraintGraph pi;
  pi.graph = ge.graph;
  // Coefficient letters per item.
  std::map<int, int> coeff;  // item -> letter
  for (const auto& b : ge.bases)
    if (b.kind == BaseKind::Constant) coeff[b.alpha] = b.letter.letter;
  for (int i = 1; i <= ge.num_items; ++i)
    if (!coeff.count(i)) pi.item_vertices.push_back(i);
  for (auto [i, j] : ge.constraints) {
    bool ci = coeff.count(i), cj = coeff.count(j);
    if (!ci && !cj) {
      pi.item_item.insert({std::min(i, j), std::max(i, j)});
    } else if (ci != cj) {
      int item = ci ? j : i;
      int letter = coeff.at(ci ? i : j);
      pi.item_letter.insert({item, letter});
    }
  }
  return pi;
}

std::vector<ParabolicHom> enumerate_homs(const ConstraintGraph& pi, const CommutationGraph& g,
                                         bool allow_empty) {
  std::vector<ParabolicHom> out;
  size_t n = pi.item_vertices.size();
  std::vector<uint64_t> image(n, 0);
  std::map<int, size_t> slot;
  for (size_t i = 0; i < n; ++i) slot[pi.item_vertices[i]] = i;

  std::function<void(size_t)> rec = [&](size_t k) {
    if (k == n) {
      out.push_back(ParabolicHom{image});
      return;
    }
    int item = pi.item_vertices[k];
    uint64_t lo = allow_empty ? 0 : 1;
    for (uint64_t s = lo; s < (uint64_t{1} << g.rank()); ++s) {
      bool ok = true;
      for (const auto& [it, letter] : pi.item_letter)
        if (it == item && !parabolic_edge(g, s, uint64_t{1} << letter)) ok = false;
      for (const auto& [i, j] : pi.item_item) {
        if (!ok) break;
        int other = i == item ? j : (j == item ? i : -1);
        if (other < 0) continue;
        size_t os = slot.at(other);
        if (os < k && !parabolic_edge(g, s, image[os])) ok = false;
      }
      if (!ok) continue;
      image[k] = s;
      rec(k + 1);
    }
  };
  rec(0);
  return out;
}

namespace {

// Connected components of the non-commutation graph restricted to a subset,
// ordered by least letter.
std::vector<uint64_t> delta_components(const CommutationGraph& g, uint64_t s) {
  std::vector<uint64_t> out;
  uint64_t left = s;
  while (left) {
    int seed = __builtin_ctzll(left);
    uint64_t comp = uint64_t{1} << seed;
    for (;;) {
      uint64_t grown = comp;
      for (size_t x = 0; x < g.rank(); ++x) {
        if (!((s >> x) & 1) || ((comp >> x) & 1)) continue;
        for (size_t y = 0; y < g.rank(); ++y)
          if (((comp >> y) & 1) && x != y && !g.commutes(static_cast<int>(x), static_cast<int>(y)))
            grown |= uint64_t{1} << x;
      }
      if (grown == comp) break;
      comp = grown;
    }
    out.push_back(comp);
    left &= ~comp;
  }
  std::sort(out.begin(), out.end(),
            [](uint64_t a, uint64_t b) { return __builtin_ctzll(a) < __builtin_ctzll(b); });
  return out;
}

bool factor_abelian(const CommutationGraph& g, uint64_t comp) {
  for (size_t x = 0; x < g.rank(); ++x) {
    if (!((comp >> x) & 1)) continue;
    for (size_t y = x + 1; y < g.rank(); ++y)
      if (((comp >> y) & 1) && !g.commutes(static_cast<int>(x), static_cast<int>(y))) return false;
  }
  return true;
}

bool letter_centralises(const CommutationGraph& g, int a, uint64_t comp) {
  for (size_t y = 0; y < g.rank(); ++y) {
    if (!((comp >> y) & 1)) continue;
    if (static_cast<int>(y) == a) continue;
    if (!g.commutes(a, static_cast<int>(y))) return false;
  }
  // A member letter must commute with the whole factor including itself,
  // which holds automatically; non-members need all pairs.
  return true;
}

}  // namespace

LeafGroupPresentation leaf_group(const ParabolicHom& hom, const ConstraintGraph& pi,
                                 const CommutationGraph& g) {
  LeafGroupPresentation out;
  out.graph = g;

  // Generators: components per item.
  for (size_t k = 0; k < pi.item_vertices.size(); ++k) {
    uint64_t s = hom.image[k];
    std::vector<uint64_t> comps = s == 0 ? std::vector<uint64_t>{0} : delta_components(g, s);
    for (size_t l = 0; l < comps.size(); ++l) {
      LeafGroupPresentation::Generator gen;
      gen.item = pi.item_vertices[k];
      gen.component = static_cast<int>(l) + 1;
      gen.parabolic = comps[l];
      gen.abelian_factor = comps[l] != 0 && factor_abelian(g, comps[l]);
      gen.name = "h" + std::to_string(gen.item) +
                 (comps.size() > 1 ? "." + std::to_string(l + 1) : "");
      out.generators.push_back(gen);
    }
  }

  for (auto [a, b] : g.edges()) out.letter_letter.insert({a, b});

  // Letter-generator edges: the centraliser of the generator's direct factor.
  for (size_t gi = 0; gi < out.generators.size(); ++gi) {
    const auto& gen = out.generators[gi];
    if (gen.parabolic == 0) continue;  // degenerate free factor
    for (size_t a = 0; a < g.rank(); ++a)
      if (letter_centralises(g, static_cast<int>(a), gen.parabolic) &&
          !((gen.parabolic >> a) & 1 && !gen.abelian_factor))
        out.letter_generator.insert({static_cast<int>(a), static_cast<int>(gi)});
  }

  // Generator-generator edges.
  std::map<int, uint64_t> vertex_of_item;
  for (size_t k = 0; k < pi.item_vertices.size(); ++k)
    vertex_of_item[pi.item_vertices[k]] = hom.image[k];
  for (size_t a = 0; a < out.generators.size(); ++a)
    for (size_t b = a + 1; b < out.generators.size(); ++b) {
      const auto& ga = out.generators[a];
      const auto& gb = out.generators[b];
      if (ga.parabolic == 0 || gb.parabolic == 0) continue;
      uint64_t sa = vertex_of_item[ga.item];
      uint64_t sb = vertex_of_item[gb.item];
      bool edge;
      if (sa == sb) {
        if (ga.parabolic != gb.parabolic)
          edge = true;  // distinct direct factors of one vertex group
        else
          edge = ga.abelian_factor;  // free abelian on the items
      } else {
        edge = parabolic_edge(g, sa, sb);
      }
      if (edge) out.generator_generator.insert({static_cast<int>(a), static_cast<int>(b)});
    }
  return out;
}

CommutationGraph LeafGroupPresentation::flattened() const {
  std::vector<std::string> names = graph.letters();
  for (const auto& gen : generators) names.push_back(gen.name);
  std::vector<std::pair<std::string, std::string>> edges;
  for (auto [a, b] : letter_letter) edges.emplace_back(graph.letter_name(a), graph.letter_name(b));
  for (auto [a, gi] : letter_generator)
    edges.emplace_back(graph.letter_name(a), generators[gi].name);
  for (auto [a, b] : generator_generator)
    edges.emplace_back(generators[a].name, generators[b].name);
  return CommutationGraph(names, edges);
}

std::vector<std::string> LeafGroupPresentation::relator_strings() const {
  std::vector<std::string> out;
  for (auto [a, gi] : letter_generator)
    out.push_back("[" + graph.letter_name(a) + ", " + generators[gi].name + "]");
  for (auto [a, b] : generator_generator)
    out.push_back("[" + generators[a].name + ", " + generators[b].name + "]");
  std::sort(out.begin(), out.end());
  return out;
}

ProbeResult discrimination_probe(const ConstraintGraph& pi, const CommutationGraph& g,
                                 const std::vector<ItemWord>& elements, size_t max_len,
                                 size_t cap) {
  ProbeResult res;
  size_t n = pi.item_vertices.size();
  std::map<int, size_t> slot;
  for (size_t i = 0; i < n; ++i) slot[pi.item_vertices[i]] = i;


  // Per-item candidate alphabets from the letter constraints.
  std::vector<std::vector<Word>> candidates(n);
  for (size_t k = 0; k < n; ++k) {
    uint64_t allowed = (uint64_t{1} << g.rank()) - 1;
    for (const auto& [item, letter] : pi.item_letter) {
      if (item != pi.item_vertices[k]) continue;
      uint64_t cent = 0;
      for (size_t x = 0; x < g.rank(); ++x)
        if (static_cast<int>(x) == letter || g.commutes(static_cast<int>(x), letter))
          cent |= uint64_t{1} << x;
      allowed &= cent;
    }
    candidates[k].push_back(Word());
    for (const Word& w : oracle::all_geodesics(g, max_len, cap)) {
      bool ok = !w.empty();
      for (size_t i = 0; i < w.size() && ok; ++i)
        if (!((allowed >> w[i].letter) & 1)) ok = false;
      if (ok) candidates[k].push_back(w);
    }
  }

  std::vector<Word> cur(n);
  auto eval_elem = [&](const ItemWord& e) {
    Word out;
    for (const Term& t : e) {
      if (std::holds_alternative<Syllable>(t)) {
        out.push_back(std::get<Syllable>(t));
        continue;
      }
      ItemRef r = std::get<ItemRef>(t);
      auto it = slot.find(r.item);
      if (it == slot.end()) throw input_error("probe element references a coefficient item");
      const Word& v = cur[it->second];
      out.append(r.sign > 0 ? v : v.inverse());
    }
    return out;
  };
  auto elem_max_slot = [&](const ItemWord& e) {
    size_t m = 0;
    for (const Term& t : e)
      if (std::holds_alternative<ItemRef>(t)) m = std::max(m, slot.at(std::get<ItemRef>(t).item));
    return m;
  };
  std::vector<std::vector<const ItemWord*>> elem_ready(n + 1);
  for (const auto& e : elements) elem_ready[elem_max_slot(e) + 1].push_back(&e);

  std::function<bool(size_t)> rec = [&](size_t k) -> bool {
    if (++res.tried > cap) throw budget_error("discrimination_probe: cap exceeded");
    if (k == n) return true;
    for (const Word& v : candidates[k]) {
      cur[k] = v;
      bool ok = true;
      // Commutation constraints among assigned items.
      for (const auto& [i, j] : pi.item_item) {
        size_t si = slot.at(i), sj = slot.at(j);
        if (std::max(si, sj) != k) continue;
        const Word& a = cur[si];
        const Word& b = cur[sj];
        if (!group_equal(g, a * b, b * a)) {
          ok = false;
          break;
        }
      }
      // Letter constraints for this item.
      if (ok)
        for (const auto& [item, letter] : pi.item_letter) {
          if (slot.at(item) != k) continue;
          Word a = Word::letter(letter);
          if (!group_equal(g, cur[k] * a, a * cur[k])) {
            ok = false;
            break;
          }
        }
      // Elements fully assigned at this depth must stay nontrivial.
      if (ok)
        for (const ItemWord* e : elem_ready[k + 1])
          if (reduce(g, eval_elem(*e)).empty()) {
            ok = false;
            break;
          }
      if (ok && rec(k + 1)) return true;
    }
    return false;
  };
  res.found = rec(0);
  if (res.found) res.assignment = cur;
  return res;
}

}  // namespace pcmr
