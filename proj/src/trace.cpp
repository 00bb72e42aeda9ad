#include "pcmr/trace.h"

#include <algorithm>
#include <map>

namespace pcmr {

std::vector<std::vector<bool>> DependenceGraph::closure() const {
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (auto [i, j] : edges) reach[i][j] = true;
  for (size_t k = 0; k < n; ++k)
    for (size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = true;
  return reach;
}

DependenceGraph dependence_graph(const CommutationGraph& g, const Word& w) {
  g.check_word(w);
  DependenceGraph d;
  d.n = w.size();
  d.labels = w.syllables();
  for (size_t i = 0; i < w.size(); ++i)
    for (size_t j = i + 1; j < w.size(); ++j)
      if (w[i].letter == w[j].letter || !g.commutes(w[i].letter, w[j].letter))
        d.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return d;
}

namespace {

// Clan partition for an arbitrary working commutation relation. Two letters
// share a clan iff their full non-commutation neighbourhoods agree; since a
// letter never commutes with itself, clan members are pairwise dependent.
std::vector<Clan> clans_of(const CommutationGraph& g,
                           const std::vector<uint64_t>& commute_mask) {
  size_t r = g.rank();
  std::map<uint64_t, std::vector<int>> groups;
  for (size_t x = 0; x < r; ++x) groups[commute_mask[x]].push_back(static_cast<int>(x));
  std::vector<Clan> out;
  for (auto& [mask, ls] : groups) {
    Clan c;
    c.letters = ls;
    c.thin = false;
    for (size_t y = 0; y < r; ++y)
      if ((mask >> y) & 1u) {
        c.thin = true;  // some outside letter commutes with the clan
        break;
      }
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const Clan& a, const Clan& b) { return a.letters.front() < b.letters.front(); });
  return out;
}

}  // namespace

std::vector<Clan> clans(const CommutationGraph& g) {
  std::vector<uint64_t> mask(g.rank());
  for (size_t x = 0; x < g.rank(); ++x) mask[x] = g.adjacency_mask(static_cast<int>(x));
  auto out = clans_of(g, mask);
  size_t thick = 0;
  size_t thin = 0;
  for (const Clan& c : out) (c.thin ? thin : thick)++;
  if (thick > 1) throw internal_error("clan partition produced more than one thick clan");
  if (thin == 1) throw internal_error("clan partition produced exactly one thin clan");
  return out;
}

Word dm_nf(const CommutationGraph& g, const Word& w) {
  Word out;
  for (int i : dm_linearization(g, w)) out.push_back(w[i]);
  return out;
}

std::vector<int> dm_linearization(const CommutationGraph& g, const Word& w) {
  g.check_word(w);
  size_t n = w.size();
  if (n == 0) return {};

  DependenceGraph dg = dependence_graph(g, w);
  std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));  // oriented i -> j
  for (auto [i, j] : dg.edges) edge[i][j] = true;

  std::vector<uint64_t> commute_mask(g.rank());
  for (size_t x = 0; x < g.rank(); ++x) commute_mask[x] = g.adjacency_mask(static_cast<int>(x));

  auto reachable = [&](const std::vector<std::vector<bool>>& e) {
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) reach[i][j] = e[i][j];
    for (size_t k = 0; k < n; ++k)
      for (size_t i = 0; i < n; ++i)
        if (reach[i][k])
          for (size_t j = 0; j < n; ++j)
            if (reach[k][j]) reach[i][j] = true;
    return reach;
  };

  for (;;) {
    std::vector<Clan> cl = clans_of(g, commute_mask);
    const Clan* designated = nullptr;
    for (const Clan& c : cl)
      if (c.thin) {
        designated = &c;
        break;  // clans_of sorts by least letter
      }
    if (!designated) break;

    std::vector<bool> in_clan_letter(g.rank(), false);
    for (int l : designated->letters) in_clan_letter[l] = true;

    std::vector<std::vector<bool>> reach = reachable(edge);

    // Clan positions, ordered (they are totally ordered; word order works).
    std::vector<int> cpos;
    for (size_t i = 0; i < n; ++i)
      if (in_clan_letter[w[i].letter]) cpos.push_back(static_cast<int>(i));
    int q = static_cast<int>(cpos.size());

    // Source and target points in the current partial order.
    std::vector<int> sv(n), tv(n);
    for (size_t v = 0; v < n; ++v) {
      int s = 0, t = q + 1;
      for (int i = 0; i < q; ++i) {
        size_t c = static_cast<size_t>(cpos[i]);
        bool le = (c == v) || reach[c][v];
        bool ge = (c == v) || reach[v][c];
        if (le) s = std::max(s, i + 1);
        if (ge) t = std::min(t, i + 1);
      }
      sv[v] = s;
      tv[v] = t;
    }

    // Median, in doubled coordinates so that half positions stay integral.
    auto median2 = [&](int s, int t) {
      if (s == t) return 2 * s;
      // unique l in [s, t) with #neg(c_{s+1}..c_l) == #pos(c_{l+1}..c_{t-1})
      int pos_right = 0;
      for (int i = s + 1; i <= t - 1; ++i)
        if (w[cpos[i - 1]].sign > 0) ++pos_right;
      int neg_left = 0;
      for (int l = s;; ++l) {
        if (neg_left == pos_right) return 2 * l + 1;
        if (l >= t - 1) throw internal_error("dm_nf: median not found");
        if (w[cpos[l]].sign < 0) ++neg_left;  // c_{l+1} joins the left part
        if (w[cpos[l]].sign > 0) --pos_right;
      }
    };

    std::vector<int> gpos(n);
    for (size_t v = 0; v < n; ++v) gpos[v] = median2(sv[v], tv[v]);

    // New orientation edges between clan positions and commuting positions.
    for (size_t v = 0; v < n; ++v) {
      if (!in_clan_letter[w[v].letter]) continue;
      for (size_t u = 0; u < n; ++u) {
        if (u == v || in_clan_letter[w[u].letter]) continue;
        if (!((commute_mask[w[u].letter] >> w[v].letter) & 1u)) continue;
        if (gpos[u] == gpos[v]) throw internal_error("dm_nf: ambiguous global positions");
        if (gpos[u] < gpos[v])
          edge[u][v] = true;
        else
          edge[v][u] = true;
      }
    }

    // Remove the clan's commutations from the working monoid.
    for (int l : designated->letters) {
      for (size_t y = 0; y < g.rank(); ++y) {
        commute_mask[l] &= ~(uint64_t{1} << y);
        commute_mask[y] &= ~(uint64_t{1} << l);
      }
    }
  }

  // The accumulated orientation forces a unique linearization; extract it by
  // repeatedly taking the unique minimal position.
  std::vector<std::vector<bool>> reach = reachable(edge);
  std::vector<bool> used(n, false);
  std::vector<int> order;
  for (size_t step = 0; step < n; ++step) {
    int min_pos = -1;
    for (size_t v = 0; v < n; ++v) {
      if (used[v]) continue;
      bool minimal = true;
      for (size_t u = 0; u < n && minimal; ++u)
        if (!used[u] && u != v && reach[u][v]) minimal = false;
      if (!minimal) continue;
      if (min_pos >= 0) throw internal_error("dm_nf: final order not total");
      min_pos = static_cast<int>(v);
    }
    if (min_pos < 0) throw internal_error("dm_nf: orientation has a cycle");
    used[min_pos] = true;
    order.push_back(min_pos);
  }
  return order;
}

bool trace_equal(const CommutationGraph& g, const Word& u, const Word& v) {
  return dm_nf(g, u) == dm_nf(g, v);
}

}  // namespace pcmr
