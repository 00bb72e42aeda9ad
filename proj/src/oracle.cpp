#include "pcmr/oracle.h"

#include <deque>

#include "pcmr/group.h"

namespace pcmr {
namespace oracle {

namespace {

// Neighbours under one swap of adjacent commuting syllables or one free
// cancellation of an adjacent inverse pair.
std::vector<Word> rewrite_neighbours(const CommutationGraph& g, const Word& w, bool allow_cancel) {
  std::vector<Word> out;
  for (size_t i = 0; i + 1 < w.size(); ++i) {
    if (allow_cancel && w[i + 1] == w[i].inverse()) {
      std::vector<Syllable> s = w.syllables();
      s.erase(s.begin() + i, s.begin() + i + 2);
      out.emplace_back(std::move(s));
    }
    if (w[i].letter != w[i + 1].letter && g.commutes(w[i].letter, w[i + 1].letter)) {
      std::vector<Syllable> s = w.syllables();
      std::swap(s[i], s[i + 1]);
      out.emplace_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

size_t bfs_geodesic_length(const CommutationGraph& g, const Word& w, size_t node_cap) {
  g.check_word(w);
  std::set<Word> seen{w};
  std::deque<Word> queue{w};
  size_t best = w.size();
  while (!queue.empty()) {
    Word cur = queue.front();
    queue.pop_front();
    best = std::min(best, cur.size());
    for (const Word& nb : rewrite_neighbours(g, cur, true)) {
      if (seen.insert(nb).second) {
        if (seen.size() > node_cap) throw budget_error("bfs_geodesic_length: node cap exceeded");
        queue.push_back(nb);
      }
    }
  }
  return best;
}

std::set<Word> swap_closure_trace_class(const CommutationGraph& g, const Word& w,
                                        size_t node_cap) {
  std::set<Word> seen{w};
  std::deque<Word> queue{w};
  while (!queue.empty()) {
    Word cur = queue.front();
    queue.pop_front();
    for (const Word& nb : rewrite_neighbours(g, cur, false)) {
      if (seen.insert(nb).second) {
        if (seen.size() > node_cap) throw budget_error("swap_closure: node cap exceeded");
        queue.push_back(nb);
      }
    }
  }
  return seen;
}

std::vector<Word> all_geodesics(const CommutationGraph& g, size_t max_len, size_t node_cap) {
  std::vector<Word> out{Word()};
  size_t head = 0;
  size_t level_end = 1;
  for (size_t len = 0; len < max_len; ++len) {
    for (; head < level_end; ++head) {
      Word base = out[head];
      for (int l = 0; l < static_cast<int>(g.rank()); ++l) {
        for (int s : {1, -1}) {
          Word next = base;
          next.push_back(Syllable(l, s));
          if (is_geodesic(g, next)) {
            out.push_back(next);
            if (out.size() > node_cap) throw budget_error("all_geodesics: node cap exceeded");
          }
        }
      }
    }
    level_end = out.size();
  }
  return out;
}

std::vector<Word> brute_centraliser(const CommutationGraph& g, const Word& w,
                                    const SearchBounds& bounds) {
  std::vector<Word> out;
  for (const Word& cand : all_geodesics(g, bounds.max_word_len, bounds.node_cap)) {
    if (group_equal(g, cand * w, w * cand)) out.push_back(cand);
  }
  return out;
}

std::vector<std::vector<Word>> brute_solutions(const CommutationGraph& g,
                                               const std::vector<GroupEquation>& system,
                                               size_t num_vars, const SearchBounds& bounds) {
  std::vector<Word> values = all_geodesics(g, bounds.max_word_len, bounds.node_cap);
  std::vector<std::vector<Word>> out;
  std::vector<Word> tuple(num_vars);

  auto check = [&]() {
    for (const GroupEquation& eq : system) {
      Word prod;
      for (const EqCell& c : eq) {
        if (c.is_var) {
          prod.append(c.sign > 0 ? tuple[c.var] : tuple[c.var].inverse());
        } else {
          prod.append(c.constant);
        }
      }
      if (!reduce(g, prod).empty()) return false;
    }
    return true;
  };

  size_t total = 1;
  for (size_t v = 0; v < num_vars; ++v) {
    total *= values.size();
    if (total > bounds.node_cap) throw budget_error("brute_solutions: search space exceeds cap");
  }

  std::vector<size_t> idx(num_vars, 0);
  for (;;) {
    for (size_t v = 0; v < num_vars; ++v) tuple[v] = values[idx[v]];
    if (check()) out.push_back(tuple);
    size_t v = 0;
    while (v < num_vars) {
      if (++idx[v] < values.size()) break;
      idx[v] = 0;
      ++v;
    }
    if (v == num_vars || num_vars == 0) break;
  }
  if (num_vars == 0 && check()) out.push_back({});
  return out;
}

}  // namespace oracle
}  // namespace pcmr
