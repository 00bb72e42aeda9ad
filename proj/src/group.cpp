#include "pcmr/group.h"

#include <algorithm>
#include <map>
#include <numeric>

namespace pcmr {

namespace {

// Finds the leftmost cancellable pair (i, j): w[j] == w[i]^-1 and every
// syllable strictly between commutes with w[i]'s letter.
std::optional<std::pair<size_t, size_t>> find_cancellable_pair(const CommutationGraph& g,
                                                               const Word& w) {
  for (size_t i = 0; i + 1 < w.size(); ++i) {
    for (size_t j = i + 1; j < w.size(); ++j) {
      if (j > i + 1 && !g.commutes(w[j - 1].letter, w[i].letter)) {
        // w[j-1] blocks w[i]; no later j can see past it.
        break;
      }
      if (w[j] == w[i].inverse()) return std::make_pair(i, j);
    }
  }
  return std::nullopt;
}

}  // namespace

Word reduce(const CommutationGraph& g, const Word& w) {
  g.check_word(w);
  std::vector<Syllable> cur = w.syllables();
  for (;;) {
    Word tmp(cur);
    auto pair = find_cancellable_pair(g, tmp);
    if (!pair) break;
    cur.erase(cur.begin() + pair->second);
    cur.erase(cur.begin() + pair->first);
  }
  return Word(cur);
}

bool is_geodesic(const CommutationGraph& g, const Word& w) {
  g.check_word(w);
  return !find_cancellable_pair(g, w).has_value();
}

GroupElement lex_nf(const CommutationGraph& g, const Word& w) {
  Word r = reduce(g, w);
  size_t n = r.size();
  // Greedy least linearization of the trace: repeatedly output the least
  // signed letter among positions with no pending dependent predecessor.
  std::vector<bool> used(n, false);
  Word out;
  for (size_t step = 0; step < n; ++step) {
    int best = -1;
    for (size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      bool minimal = true;
      for (size_t j = 0; j < i && minimal; ++j)
        if (!used[j] && !g.commutes(r[j].letter, r[i].letter)) minimal = false;
      if (!minimal) continue;
      if (best < 0 || g.lex_rank(r[i]) < g.lex_rank(r[best])) best = static_cast<int>(i);
    }
    used[best] = true;
    out.push_back(r[best]);
  }
  return GroupElement{out};
}

bool group_equal(const CommutationGraph& g, const Word& u, const Word& v) {
  return reduce(g, u * v.inverse()).empty();
}

std::set<int> alphabet_of(const CommutationGraph& g, const Word& w) {
  Word r = reduce(g, w);
  std::set<int> out;
  for (size_t i = 0; i < r.size(); ++i) out.insert(r[i].letter);
  return out;
}

std::set<int> a_set(const CommutationGraph& g, const Word& w) {
  std::set<int> az = alphabet_of(g, w);
  std::set<int> out;
  for (int x = 0; x < static_cast<int>(g.rank()); ++x) {
    if (az.count(x)) continue;
    bool all = true;
    for (int y : az)
      if (!g.commutes(x, y)) {
        all = false;
        break;
      }
    if (all) out.insert(x);
  }
  return out;
}

bool disjoint_commute(const CommutationGraph& g, const Word& u, const Word& v) {
  std::set<int> au = alphabet_of(g, u), av = alphabet_of(g, v);
  for (int x : au)
    if (av.count(x)) return false;
  for (int x : au)
    for (int y : av)
      if (!g.commutes(x, y)) return false;
  return true;
}

namespace {

// Removes one occurrence of syllable s usable as a left divisor; returns false
// if s does not left-divide w.
bool strip_left_letter(const CommutationGraph& g, std::vector<Syllable>& w, const Syllable& s) {
  for (size_t i = 0; i < w.size(); ++i) {
    if (w[i] == s) {
      w.erase(w.begin() + i);
      return true;
    }
    if (!g.commutes(w[i].letter, s.letter)) return false;
  }
  return false;
}

bool strip_right_letter(const CommutationGraph& g, std::vector<Syllable>& w, const Syllable& s) {
  for (size_t k = w.size(); k-- > 0;) {
    if (w[k] == s) {
      w.erase(w.begin() + k);
      return true;
    }
    if (!g.commutes(w[k].letter, s.letter)) return false;
  }
  return false;
}

}  // namespace

bool left_divides(const CommutationGraph& g, const Word& u, const Word& w) {
  if (!is_geodesic(g, u) || !is_geodesic(g, w)) throw input_error("left_divides: non-geodesic input");
  std::vector<Syllable> rest = w.syllables();
  for (size_t i = 0; i < u.size(); ++i)
    if (!strip_left_letter(g, rest, u[i])) return false;
  return true;
}

bool right_divides(const CommutationGraph& g, const Word& u, const Word& w) {
  if (!is_geodesic(g, u) || !is_geodesic(g, w))
    throw input_error("right_divides: non-geodesic input");
  std::vector<Syllable> rest = w.syllables();
  for (size_t k = u.size(); k-- > 0;)
    if (!strip_right_letter(g, rest, u[k])) return false;
  return true;
}

Word cancellation_divisor(const CommutationGraph& g, const Word& u, const Word& v) {
  if (!is_geodesic(g, u) || !is_geodesic(g, v))
    throw input_error("cancellation_divisor: non-geodesic input");
  std::vector<Syllable> ur = u.syllables();
  std::vector<Syllable> vr = v.syllables();
  Word d;
  for (;;) {
    bool progressed = false;
    // Least available first letter of v that also cancels at the right of u.
    for (size_t i = 0; i < vr.size(); ++i) {
      bool reachable = true;
      for (size_t j = 0; j < i && reachable; ++j)
        if (!g.commutes(vr[j].letter, vr[i].letter)) reachable = false;
      if (!reachable) continue;
      std::vector<Syllable> utry = ur;
      if (!strip_right_letter(g, utry, vr[i].inverse())) continue;
      d.push_back(vr[i]);
      ur = std::move(utry);
      vr.erase(vr.begin() + i);
      progressed = true;
      break;
    }
    if (!progressed) break;
  }
  return d;
}

bool is_cyclically_reduced(const CommutationGraph& g, const Word& w) {
  Word r = reduce(g, w);
  return reduce(g, r * r).size() == 2 * r.size();
}

std::pair<Word, Word> cyclic_reduce(const CommutationGraph& g, const Word& w) {
  Word core = reduce(g, w);
  Word conj;  // w = conj^-1 . core . conj
  for (;;) {
    bool stripped = false;
    if (core.size() >= 2) {
      for (size_t i = 0; i < core.size() && !stripped; ++i) {
        // core starts (as a trace) with core[i]?
        bool first = true;
        for (size_t j = 0; j < i && first; ++j)
          if (!g.commutes(core[j].letter, core[i].letter)) first = false;
        if (!first) continue;
        std::vector<Syllable> rest = core.syllables();
        Syllable s = core[i];
        rest.erase(rest.begin() + i);
        std::vector<Syllable> rest2 = rest;
        if (!strip_right_letter(g, rest2, s.inverse())) continue;
        // core = s . rest2 . s^-1
        core = Word(rest2);
        Word nc = Word::letter(s.letter, -s.sign);
        nc.append(conj);
        conj = nc;
        stripped = true;
      }
    }
    if (!stripped) break;
  }
  return {conj, core};
}

std::vector<Word> block_decomposition(const CommutationGraph& g, const Word& w) {
  if (!is_geodesic(g, w)) throw input_error("block_decomposition: non-geodesic input");
  std::set<int> az = alphabet_of(g, w);
  std::vector<int> letters(az.begin(), az.end());
  // Connected components of the non-commutation graph on az(w).
  std::map<int, int> comp;
  int ncomp = 0;
  for (int x : letters) {
    if (comp.count(x)) continue;
    std::vector<int> stack{x};
    comp[x] = ncomp;
    while (!stack.empty()) {
      int c = stack.back();
      stack.pop_back();
      for (int y : letters)
        if (!comp.count(y) && !g.commutes(c, y)) {
          comp[y] = ncomp;
          stack.push_back(y);
        }
    }
    ++ncomp;
  }
  std::vector<Word> blocks(ncomp);
  for (size_t i = 0; i < w.size(); ++i) blocks[comp[w[i].letter]].push_back(w[i]);
  return blocks;
}

bool is_block(const CommutationGraph& g, const Word& w) {
  if (w.empty()) return false;
  return block_decomposition(g, reduce(g, w)).size() == 1;
}

namespace {

// All left-divisor traces of w with exactly `len` syllables, as words.
void enumerate_left_divisors(const CommutationGraph& g, const std::vector<Syllable>& rest,
                             size_t len, Word& prefix, std::set<Word>& out) {
  if (prefix.size() == len) {
    out.insert(prefix);
    return;
  }
  std::set<std::pair<int, int>> seen;
  for (size_t i = 0; i < rest.size(); ++i) {
    bool avail = true;
    for (size_t j = 0; j < i && avail; ++j)
      if (!g.commutes(rest[j].letter, rest[i].letter)) avail = false;
    if (!avail) continue;
    if (!seen.insert({rest[i].letter, rest[i].sign}).second) continue;
    std::vector<Syllable> next = rest;
    next.erase(next.begin() + i);
    prefix.push_back(rest[i]);
    enumerate_left_divisors(g, next, len, prefix, out);
    prefix = prefix.subword(0, prefix.size() - 1);
  }
}

}  // namespace

std::pair<Word, int> root(const CommutationGraph& g, const Word& w) {
  Word r = reduce(g, w);
  if (r.empty()) throw input_error("root of the identity");
  auto [conj, core] = cyclic_reduce(g, r);
  size_t len = core.size();
  for (size_t m = len; m >= 2; --m) {
    if (len % m != 0) continue;
    std::set<Word> candidates;
    Word prefix;
    std::vector<Syllable> rest = core.syllables();
    enumerate_left_divisors(g, rest, len / m, prefix, candidates);
    for (const Word& cand : candidates) {
      if (group_equal(g, cand.pow(static_cast<int>(m)), core)) {
        Word res = reduce(g, conj.inverse() * cand * conj);
        return {res, static_cast<int>(m)};
      }
    }
  }
  return {r, 1};
}

std::vector<Word> centraliser_generators(const CommutationGraph& g, const Word& w) {
  Word r = reduce(g, w);
  std::vector<Word> out;
  if (r.empty()) {
    for (int i = 0; i < static_cast<int>(g.rank()); ++i) out.push_back(Word::letter(i));
    return out;
  }
  auto [conj, core] = cyclic_reduce(g, r);
  for (const Word& block : block_decomposition(g, core)) {
    Word br = root(g, block).first;
    out.push_back(reduce(g, conj.inverse() * br * conj));
  }
  for (int x : a_set(g, core)) out.push_back(reduce(g, conj.inverse() * Word::letter(x) * conj));
  return out;
}

Word big_power_substitute(const CommutationGraph& g, const XWord& w, const Word& b, int n) {
  Word br = reduce(g, b);
  if (!is_block(g, br) || !is_cyclically_reduced(g, br))
    throw input_error("big_power_substitute: b must be a cyclically reduced block");
  Word bn = br.pow(n);
  Word acc;
  for (const auto& t : w.toks) {
    if (t.is_x) {
      acc.append(t.x_sign > 0 ? bn : bn.inverse());
    } else {
      acc.push_back(t.syl);
    }
  }
  return reduce(g, acc);
}

}  // namespace pcmr
