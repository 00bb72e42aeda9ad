#include "pcmr/graph.h"

#include <algorithm>
#include <sstream>

namespace pcmr {

CommutationGraph::CommutationGraph(std::vector<std::string> letters,
                                   const std::vector<std::pair<std::string, std::string>>& edges)
    : letters_(std::move(letters)) {
  if (letters_.size() > 60) throw input_error("alphabet too large (max 60 letters)");
  for (size_t i = 0; i < letters_.size(); ++i) {
    if (letters_[i].empty()) throw input_error("empty letter name");
    if (!index_.emplace(letters_[i], static_cast<int>(i)).second)
      throw input_error("duplicate letter: " + letters_[i]);
  }
  adj_.assign(letters_.size(), 0);
  for (const auto& [a, b] : edges) {
    int ia = letter_index(a), ib = letter_index(b);
    if (ia == ib) throw input_error("self-loop at letter " + a);
    add_edge(ia, ib);
  }
}

CommutationGraph CommutationGraph::free_group(std::vector<std::string> letters) {
  return CommutationGraph(std::move(letters), {});
}

CommutationGraph CommutationGraph::cycle(std::vector<std::string> letters) {
  std::vector<std::pair<std::string, std::string>> edges;
  size_t n = letters.size();
  for (size_t i = 0; i < n; ++i) edges.emplace_back(letters[i], letters[(i + 1) % n]);
  return CommutationGraph(std::move(letters), edges);
}

CommutationGraph CommutationGraph::path(std::vector<std::string> letters) {
  std::vector<std::pair<std::string, std::string>> edges;
  for (size_t i = 0; i + 1 < letters.size(); ++i) edges.emplace_back(letters[i], letters[i + 1]);
  return CommutationGraph(std::move(letters), edges);
}

CommutationGraph CommutationGraph::complete(std::vector<std::string> letters) {
  std::vector<std::pair<std::string, std::string>> edges;
  for (size_t i = 0; i < letters.size(); ++i)
    for (size_t j = i + 1; j < letters.size(); ++j) edges.emplace_back(letters[i], letters[j]);
  return CommutationGraph(std::move(letters), edges);
}

int CommutationGraph::letter_index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw input_error("unknown letter: " + name);
  return it->second;
}

std::vector<std::pair<int, int>> CommutationGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (size_t a = 0; a < letters_.size(); ++a)
    for (size_t b = a + 1; b < letters_.size(); ++b)
      if (commutes(static_cast<int>(a), static_cast<int>(b)))
        out.emplace_back(static_cast<int>(a), static_cast<int>(b));
  return out;
}

int CommutationGraph::add_letter(const std::string& name) {
  if (index_.count(name)) throw input_error("duplicate letter: " + name);
  if (letters_.size() >= 60) throw input_error("alphabet too large");
  letters_.push_back(name);
  adj_.push_back(0);
  int idx = static_cast<int>(letters_.size()) - 1;
  index_.emplace(name, idx);
  return idx;
}

void CommutationGraph::add_edge(int a, int b) {
  if (a == b) throw input_error("self-loop");
  adj_[a] |= (uint64_t{1} << b);
  adj_[b] |= (uint64_t{1} << a);
}

namespace {

// Replaces unicode superscript inverses by "^-1".
std::string normalize_inverses(const std::string& text) {
  static const std::string sup_minus = "⁻";  // superscript minus
  static const std::string sup_one = "¹";    // superscript one
  std::string out;
  size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, sup_minus.size(), sup_minus) == 0 &&
        text.compare(i + sup_minus.size(), sup_one.size(), sup_one) == 0) {
      out += "^-1";
      i += sup_minus.size() + sup_one.size();
    } else {
      out += text[i++];
    }
  }
  return out;
}

}  // namespace

Word CommutationGraph::parse_word(const std::string& text) const {
  std::string norm = normalize_inverses(text);
  std::vector<std::string> tokens;
  std::istringstream in(norm);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);

  Word w;
  auto parse_token = [&](const std::string& t) {
    int sign = 1;
    std::string body = t;
    if (body.size() > 3 && body.compare(body.size() - 3, 3, "^-1") == 0) {
      sign = -1;
      body = body.substr(0, body.size() - 3);
    }
    if (index_.count(body)) {
      w.push_back(Syllable(letter_index(body), sign));
      return;
    }
    // Greedy single-character split for compact words like "bac" or "ba^-1c".
    size_t i = 0;
    while (i < t.size()) {
      std::string one(1, t[i]);
      if (!index_.count(one)) throw input_error("unknown letter: " + one);
      int s = 1;
      size_t next = i + 1;
      if (t.compare(next, 3, "^-1") == 0) {
        s = -1;
        next += 3;
      }
      w.push_back(Syllable(letter_index(one), s));
      i = next;
    }
  };
  for (const auto& t : tokens) parse_token(t);
  return w;
}

std::string CommutationGraph::print_word(const Word& w) const {
  std::string out;
  for (size_t i = 0; i < w.size(); ++i) {
    if (i) out += ' ';
    out += letter_name(w[i].letter);
    if (w[i].sign < 0) out += "^-1";
  }
  return out;
}

void CommutationGraph::check_word(const Word& w) const {
  for (size_t i = 0; i < w.size(); ++i) {
    if (w[i].letter < 0 || w[i].letter >= static_cast<int>(rank()))
      throw input_error("word uses letter outside alphabet");
    if (w[i].sign != 1 && w[i].sign != -1) throw input_error("bad syllable sign");
  }
}

}  // namespace pcmr
