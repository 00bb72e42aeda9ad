#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcmr/word.h"

namespace pcmr {

// Finite simplicial commutation graph. Vertices are the alphabet letters, in a
// fixed total order a_1 < ... < a_r; an edge [x,y] means x and y commute.
class CommutationGraph {
 public:
  CommutationGraph() = default;
  CommutationGraph(std::vector<std::string> letters,
                   const std::vector<std::pair<std::string, std::string>>& edges);

  // Common test fixtures.
  static CommutationGraph free_group(std::vector<std::string> letters);
  static CommutationGraph cycle(std::vector<std::string> letters);  // pentagon etc.
  static CommutationGraph path(std::vector<std::string> letters);
  static CommutationGraph complete(std::vector<std::string> letters);

  size_t rank() const { return letters_.size(); }
  const std::vector<std::string>& letters() const { return letters_; }
  const std::string& letter_name(int i) const { return letters_.at(i); }
  int letter_index(const std::string& name) const;
  bool has_letter(const std::string& name) const { return index_.count(name) != 0; }

  bool commutes(int a, int b) const { return (adj_[a] >> b) & 1u; }
  uint64_t adjacency_mask(int a) const { return adj_[a]; }
  std::vector<std::pair<int, int>> edges() const;

  // Adds a letter (used when building auxiliary groups over A u Z).
  int add_letter(const std::string& name);
  void add_edge(int a, int b);

  // Word syntax: whitespace-separated syllables "x" / "x^-1"; a token that is
  // not a known letter is split greedily into single-character letters.
  // Unicode superscript inverse is accepted on input.
  Word parse_word(const std::string& text) const;
  std::string print_word(const Word& w) const;

  // Lexicographic rank for the order a_1 < ... < a_r < a_r^-1 < ... < a_1^-1.
  int lex_rank(const Syllable& s) const {
    return s.sign > 0 ? s.letter : static_cast<int>(2 * rank()) - 1 - s.letter;
  }

  void check_word(const Word& w) const;

  friend bool operator==(const CommutationGraph& a, const CommutationGraph& b) {
    return a.letters_ == b.letters_ && a.adj_ == b.adj_;
  }

 private:
  std::vector<std::string> letters_;
  std::unordered_map<std::string, int> index_;
  std::vector<uint64_t> adj_;
};

}  // namespace pcmr
