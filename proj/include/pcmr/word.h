#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcmr {

// Thrown on malformed user input (unknown letters, bad JSON, arity mismatch).
struct input_error : std::runtime_error {
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an internal invariant fails.
struct internal_error : std::logic_error {
  explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

// Thrown when a configured search bound is exceeded.
struct budget_error : std::runtime_error {
  explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

// A signed letter x^{+1} or x^{-1}; `letter` indexes into the alphabet.
struct Syllable {
  int letter = 0;
  int sign = 1;

  Syllable() = default;
  Syllable(int l, int s) : letter(l), sign(s) {}

  Syllable inverse() const { return Syllable(letter, -sign); }

  friend bool operator==(const Syllable& a, const Syllable& b) {
    return a.letter == b.letter && a.sign == b.sign;
  }
  friend bool operator!=(const Syllable& a, const Syllable& b) { return !(a == b); }
  friend bool operator<(const Syllable& a, const Syllable& b) {
    return a.letter != b.letter ? a.letter < b.letter : a.sign > b.sign;
  }
};

// A word over a signed alphabet. Plain value type; the empty word is the identity.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<Syllable> syls) : syls_(std::move(syls)) {}

  static Word letter(int l, int sign = 1) { return Word({Syllable(l, sign)}); }

  size_t size() const { return syls_.size(); }
  bool empty() const { return syls_.empty(); }
  const Syllable& operator[](size_t i) const { return syls_[i]; }
  Syllable& operator[](size_t i) { return syls_[i]; }
  const std::vector<Syllable>& syllables() const { return syls_; }

  void push_back(Syllable s) { syls_.push_back(s); }
  void append(const Word& w) { syls_.insert(syls_.end(), w.syls_.begin(), w.syls_.end()); }

  Word inverse() const {
    Word r;
    r.syls_.reserve(syls_.size());
    for (auto it = syls_.rbegin(); it != syls_.rend(); ++it) r.syls_.push_back(it->inverse());
    return r;
  }

  Word subword(size_t from, size_t to) const {
    if (from > to || to > syls_.size()) throw internal_error("subword range");
    return Word(std::vector<Syllable>(syls_.begin() + from, syls_.begin() + to));
  }

  Word pow(int n) const {
    Word base = n >= 0 ? *this : inverse();
    Word r;
    for (int i = 0; i < (n >= 0 ? n : -n); ++i) r.append(base);
    return r;
  }

  friend Word operator*(const Word& a, const Word& b) {
    Word r = a;
    r.append(b);
    return r;
  }

  friend bool operator==(const Word& a, const Word& b) { return a.syls_ == b.syls_; }
  friend bool operator!=(const Word& a, const Word& b) { return !(a == b); }
  friend bool operator<(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.syls_ < b.syls_;
  }

 private:
  std::vector<Syllable> syls_;
};

}  // namespace pcmr
