#include "pcmr/gen_eq.h"

#include <algorithm>
#include <limits>
#include <sstream>

#include "pcmr/group.h"
#include "pcmr/trace.h"
#include "pcmr/oracle.h"
#include <functional>

namespace pcmr {

bool operator==(const ItemRef& a, const ItemRef& b) { return a.item == b.item && a.sign == b.sign; }

ItemWord item_word_inverse(const ItemWord& w) {
  ItemWord out;
  out.reserve(w.size());
  for (auto it = w.rbegin(); it != w.rend(); ++it) {
    if (std::holds_alternative<ItemRef>(*it)) {
      ItemRef r = std::get<ItemRef>(*it);
      out.push_back(ItemRef{r.item, -r.sign});
    } else {
      out.push_back(std::get<Syllable>(*it).inverse());
    }
  }
  return out;
}

ItemWord item_word_concat(const ItemWord& a, const ItemWord& b) {
  ItemWord out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

const BaseRec& GeneralisedEquation::base(int id) const {
  for (const auto& b : bases)
    if (b.id == id) return b;
  throw internal_error("unknown base id");
}

BaseRec& GeneralisedEquation::base(int id) {
  for (auto& b : bases)
    if (b.id == id) return b;
  throw internal_error("unknown base id");
}

bool GeneralisedEquation::has_base(int id) const {
  for (const auto& b : bases)
    if (b.id == id) return true;
  return false;
}

bool GeneralisedEquation::boundary_open(int i) const {
  for (const auto& b : bases)
    if (boundary_intersects(i, b)) return true;
  return false;
}

bool GeneralisedEquation::is_boundary_tied(int i, int base_id) const {
  for (const auto& c : connections) {
    if (c.base == base_id && c.p == i) return true;
    if (base(c.base).dual == base_id && c.q == i) return true;
  }
  return false;
}

bool GeneralisedEquation::is_boundary_tied(int i) const {
  for (const auto& c : connections)
    if (c.p == i || c.q == i) return true;
  return false;
}

bool GeneralisedEquation::boundary_free(int i) const {
  if (is_boundary_tied(i)) return false;
  for (const auto& b : bases)
    if (boundary_touches(i, b) || boundary_intersects(i, b)) return false;
  return true;
}

int GeneralisedEquation::gamma(int item) const {
  int n = 0;
  for (const auto& b : bases)
    if (item_in_base(item, b)) ++n;
  return n;
}

bool GeneralisedEquation::item_constant(int item) const {
  for (const auto& b : bases)
    if (b.kind == BaseKind::Constant && item_in_base(item, b)) return true;
  return false;
}

bool GeneralisedEquation::matched_pair(const BaseRec& b) const {
  if (b.kind != BaseKind::Variable) return false;
  const BaseRec& d = dual(b);
  return b.alpha == d.alpha && b.beta == d.beta && b.id != d.id;
}

std::optional<int> GeneralisedEquation::connection_of(int p, int base_id) const {
  for (const auto& c : connections) {
    if (c.base == base_id && c.p == p) return c.q;
    if (base(c.base).dual == base_id && c.q == p) return c.p;
  }
  return std::nullopt;
}

const Section& GeneralisedEquation::section_of_base(const BaseRec& b) const {
  for (const auto& s : sections)
    if (s.from <= b.alpha && b.beta <= s.to) return s;
  throw internal_error("base straddles a section boundary");
}

const Section& GeneralisedEquation::section_of_item(int item) const {
  for (const auto& s : sections)
    if (s.from <= item && item < s.to) return s;
  throw internal_error("item outside all sections");
}

bool GeneralisedEquation::section_closed(int from, int to) const {
  if (boundary_open(from) || boundary_open(to)) return false;
  for (int i = from + 1; i < to; ++i)
    if (!boundary_open(i)) return false;
  return true;
}

int GeneralisedEquation::rho_a() const {
  int end = 1;
  for (const auto& s : sections)
    if (s.tag == SectionTag::Active) end = std::max(end, s.to);
  return end;
}

ItemWord GeneralisedEquation::h_interval(int from, int to, int sign) const {
  ItemWord w;
  for (int i = from; i < to; ++i) w.push_back(ItemRef{i, 1});
  return sign > 0 ? w : item_word_inverse(w);
}

ItemWord GeneralisedEquation::h_of_base(const BaseRec& b) const {
  return h_interval(b.alpha, b.beta, b.kind == BaseKind::Variable ? b.eps : 1);
}

void GeneralisedEquation::add_connection(int p, int mu, int q) {
  if (connection_of(p, mu).has_value()) throw internal_error("duplicate boundary connection");
  connections.push_back({p, mu, q});
}

void GeneralisedEquation::remove_connections_of(int base_id) {
  int dual_id = base(base_id).dual;
  connections.erase(std::remove_if(connections.begin(), connections.end(),
                                   [&](const BoundaryConnection& c) {
                                     return c.base == base_id || c.base == dual_id;
                                   }),
                    connections.end());
}

void GeneralisedEquation::validate() const {
  for (const auto& b : bases) {
    if (!(1 <= b.alpha && b.alpha < b.beta && b.beta <= num_items + 1))
      throw internal_error("base interval out of range");
    if (b.kind == BaseKind::Constant && b.beta != b.alpha + 1)
      throw internal_error("constant base not single-item");
    if (b.kind == BaseKind::Variable) {
      if (!has_base(b.dual)) throw internal_error("missing dual base");
      if (base(b.dual).dual != b.id) throw internal_error("dual involution broken");
    }
  }
  for (const auto& c : connections) {
    const BaseRec& mu = base(c.base);
    if (mu.kind != BaseKind::Variable) throw internal_error("connection on constant base");
    const BaseRec& dm = dual(mu);
    if (!(mu.alpha < c.p && c.p < mu.beta && dm.alpha < c.q && c.q < dm.beta))
      throw internal_error("connection endpoints out of base range");
  }
  for (const auto& [i, j] : constraints) {
    if (i == j) throw internal_error("reflexive constraint");
    if (!(1 <= i && i < j && j <= num_items)) throw internal_error("constraint out of range");
  }
  int expect = 1;
  for (const auto& s : sections) {
    if (s.from != expect || s.from >= s.to) throw internal_error("sections do not partition");
    expect = s.to;
  }
  if (num_items > 0 && expect != num_items + 1) throw internal_error("sections do not cover");
  for (const auto& s : sections) {
    if (boundary_open(s.from) || boundary_open(s.to))
      throw internal_error("section endpoint is an open boundary");
  }
  for (const auto& b : bases) section_of_base(b);
}

std::vector<Equation> associated_system(const GeneralisedEquation& ge) {
  std::vector<Equation> out;
  for (const auto& b : ge.bases) {
    if (b.kind == BaseKind::Constant) continue;
    if (b.dual < b.id) continue;  // one equation per dual pair
    const BaseRec& d = ge.dual(b);
    Equation e;
    e.kind = EquationKind::Basic;
    e.lhs = ge.h_of_base(b);
    e.rhs = ge.h_of_base(d);
    out.push_back(std::move(e));
  }
  for (const auto& b : ge.bases) {
    if (b.kind != BaseKind::Constant) continue;
    Equation e;
    e.kind = EquationKind::Coefficient;
    e.lhs = {ItemRef{b.alpha, 1}};
    e.rhs = {b.letter};
    out.push_back(std::move(e));
  }
  for (const auto& c : ge.connections) {
    const BaseRec& mu = ge.base(c.base);
    const BaseRec& dm = ge.dual(mu);
    Equation e;
    e.kind = EquationKind::Boundary;
    if (mu.eps == dm.eps) {
      e.lhs = ge.h_interval(mu.alpha, c.p);
      e.rhs = ge.h_interval(dm.alpha, c.q);
    } else {
      e.lhs = ge.h_interval(mu.alpha, c.p);
      e.rhs = item_word_inverse(ge.h_interval(c.q, dm.beta));
    }
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

std::set<int> side_items(const ItemWord& w) {
  std::set<int> out;
  for (const auto& t : w)
    if (std::holds_alternative<ItemRef>(t)) out.insert(std::get<ItemRef>(t).item);
  return out;
}

}  // namespace

std::set<std::pair<int, int>> star_close(std::set<std::pair<int, int>> seed,
                                         const std::vector<Equation>& equations) {
  auto norm = [](int i, int j) { return std::make_pair(std::min(i, j), std::max(i, j)); };
  std::set<std::pair<int, int>> rel;
  for (auto [i, j] : seed)
    if (i != j) rel.insert(norm(i, j));

  std::vector<std::pair<std::set<int>, std::set<int>>> sides;
  std::set<int> all_items;
  for (const auto& e : equations) {
    auto a = side_items(e.lhs), b = side_items(e.rhs);
    if (a.empty() || b.empty()) continue;  // constant sides never trigger
    for (int i : a) all_items.insert(i);
    for (int i : b) all_items.insert(i);
    sides.emplace_back(std::move(a), std::move(b));
  }
  for (auto [i, j] : rel) {
    all_items.insert(i);
    all_items.insert(j);
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [a, b] : sides) {
      for (int dir = 0; dir < 2; ++dir) {
        const std::set<int>& from = dir ? b : a;
        const std::set<int>& to = dir ? a : b;
        for (int m : all_items) {
          bool covers = true;
          for (int i : from) {
            if (i == m || !rel.count(norm(i, m))) {
              covers = false;
              break;
            }
          }
          if (!covers) continue;
          for (int j : to) {
            if (j == m) continue;
            if (rel.insert(norm(j, m)).second) changed = true;
          }
        }
      }
    }
  }
  return rel;
}

void star_close_constraints(GeneralisedEquation& ge) {
  ge.constraints = star_close(ge.constraints, associated_system(ge));
}

ConsistencyReport is_formally_consistent(const GeneralisedEquation& ge) {
  auto fail = [](int cond, std::string detail) {
    return ConsistencyReport{false, cond, std::move(detail)};
  };

  // (1) duals of opposite orientation do not intersect.
  for (const auto& b : ge.bases) {
    if (b.kind != BaseKind::Variable || b.dual <= b.id) continue;
    const BaseRec& d = ge.dual(b);
    if (b.eps == -d.eps) {
      int lo = std::max(b.alpha, d.alpha), hi = std::min(b.beta, d.beta);
      if (lo < hi) return fail(1, "bases with opposite orientation intersect");
    }
  }
  // (2) connections are monotone per base.
  for (const auto& b : ge.bases) {
    if (b.kind != BaseKind::Variable) continue;
    const BaseRec& d = ge.dual(b);
    std::vector<std::pair<int, int>> conns;
    for (const auto& c : ge.connections) {
      if (c.base == b.id) conns.emplace_back(c.p, c.q);
      if (c.base == d.id && d.id != b.id) conns.emplace_back(c.q, c.p);
    }
    for (const auto& [p, q] : conns)
      for (const auto& [p1, q1] : conns) {
        if (p == p1 && q != q1) return fail(2, "two connections at one boundary disagree");
        if (p < p1) {
          if (b.eps * d.eps == 1 && q > q1) return fail(2, "connections not monotone");
          if (b.eps * d.eps == -1 && q < q1) return fail(2, "connections not antitone");
        }
      }
  }
  // (3) matched pairs only carry diagonal connections.
  for (const auto& b : ge.bases) {
    if (!ge.matched_pair(b)) continue;
    for (const auto& c : ge.connections)
      if ((c.base == b.id || c.base == b.dual) && c.p != c.q)
        return fail(3, "non-diagonal connection on a matched pair");
  }
  // (4) unique coefficient letters.
  for (const auto& b : ge.bases)
    for (const auto& b2 : ge.bases)
      if (b.kind == BaseKind::Constant && b2.kind == BaseKind::Constant && b.id < b2.id &&
          b.alpha == b2.alpha && !(b.letter == b2.letter))
        return fail(4, "two coefficient equations force different letters");
  // (5) connections around a constant item are adjacent.
  for (const auto& b : ge.bases) {
    if (b.kind != BaseKind::Variable) continue;
    for (int i = b.alpha + 1; i + 1 < b.beta; ++i) {
      if (!ge.item_constant(i)) continue;
      auto q1 = ge.connection_of(i, b.id);
      auto q2 = ge.connection_of(i + 1, b.id);
      if (q1 && q2 && std::abs(*q1 - *q2) != 1)
        return fail(5, "connections around a constant item not adjacent");
    }
  }
  // (6) Re irreflexive.
  for (const auto& [i, j] : ge.constraints)
    if (i == j) return fail(6, "reflexive constraint");
  return ConsistencyReport{};
}

size_t SolutionTuple::total_length() const {
  size_t n = 0;
  for (const auto& w : words) n += w.size();
  return n;
}

Word eval_item_word(const ItemWord& w, const SolutionTuple& H) {
  Word out;
  for (const auto& t : w) {
    if (std::holds_alternative<ItemRef>(t)) {
      const ItemRef& r = std::get<ItemRef>(t);
      const Word& v = H.of(r.item);
      out.append(r.sign > 0 ? v : v.inverse());
    } else {
      out.push_back(std::get<Syllable>(t));
    }
  }
  return out;
}

SolutionCheck check_solution(const GeneralisedEquation& ge, const SolutionTuple& H,
                             SolutionMonoid monoid) {
  if (static_cast<int>(H.words.size()) != ge.num_items)
    throw input_error("check_solution: arity mismatch");
  for (int i = 1; i <= ge.num_items; ++i) {
    if (H.of(i).empty()) return {false, "empty component h_" + std::to_string(i)};
    if (!is_geodesic(ge.graph, H.of(i)))
      return {false, "component h_" + std::to_string(i) + " is not geodesic"};
  }
  for (const auto& e : associated_system(ge)) {
    Word lhs = eval_item_word(e.lhs, H);
    Word rhs = eval_item_word(e.rhs, H);
    if (!is_geodesic(ge.graph, lhs) || !is_geodesic(ge.graph, rhs))
      return {false, "equation side not geodesic: " + print_equation(ge, e)};
    bool eq = monoid == SolutionMonoid::F ? lhs == rhs : trace_equal(ge.graph, lhs, rhs);
    if (!eq) return {false, "equation fails: " + print_equation(ge, e)};
  }
  for (const auto& [i, j] : ge.constraints) {
    if (!disjoint_commute(ge.graph, H.of(i), H.of(j)))
      return {false, "constraint fails: h_" + std::to_string(i) + " <-> h_" + std::to_string(j)};
  }
  return {};
}

namespace {

struct DerivedSection {
  int from, to;
  SectionTag tag;
};

// Closed sections derived from the stored partition: stored sections split at
// interior closed boundaries, tags inherited.
std::vector<DerivedSection> derived_sections(const GeneralisedEquation& ge) {
  std::vector<DerivedSection> out;
  for (const auto& s : ge.sections) {
    int start = s.from;
    for (int b = s.from + 1; b <= s.to; ++b) {
      if (b == s.to || !ge.boundary_open(b)) {
        out.push_back({start, b, s.tag});
        start = b;
      }
    }
  }
  return out;
}

}  // namespace

Metrics metrics(const GeneralisedEquation& ge) {
  Metrics m;
  m.gamma.resize(ge.num_items);
  for (int i = 1; i <= ge.num_items; ++i) m.gamma[i - 1] = ge.gamma(i);

  auto secs = derived_sections(ge);
  for (const auto& s : secs) {
    int nbases = 0;
    for (const auto& b : ge.bases)
      if (s.from <= b.alpha && b.beta <= s.to) ++nbases;
    if (s.tag == SectionTag::Active) {
      m.n_active_bases += nbases;
      m.open_boundaries_active += (s.to - s.from) - 1;
      m.complexity += std::max(0, nbases - 2);
    }
  }

  m.quadratic_part_end = 1;
  for (const auto& s : secs) {
    if (s.from != m.quadratic_part_end || s.tag != SectionTag::Active) break;
    bool all2 = true;
    for (int i = s.from; i < s.to && all2; ++i) all2 = m.gamma[i - 1] == 2;
    if (!all2) break;
    m.quadratic_part_end = s.to;
  }

  m.rho_a = ge.rho_a();

  bool ok = true;
  bool seen_nonactive = false;
  for (const auto& s : ge.sections) {
    if (s.tag == SectionTag::Active && seen_nonactive) ok = false;
    if (s.tag != SectionTag::Active) seen_nonactive = true;
  }
  std::set<std::pair<int, int>> const_letters;
  for (const auto& b : ge.bases) {
    if (b.kind != BaseKind::Constant) continue;
    if (ge.section_of_base(b).tag != SectionTag::Constant) ok = false;
    if (!const_letters.insert({b.letter.letter, b.letter.sign}).second) ok = false;
  }
  for (int i = 1; i <= ge.num_items && ok; ++i)
    if (ge.item_free(i) && ge.section_of_item(i).tag != SectionTag::Constant) ok = false;
  m.standard_form = ok;
  return m;
}

Excess excess(const GeneralisedEquation& ge, const SolutionTuple& H) {
  Excess e;
  int ra = ge.rho_a();
  for (int i = 1; i < ra; ++i) e.d_active += static_cast<long long>(H.of(i).size());
  long long covered = 0;
  for (const auto& b : ge.bases) {
    if (b.kind != BaseKind::Variable) continue;
    const BaseRec& d = ge.dual(b);
    bool in_active = b.beta <= ra || d.beta <= ra;
    if (!in_active) continue;
    for (int i = b.alpha; i < b.beta; ++i) covered += static_cast<long long>(H.of(i).size());
  }
  e.psi = covered - 2 * e.d_active;
  return e;
}

GeFromSystemResult ge_from_system(const MonoidSystem& system) {
  GeFromSystemResult res;
  GeneralisedEquation& ge = res.ge;
  ge.graph = system.graph;

  struct Occ {
    int var;
    int sign;
    int item;
  };
  std::vector<Occ> occs;
  res.var_occurrence.assign(system.num_vars + 1, ItemRef{0, 1});

  int pos = 1;
  for (const auto& eq : system.equations) {
    if (eq.lhs.empty() || eq.rhs.empty()) throw input_error("ge_from_system: empty side");
    int lhs_start = pos;
    auto lay = [&](const ItemWord& side) {
      for (const auto& t : side) {
        if (std::holds_alternative<ItemRef>(t)) {
          ItemRef r = std::get<ItemRef>(t);
          occs.push_back({r.item, r.sign, pos});
          if (res.var_occurrence[r.item].item == 0)
            res.var_occurrence[r.item] = ItemRef{pos, r.sign};
        } else {
          Syllable s = std::get<Syllable>(t);
          BaseRec cb;
          cb.id = ge.fresh_base_id();
          cb.kind = BaseKind::Constant;
          cb.letter = s;
          cb.alpha = pos;
          cb.beta = pos + 1;
          ge.bases.push_back(cb);
        }
        ++pos;
      }
    };
    lay(eq.lhs);
    int rhs_start = pos;
    lay(eq.rhs);
    int end = pos;

    BaseRec mu, dm;
    mu.id = ge.fresh_base_id();
    dm.id = ge.fresh_base_id();
    mu.kind = dm.kind = BaseKind::Variable;
    mu.alpha = lhs_start;
    mu.beta = rhs_start;
    dm.alpha = rhs_start;
    dm.beta = end;
    mu.eps = dm.eps = 1;
    mu.dual = dm.id;
    dm.dual = mu.id;
    ge.bases.push_back(mu);
    ge.bases.push_back(dm);

    ge.sections.push_back({lhs_start, end, SectionTag::Active});
  }
  ge.num_items = pos - 1;

  for (size_t i = 0; i < occs.size(); ++i)
    for (size_t j = i + 1; j < occs.size(); ++j) {
      if (occs[i].var != occs[j].var) continue;
      BaseRec mu, dm;
      mu.id = ge.fresh_base_id();
      dm.id = ge.fresh_base_id();
      mu.kind = dm.kind = BaseKind::Variable;
      mu.alpha = occs[i].item;
      mu.beta = occs[i].item + 1;
      mu.eps = occs[i].sign;
      dm.alpha = occs[j].item;
      dm.beta = occs[j].item + 1;
      dm.eps = occs[j].sign;
      mu.dual = dm.id;
      dm.dual = mu.id;
      ge.bases.push_back(mu);
      ge.bases.push_back(dm);
    }

  for (const auto& [x, y] : system.var_constraints)
    for (const auto& ox : occs)
      for (const auto& oy : occs)
        if (ox.var == x && oy.var == y && ox.item != oy.item)
          ge.constraints.insert({std::min(ox.item, oy.item), std::max(ox.item, oy.item)});
  star_close_constraints(ge);
  ge.validate();
  return res;
}

void collapse_boundary_range(GeneralisedEquation& ge, int from, int to) {
  int shift = to - from;
  if (shift <= 0) return;
  for (const auto& b : ge.bases)
    if (b.beta > from && b.alpha < to) throw internal_error("collapse range still has bases");
  for (const auto& c : ge.connections)
    if ((c.p > from && c.p < to) || (c.q > from && c.q < to))
      throw internal_error("collapse range still has connections");

  auto map_boundary = [&](int k) { return k <= from ? k : k - shift; };
  for (auto& b : ge.bases) {
    // Surviving bases lie entirely left (beta <= from) or right (alpha >= to).
    if (b.alpha >= to) b.alpha -= shift;
    if (b.beta >= to) b.beta -= shift;
  }
  for (auto& c : ge.connections) {
    c.p = map_boundary(c.p);
    c.q = map_boundary(c.q);
  }
  std::set<std::pair<int, int>> re;
  for (auto [i, j] : ge.constraints) {
    if ((i >= from && i < to) || (j >= from && j < to)) continue;  // items deleted
    int ni = i >= to ? i - shift : i;
    int nj = j >= to ? j - shift : j;
    re.insert({std::min(ni, nj), std::max(ni, nj)});
  }
  ge.constraints = std::move(re);

  // Section endpoints strictly inside the collapsed range fold onto `from`.
  auto map_endpoint = [&](int k) {
    if (k <= from) return k;
    if (k >= to) return k - shift;
    return from;
  };
  std::vector<Section> secs;
  for (auto s : ge.sections) {
    int nf = map_endpoint(s.from);
    int nt = map_endpoint(s.to);
    if (nf < nt) secs.push_back({nf, nt, s.tag});
  }
  ge.sections = std::move(secs);
  ge.num_items -= shift;
}

std::string print_item_word(const GeneralisedEquation& ge, const ItemWord& w) {
  std::ostringstream out;
  bool first = true;
  for (const auto& t : w) {
    if (!first) out << ' ';
    first = false;
    if (std::holds_alternative<ItemRef>(t)) {
      const ItemRef& r = std::get<ItemRef>(t);
      out << 'h' << r.item;
      if (r.sign < 0) out << "^-1";
    } else {
      const Syllable& s = std::get<Syllable>(t);
      out << ge.graph.letter_name(s.letter);
      if (s.sign < 0) out << "^-1";
    }
  }
  if (first) out << "1";
  return out.str();
}

std::string print_equation(const GeneralisedEquation& ge, const Equation& e) {
  return print_item_word(ge, e.lhs) + " = " + print_item_word(ge, e.rhs);
}

}  // namespace pcmr

namespace pcmr {

std::vector<SolutionTuple> bounded_solutions(const GeneralisedEquation& ge,
                                             SolutionMonoid monoid, size_t max_len, size_t cap) {
  // Sign-aware union-find over single-item basic equations.
  int n = ge.num_items;
  std::vector<int> root(n + 1), sgn(n + 1, 1);
  for (int i = 0; i <= n; ++i) root[i] = i;
  std::function<std::pair<int, int>(int)> find = [&](int i) -> std::pair<int, int> {
    if (root[i] == i) return {i, 1};
    auto [r, s] = find(root[i]);
    root[i] = r;
    sgn[i] *= s;
    return {r, sgn[i]};
  };
  auto unite = [&](int i, int si, int j, int sj) {
    auto [ri, ssi] = find(i);
    auto [rj, ssj] = find(j);
    if (ri == rj) return;
    root[ri] = rj;
    sgn[ri] = ssi * si * sj * ssj;
  };

  auto sys = associated_system(ge);
  for (const auto& e : sys) {
    const ItemWord& l = e.lhs;
    const ItemWord& r = e.rhs;
    if (l.size() == 1 && r.size() == 1 && std::holds_alternative<ItemRef>(l[0]) &&
        std::holds_alternative<ItemRef>(r[0])) {
      ItemRef a = std::get<ItemRef>(l[0]);
      ItemRef b = std::get<ItemRef>(r[0]);
      unite(a.item, a.sign, b.item, b.sign);
    }
  }

  std::vector<std::optional<Word>> forced(n + 1);
  for (const auto& e : sys) {
    if (e.kind != EquationKind::Coefficient) continue;
    ItemRef a = std::get<ItemRef>(e.lhs[0]);
    Syllable s = std::get<Syllable>(e.rhs[0]);
    auto [r, si] = find(a.item);
    Word v = Word::letter(s.letter, s.sign * a.sign * si);
    if (forced[r] && !(*forced[r] == v)) return {};
    forced[r] = v;
  }

  std::vector<int> reps;
  for (int i = 1; i <= n; ++i)
    if (find(i).first == i && !forced[i]) reps.push_back(i);

  // Greedy ordering: pick the class completing some equation soonest, so the
  // staged checks prune as early as possible.
  {
    auto classes_of = [&](const Equation& e) {
      std::set<int> out;
      for (const auto& w : {e.lhs, e.rhs})
        for (const auto& t : w)
          if (std::holds_alternative<ItemRef>(t)) {
            auto [r, s] = find(std::get<ItemRef>(t).item);
            (void)s;
            if (!forced[r]) out.insert(r);
          }
      return out;
    };
    std::vector<std::set<int>> eq_classes;
    for (const auto& e : sys) {
      auto c = classes_of(e);
      if (!c.empty()) eq_classes.push_back(std::move(c));
    }
    for (const auto& [i, j] : ge.constraints) {
      std::set<int> c;
      for (int x : {i, j}) {
        auto [r, s] = find(x);
        (void)s;
        if (!forced[r]) c.insert(r);
      }
      if (!c.empty()) eq_classes.push_back(std::move(c));
    }
    std::vector<int> ordered;
    std::set<int> placed;
    while (ordered.size() < reps.size()) {
      int best = -1;
      long best_score = std::numeric_limits<long>::max();
      for (int r : reps) {
        if (placed.count(r)) continue;
        long score = std::numeric_limits<long>::max();
        for (const auto& c : eq_classes) {
          if (!c.count(r)) continue;
          long missing = 0;
          for (int x : c)
            if (!placed.count(x) && x != r) ++missing;
          score = std::min(score, missing);
        }
        if (score < best_score || (score == best_score && (best < 0 || r < best))) {
          best_score = score;
          best = r;
        }
      }
      ordered.push_back(best);
      placed.insert(best);
    }
    reps = std::move(ordered);
  }
  std::vector<int> rep_order(n + 1, -1);  // class root -> position in reps
  for (size_t k = 0; k < reps.size(); ++k) rep_order[reps[k]] = static_cast<int>(k);

  // Equation/constraint readiness: the latest rep its items depend on.
  auto ready_at = [&](const ItemWord& w) {
    int at = -1;
    for (const Term& t : w)
      if (std::holds_alternative<ItemRef>(t)) {
        auto [r, s] = find(std::get<ItemRef>(t).item);
        (void)s;
        if (!forced[r]) at = std::max(at, rep_order[r]);
      }
    return at;
  };
  std::vector<std::vector<const Equation*>> eq_ready(reps.size() + 1);
  for (const auto& e : sys) {
    int at = std::max(ready_at(e.lhs), ready_at(e.rhs));
    eq_ready[at + 1].push_back(&e);
  }
  std::vector<std::vector<std::pair<int, int>>> re_ready(reps.size() + 1);
  for (const auto& [i, j] : ge.constraints) {
    auto [ri, si] = find(i);
    auto [rj, sj] = find(j);
    (void)si;
    (void)sj;
    int at = std::max(forced[ri] ? -1 : rep_order[ri], forced[rj] ? -1 : rep_order[rj]);
    re_ready[at + 1].push_back({i, j});
  }

  std::vector<Word> values;
  for (const Word& w : oracle::all_geodesics(ge.graph, max_len, cap))
    if (!w.empty()) values.push_back(w);

  SolutionTuple cur;
  cur.words.assign(n, Word());
  auto assign_class = [&](int rep, const Word& v) {
    for (int i = 1; i <= n; ++i) {
      auto [r, s] = find(i);
      if (r != rep) continue;
      cur.words[i - 1] = s > 0 ? v : v.inverse();
    }
  };
  for (int r = 1; r <= n; ++r)
    if (forced[r] && find(r).first == r) assign_class(r, *forced[r]);

  auto stage_ok = [&](size_t stage) {
    for (const Equation* e : eq_ready[stage]) {
      Word l = eval_item_word(e->lhs, cur);
      Word r = eval_item_word(e->rhs, cur);
      if (!is_geodesic(ge.graph, l) || !is_geodesic(ge.graph, r)) return false;
      bool eq = monoid == SolutionMonoid::F ? l == r : trace_equal(ge.graph, l, r);
      if (!eq) return false;
    }
    for (auto [i, j] : re_ready[stage])
      if (!disjoint_commute(ge.graph, cur.words[i - 1], cur.words[j - 1])) return false;
    return true;
  };

  std::vector<SolutionTuple> out;
  size_t visited = 0;
  std::function<void(size_t)> rec = [&](size_t k) {
    if (++visited > cap) throw budget_error("bounded_solutions: cap exceeded");
    if (k == reps.size()) {
      // The staged checks cover every equation and constraint; components
      // are nonempty geodesics by construction of the value set.
      out.push_back(cur);
      return;
    }
    for (const Word& v : values) {
      assign_class(reps[k], v);
      if (stage_ok(k + 1)) rec(k + 1);
    }
  };
  if (!stage_ok(0)) return {};
  rec(0);
  return out;
}

}  // namespace pcmr
