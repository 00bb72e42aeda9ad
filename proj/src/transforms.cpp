#include "pcmr/transforms.h"

#include <algorithm>

#include "pcmr/group.h"
#include "pcmr/oracle.h"

namespace pcmr {

WordMap WordMap::identity(int items) {
  WordMap m;
  m.source_items = m.target_items = items;
  m.assign.resize(items);
  for (int i = 1; i <= items; ++i) m.assign[i - 1] = {ItemRef{i, 1}};
  return m;
}

SolutionTuple WordMap::pull_back(const SolutionTuple& target) const {
  if (static_cast<int>(target.words.size()) != target_items)
    throw internal_error("word map arity mismatch");
  SolutionTuple src;
  src.words.reserve(source_items);
  for (int i = 1; i <= source_items; ++i)
    src.words.push_back(eval_item_word(assign[i - 1], target));
  return src;
}

WordMap compose(const WordMap& map_first, const WordMap& map_second) {
  if (map_first.target_items != map_second.source_items)
    throw internal_error("word map composition mismatch");
  WordMap out;
  out.source_items = map_first.source_items;
  out.target_items = map_second.target_items;
  out.assign.resize(out.source_items);
  for (int i = 1; i <= out.source_items; ++i) {
    ItemWord expanded;
    for (const Term& t : map_first.assign[i - 1]) {
      if (std::holds_alternative<Syllable>(t)) {
        expanded.push_back(t);
        continue;
      }
      ItemRef r = std::get<ItemRef>(t);
      ItemWord piece = map_second.assign[r.item - 1];
      if (r.sign < 0) piece = item_word_inverse(piece);
      expanded.insert(expanded.end(), piece.begin(), piece.end());
    }
    out.assign[i - 1] = std::move(expanded);
  }
  return out;
}

SolutionTuple transport_apply(const TransportStep& step, const SolutionTuple& H) {
  switch (step.kind) {
    case TransportStep::Kind::Identity:
      return H;
    case TransportStep::Kind::SplitItem: {
      long long la = static_cast<long long>(eval_item_word(step.len_a, H).size());
      long long lb = static_cast<long long>(eval_item_word(step.len_b, H).size());
      long long piece = la - lb;
      const Word& v = H.of(step.item);
      long long left = step.from_right ? static_cast<long long>(v.size()) - piece : piece;
      if (left <= 0 || left >= static_cast<long long>(v.size()))
        throw internal_error("transport split out of range");
      SolutionTuple out;
      for (int i = 1; i <= static_cast<int>(H.words.size()); ++i) {
        if (i == step.item) {
          out.words.push_back(v.subword(0, static_cast<size_t>(left)));
          out.words.push_back(v.subword(static_cast<size_t>(left), v.size()));
        } else {
          out.words.push_back(H.of(i));
        }
      }
      return out;
    }
    case TransportStep::Kind::DeleteRange: {
      SolutionTuple out;
      for (int i = 1; i <= static_cast<int>(H.words.size()); ++i)
        if (i < step.from || i >= step.to) out.words.push_back(H.of(i));
      return out;
    }
    case TransportStep::Kind::Permute: {
      SolutionTuple out;
      out.words.resize(H.words.size());
      for (int i = 1; i <= static_cast<int>(H.words.size()); ++i)
        out.words[step.new_of_old[i - 1] - 1] = H.of(i);
      return out;
    }
    case TransportStep::Kind::MergeItem: {
      SolutionTuple out;
      for (int i = 1; i <= static_cast<int>(H.words.size()); ++i)
        if (i != step.item) out.words.push_back(H.of(i));
      return out;
    }
  }
  throw internal_error("unreachable");
}

namespace {

// Connections of mu as (boundary on mu, boundary on the dual).
std::vector<std::pair<int, int>> connections_on(const GeneralisedEquation& ge, int mu_id) {
  std::vector<std::pair<int, int>> out;
  int dual_id = ge.base(mu_id).dual;
  for (const auto& c : ge.connections) {
    if (c.base == mu_id)
      out.emplace_back(c.p, c.q);
    else if (c.base == dual_id)
      out.emplace_back(c.q, c.p);
  }
  return out;
}

void erase_base(GeneralisedEquation& ge, int id) {
  ge.bases.erase(
      std::remove_if(ge.bases.begin(), ge.bases.end(), [&](const BaseRec& b) { return b.id == id; }),
      ge.bases.end());
}

TransportStep identity_step() { return {}; }

}  // namespace

TransformOutcome et1_cut(const GeneralisedEquation& ge0, int p, int mu_id) {
  auto qopt = ge0.connection_of(p, mu_id);
  if (!qopt) throw input_error("et1: no boundary connection at the given boundary");
  int q = *qopt;

  GeneralisedEquation ge = ge0;
  BaseRec mu = ge.base(mu_id);
  BaseRec dm = ge.dual(mu);
  auto conns = connections_on(ge, mu_id);

  ge.remove_connections_of(mu_id);
  erase_base(ge, mu.id);
  erase_base(ge, dm.id);

  BaseRec mu1, mu2, dm1, dm2;
  mu1.id = ge.fresh_base_id();
  mu2.id = ge.fresh_base_id();
  dm1.id = ge.fresh_base_id();
  dm2.id = ge.fresh_base_id();
  for (BaseRec* b : {&mu1, &mu2}) {
    b->kind = BaseKind::Variable;
    b->eps = mu.eps;
    b->parent = mu.parent >= 0 ? mu.parent : mu.id;
  }
  for (BaseRec* b : {&dm1, &dm2}) {
    b->kind = BaseKind::Variable;
    b->eps = dm.eps;
    b->parent = dm.parent >= 0 ? dm.parent : dm.id;
  }
  mu1.alpha = mu.alpha;
  mu1.beta = p;
  mu2.alpha = p;
  mu2.beta = mu.beta;
  if (mu.eps == dm.eps) {
    dm1.alpha = dm.alpha;
    dm1.beta = q;
    dm2.alpha = q;
    dm2.beta = dm.beta;
  } else {
    dm1.alpha = q;
    dm1.beta = dm.beta;
    dm2.alpha = dm.alpha;
    dm2.beta = q;
  }
  mu1.dual = dm1.id;
  dm1.dual = mu1.id;
  mu2.dual = dm2.id;
  dm2.dual = mu2.id;
  ge.bases.push_back(mu1);
  ge.bases.push_back(mu2);
  ge.bases.push_back(dm1);
  ge.bases.push_back(dm2);

  for (auto [pp, qq] : conns) {
    if (pp == p) continue;  // became the shared endpoint of the pieces
    if (pp < p)
      ge.add_connection(pp, mu1.id, qq);
    else
      ge.add_connection(pp, mu2.id, qq);
  }

  Branch br;
  br.ge = std::move(ge);
  br.ge.validate();
  br.map = WordMap::identity(ge0.num_items);
  br.transport.push_back(identity_step());
  br.label = "ET1 cut base " + std::to_string(mu_id) + " at " + std::to_string(p);
  return TransformOutcome{{std::move(br)}};
}

namespace {

// Boundary map through mu onto its dual: endpoints by orientation, interior
// boundaries by connections; nullopt when untied.
std::optional<int> mu_boundary_image(const GeneralisedEquation& ge, int mu_id, int b) {
  const BaseRec& mu = ge.base(mu_id);
  const BaseRec& dm = ge.dual(mu);
  bool same = mu.eps == dm.eps;
  if (b == mu.alpha) return same ? dm.alpha : dm.beta;
  if (b == mu.beta) return same ? dm.beta : dm.alpha;
  return ge.connection_of(b, mu_id);
}

}  // namespace

TransformOutcome et2_transfer(const GeneralisedEquation& ge0, int lambda_id, int mu_id) {
  const BaseRec& mu0 = ge0.base(mu_id);
  const BaseRec& la0 = ge0.base(lambda_id);
  if (!(mu0.alpha <= la0.alpha && la0.beta <= mu0.beta))
    throw input_error("et2: base not contained in the carrier");
  auto fa = mu_boundary_image(ge0, mu_id, la0.alpha);
  auto fb = mu_boundary_image(ge0, mu_id, la0.beta);
  if (!fa || !fb) throw input_error("et2: endpoints of the transferred base are not mu-tied");
  for (auto [pp, qq] : connections_on(ge0, lambda_id)) {
    (void)qq;
    if (!mu_boundary_image(ge0, mu_id, pp))
      throw input_error("et2: a lambda-tied boundary is not mu-tied");
  }

  GeneralisedEquation ge = ge0;
  bool same = ge.base(mu_id).eps == ge.dual(ge.base(mu_id)).eps;

  auto lconns = connections_on(ge, lambda_id);
  int lambda_dual = ge.base(lambda_id).dual;
  ge.connections.erase(std::remove_if(ge.connections.begin(), ge.connections.end(),
                                      [&](const BoundaryConnection& c) {
                                        return c.base == lambda_id || c.base == lambda_dual;
                                      }),
                       ge.connections.end());

  BaseRec& la = ge.base(lambda_id);
  if (same) {
    la.alpha = *fa;
    la.beta = *fb;
  } else {
    la.alpha = *fb;
    la.beta = *fa;
    la.eps = -la.eps;
  }
  if (la.alpha >= la.beta) throw internal_error("et2: transferred base collapsed");

  for (auto [pp, qq] : lconns) {
    auto np = mu_boundary_image(ge, mu_id, pp);
    ge.add_connection(*np, lambda_id, qq);
  }

  Branch br;
  br.ge = std::move(ge);
  br.ge.validate();
  br.map = WordMap::identity(ge0.num_items);
  br.transport.push_back(identity_step());
  br.label = "ET2 transfer base " + std::to_string(lambda_id);
  return TransformOutcome{{std::move(br)}};
}

TransformOutcome et3_remove_matched(const GeneralisedEquation& ge0, int mu_id) {
  if (!ge0.matched_pair(ge0.base(mu_id))) throw input_error("et3: bases are not matched");
  GeneralisedEquation ge = ge0;
  int dual = ge.base(mu_id).dual;
  ge.remove_connections_of(mu_id);
  erase_base(ge, mu_id);
  erase_base(ge, dual);
  Branch br;
  br.ge = std::move(ge);
  br.ge.validate();
  br.map = WordMap::identity(ge0.num_items);
  br.transport.push_back(identity_step());
  br.label = "ET3 remove matched pair " + std::to_string(mu_id);
  return TransformOutcome{{std::move(br)}};
}

TransformOutcome et4_remove_linear(const GeneralisedEquation& ge0, int mu_id) {
  const BaseRec mu = ge0.base(mu_id);
  const BaseRec dm = ge0.dual(mu);
  if (mu.kind != BaseKind::Variable) throw input_error("et4: constant base");
  for (const auto& b : ge0.bases) {
    if (b.id == mu.id) continue;
    int lo = std::max(b.alpha, mu.alpha), hi = std::min(b.beta, mu.beta);
    if (lo < hi) {
      if (b.kind == BaseKind::Constant)
        throw input_error("et4: constant base inside the removed span");
      throw input_error("et4: another variable base meets the removed span");
    }
  }
  std::vector<int> t(mu.beta - mu.alpha + 1);
  for (int b = mu.alpha; b <= mu.beta; ++b) {
    auto img = mu_boundary_image(ge0, mu_id, b);
    if (!img) throw input_error("et4: untied interior boundary");
    t[b - mu.alpha] = *img;
  }

  GeneralisedEquation ge = ge0;
  ge.remove_connections_of(mu_id);
  erase_base(ge, mu.id);
  erase_base(ge, dm.id);

  WordMap map;
  map.source_items = ge0.num_items;
  map.assign.resize(ge0.num_items);
  bool same = mu.eps == dm.eps;
  for (int j = 1; j <= ge0.num_items; ++j) {
    if (j < mu.alpha || j >= mu.beta) {
      map.assign[j - 1] = {ItemRef{j, 1}};
    } else {
      int tj = t[j - mu.alpha], tj1 = t[j - mu.alpha + 1];
      map.assign[j - 1] =
          same ? ge0.h_interval(tj, tj1) : item_word_inverse(ge0.h_interval(tj1, tj));
    }
  }

  collapse_boundary_range(ge, mu.alpha, mu.beta);
  ge.validate();

  int shift = mu.beta - mu.alpha;
  for (auto& w : map.assign)
    for (auto& term : w)
      if (std::holds_alternative<ItemRef>(term)) {
        ItemRef& r = std::get<ItemRef>(term);
        if (r.item >= mu.beta)
          r.item -= shift;
        else if (r.item >= mu.alpha)
          throw internal_error("et4: image inside the deleted span");
      }
  map.target_items = ge.num_items;

  Branch br;
  br.ge = std::move(ge);
  br.map = std::move(map);
  TransportStep del;
  del.kind = TransportStep::Kind::DeleteRange;
  del.from = mu.alpha;
  del.to = mu.beta;
  br.transport.push_back(del);
  br.label = "ET4 remove base " + std::to_string(mu_id);
  return TransformOutcome{{std::move(br)}};
}

void insert_boundary(GeneralisedEquation& ge, int q) {
  if (!(1 <= q && q <= ge.num_items)) throw internal_error("insert_boundary out of range");
  for (auto& b : ge.bases) {
    if (b.alpha > q) ++b.alpha;
    if (b.beta > q) ++b.beta;
  }
  for (auto& c : ge.connections) {
    if (c.p > q) ++c.p;
    if (c.q > q) ++c.q;
  }
  std::set<std::pair<int, int>> re;
  for (auto [i, j] : ge.constraints) {
    std::vector<int> is =
        i == q ? std::vector<int>{q, q + 1} : std::vector<int>{i > q ? i + 1 : i};
    std::vector<int> js =
        j == q ? std::vector<int>{q, q + 1} : std::vector<int>{j > q ? j + 1 : j};
    for (int ni : is)
      for (int nj : js)
        if (ni != nj) re.insert({std::min(ni, nj), std::max(ni, nj)});
  }
  ge.constraints = std::move(re);
  for (auto& s : ge.sections) {
    if (s.from > q) ++s.from;
    if (s.to > q) ++s.to;
  }
  ++ge.num_items;
}

TransformOutcome et5_tie(const GeneralisedEquation& ge0, int p, int mu_id,
                         size_t properness_bound) {
  const BaseRec& mu = ge0.base(mu_id);
  const BaseRec& dm = ge0.dual(mu);
  if (!ge0.boundary_intersects(p, mu)) throw input_error("et5: boundary does not intersect base");
  if (ge0.connection_of(p, mu_id)) throw input_error("et5: boundary already tied");

  TransformOutcome out;

  for (int q = dm.alpha + 1; q < dm.beta; ++q) {
    GeneralisedEquation ge = ge0;
    ge.add_connection(p, mu_id, q);
    if (!is_formally_consistent(ge).ok) continue;
    star_close_constraints(ge);
    Branch br;
    br.map = WordMap::identity(ge0.num_items);
    br.transport.push_back(identity_step());
    br.label = "ET5 tie " + std::to_string(p) + " in " + std::to_string(mu_id) +
               " to existing " + std::to_string(q);
    br.properness = Properness::Unknown;
    if (properness_bound > 0) {
      Equation beq;
      if (mu.eps == dm.eps) {
        beq.lhs = ge0.h_interval(mu.alpha, p);
        beq.rhs = ge0.h_interval(dm.alpha, q);
      } else {
        beq.lhs = ge0.h_interval(mu.alpha, p);
        beq.rhs = item_word_inverse(ge0.h_interval(q, dm.beta));
      }
      try {
        for (const auto& sol : solve_relaxed_bounded(ge0, properness_bound)) {
          Word l = eval_item_word(beq.lhs, sol), r = eval_item_word(beq.rhs, sol);
          if (!group_equal(ge0.graph, l, r)) {
            br.properness = Properness::Proper;
            break;
          }
        }
      } catch (const budget_error&) {
        br.properness = Properness::Unknown;
      }
    }
    br.ge = std::move(ge);
    br.ge.validate();
    out.branches.push_back(std::move(br));
  }

  for (int q = dm.alpha; q < dm.beta; ++q) {
    GeneralisedEquation ge = ge0;
    insert_boundary(ge, q);
    int np = p > q ? p + 1 : p;
    int nq = q + 1;
    ge.add_connection(np, mu_id, nq);
    if (!is_formally_consistent(ge).ok) continue;
    star_close_constraints(ge);

    WordMap map;
    map.source_items = ge0.num_items;
    map.target_items = ge.num_items;
    map.assign.resize(ge0.num_items);
    for (int i = 1; i <= ge0.num_items; ++i) {
      if (i < q)
        map.assign[i - 1] = {ItemRef{i, 1}};
      else if (i == q)
        map.assign[i - 1] = {ItemRef{q, 1}, ItemRef{q + 1, 1}};
      else
        map.assign[i - 1] = {ItemRef{i + 1, 1}};
    }

    TransportStep split;
    split.kind = TransportStep::Kind::SplitItem;
    split.item = q;
    split.len_a = ge0.h_interval(mu.alpha, p);
    if (mu.eps == dm.eps) {
      split.len_b = ge0.h_interval(dm.alpha, q);
      split.from_right = false;
    } else {
      split.len_b = ge0.h_interval(q + 1, dm.beta);
      split.from_right = true;
    }

    Branch br;
    br.ge = std::move(ge);
    br.ge.validate();
    br.map = std::move(map);
    br.transport.push_back(split);
    br.label = "ET5 tie " + std::to_string(p) + " in " + std::to_string(mu_id) +
               " to new boundary inside item " + std::to_string(q);
    out.branches.push_back(std::move(br));
  }

  if (out.branches.empty()) throw internal_error("et5 produced no consistent branch");
  return out;
}

TransformOutcome compose_steps(const GeneralisedEquation& start, const std::vector<Step>& steps) {
  struct Pending {
    GeneralisedEquation ge;
    WordMap map;
    std::vector<TransportStep> transport;
    Properness prop = Properness::Iso;
    EdgeKind kind = EdgeKind::Principal;
    std::string label;
  };
  std::vector<Pending> cur;
  cur.push_back(
      {start, WordMap::identity(start.num_items), {}, Properness::Iso, EdgeKind::Principal, ""});
  for (const Step& step : steps) {
    std::vector<Pending> next;
    for (auto& pend : cur) {
      TransformOutcome sub = step(pend.ge);
      for (auto& br : sub.branches) {
        Pending n;
        n.ge = br.ge;
        n.map = compose(pend.map, br.map);
        n.transport = pend.transport;
        n.transport.insert(n.transport.end(), br.transport.begin(), br.transport.end());
        n.prop = std::max(pend.prop, br.properness);
        n.kind = br.kind == EdgeKind::Auxiliary ? EdgeKind::Auxiliary : pend.kind;
        n.label = pend.label.empty() ? br.label : pend.label + "; " + br.label;
        next.push_back(std::move(n));
      }
    }
    cur = std::move(next);
  }
  TransformOutcome out;
  for (auto& pend : cur) {
    Branch br;
    br.ge = std::move(pend.ge);
    br.map = std::move(pend.map);
    br.transport = std::move(pend.transport);
    br.properness = pend.prop;
    br.kind = pend.kind;
    br.label = std::move(pend.label);
    out.branches.push_back(std::move(br));
  }
  return out;
}

void normalize_sections(GeneralisedEquation& ge) {
  std::vector<Section> out;
  for (const auto& s : ge.sections) {
    int start = s.from;
    for (int b = s.from + 1; b <= s.to; ++b) {
      if (b == s.to || !ge.boundary_open(b)) {
        out.push_back({start, b, s.tag});
        start = b;
      }
    }
  }
  ge.sections = std::move(out);
}

TransformOutcome d1_close(const GeneralisedEquation& ge0, int from, int to,
                          size_t properness_bound) {
  struct Work {
    Branch br;
    int from, to;
  };
  std::vector<Work> queue;
  {
    Branch root;
    root.ge = ge0;
    root.map = WordMap::identity(ge0.num_items);
    queue.push_back({std::move(root), from, to});
  }
  TransformOutcome done;
  size_t guard = 0;
  while (!queue.empty()) {
    if (++guard > 10000) throw internal_error("d1 failed to converge");
    Work w = std::move(queue.back());
    queue.pop_back();
    int bnd = -1;
    int spanning_base = -1;
    for (int cand : {w.from, w.to}) {
      for (const auto& b : w.br.ge.bases)
        if (b.kind == BaseKind::Variable && w.br.ge.boundary_intersects(cand, b)) {
          bnd = cand;
          spanning_base = b.id;
          break;
        }
      if (bnd >= 0) break;
    }
    if (bnd < 0) {
      done.branches.push_back(std::move(w.br));
      continue;
    }
    TransformOutcome sub;
    if (!w.br.ge.connection_of(bnd, spanning_base))
      sub = et5_tie(w.br.ge, bnd, spanning_base, properness_bound);
    else
      sub = et1_cut(w.br.ge, bnd, spanning_base);
    for (auto& nb : sub.branches) {
      Work nw;
      int inserted_at = -1;
      if (!nb.transport.empty() && nb.transport.back().kind == TransportStep::Kind::SplitItem)
        inserted_at = nb.transport.back().item;
      nw.from = (inserted_at >= 0 && w.from > inserted_at) ? w.from + 1 : w.from;
      nw.to = (inserted_at >= 0 && w.to > inserted_at) ? w.to + 1 : w.to;
      nw.br.ge = std::move(nb.ge);
      nw.br.map = compose(w.br.map, nb.map);
      nw.br.transport = w.br.transport;
      nw.br.transport.insert(nw.br.transport.end(), nb.transport.begin(), nb.transport.end());
      nw.br.properness = std::max(w.br.properness, nb.properness);
      nw.br.kind = w.br.kind;
      nw.br.label = w.br.label.empty() ? nb.label : w.br.label + "; " + nb.label;
      queue.push_back(std::move(nw));
    }
  }
  return done;
}

namespace {

TransformOutcome d2_move(const GeneralisedEquation& ge0, int from, int to, bool to_front,
                         SectionTag retag, bool apply_retag) {
  GeneralisedEquation ge = ge0;
  normalize_sections(ge);
  if (ge.boundary_open(from) || ge.boundary_open(to))
    throw input_error("d2: section endpoints are open");

  int len = to - from;
  std::vector<int> new_of_old(ge.num_items);
  if (to_front) {
    for (int i = from; i < to; ++i) new_of_old[i - 1] = i - from + 1;
    int pos = len + 1;
    for (int i = 1; i <= ge.num_items; ++i) {
      if (i >= from && i < to) continue;
      new_of_old[i - 1] = pos++;
    }
  } else {
    int pos = 1;
    for (int i = 1; i <= ge.num_items; ++i) {
      if (i >= from && i < to) continue;
      new_of_old[i - 1] = pos++;
    }
    for (int i = from; i < to; ++i) new_of_old[i - 1] = ge.num_items - len + (i - from) + 1;
  }

  GeneralisedEquation out;
  out.graph = ge.graph;
  out.num_items = ge.num_items;
  out.next_base_id = ge.next_base_id;
  auto item_image = [&](int i) { return new_of_old[i - 1]; };
  for (auto b : ge.bases) {
    int na = item_image(b.alpha);
    int nb = item_image(b.beta - 1) + 1;
    b.alpha = na;
    b.beta = nb;
    out.bases.push_back(b);
  }
  for (auto c : ge.connections) {
    c.p = item_image(c.p - 1) + 1;
    c.q = item_image(c.q - 1) + 1;
    out.connections.push_back(c);
  }
  for (auto [i, j] : ge.constraints) {
    int ni = item_image(i), nj = item_image(j);
    out.constraints.insert({std::min(ni, nj), std::max(ni, nj)});
  }
  std::vector<Section> moved, rest;
  for (auto s : ge.sections) {
    if (s.from >= from && s.to <= to)
      moved.push_back(s);
    else if (s.to <= from || s.from >= to)
      rest.push_back(s);
    else
      throw input_error("d2: range is not a union of stored sections");
  }
  if (moved.empty()) throw input_error("d2: empty range");
  std::vector<Section> order;
  if (to_front) {
    order = moved;
    order.insert(order.end(), rest.begin(), rest.end());
  } else {
    order = rest;
    order.insert(order.end(), moved.begin(), moved.end());
  }
  int pos = 1;
  for (auto s : order) {
    int len_s = s.to - s.from;
    Section ns{pos, pos + len_s, s.tag};
    bool was_moved = s.from >= from && s.to <= to;
    if (was_moved && apply_retag) ns.tag = retag;
    out.sections.push_back(ns);
    pos += len_s;
  }
  out.validate();

  WordMap map;
  map.source_items = map.target_items = ge.num_items;
  map.assign.resize(ge.num_items);
  for (int i = 1; i <= ge.num_items; ++i) map.assign[i - 1] = {ItemRef{item_image(i), 1}};

  Branch br;
  br.ge = std::move(out);
  br.map = std::move(map);
  TransportStep perm;
  perm.kind = TransportStep::Kind::Permute;
  perm.new_of_old = new_of_old;
  br.transport.push_back(perm);
  br.label = std::string("D2 move [") + std::to_string(from) + "," + std::to_string(to) + ") " +
             (to_front ? "to front" : "to end");
  return TransformOutcome{{std::move(br)}};
}

}  // namespace

TransformOutcome d2_to_front(const GeneralisedEquation& ge, int from, int to) {
  return d2_move(ge, from, to, true, SectionTag::Active, false);
}

TransformOutcome d2_to_end(const GeneralisedEquation& ge, int from, int to, SectionTag retag) {
  return d2_move(ge, from, to, false, retag, true);
}

CutCompletion d3_complete_cut(const GeneralisedEquation& ge0) {
  CutCompletion res;
  res.ge = ge0;
  for (auto& b : res.ge.bases) b.parent = b.id;
  size_t guard = 0;
  while (!res.ge.connections.empty()) {
    if (++guard > 10000) throw internal_error("d3 failed to converge");
    const BoundaryConnection* pick = nullptr;
    for (const auto& c : res.ge.connections)
      if (!pick || std::tie(c.base, c.p) < std::tie(pick->base, pick->p)) pick = &c;
    auto out = et1_cut(res.ge, pick->p, pick->base);
    res.ge = std::move(out.branches[0].ge);
  }
  res.map = WordMap::identity(ge0.num_items);
  for (const auto& b : res.ge.bases) res.root_of[b.id] = b.parent >= 0 ? b.parent : b.id;
  return res;
}

KernelResult d4_kernel(const GeneralisedEquation& ge0, const std::vector<int>& preferred_order) {
  KernelResult res;
  res.kernel = ge0.connections.empty() ? ge0 : d3_complete_cut(ge0).ge;

  auto eliminable = [&](const BaseRec& b, char& tag) {
    if (b.kind != BaseKind::Variable) return false;
    if (!res.kernel.base_active(b)) return false;
    for (int i = b.alpha; i < b.beta; ++i)
      if (res.kernel.gamma(i) == 1) {
        tag = 'a';
        return true;
      }
    for (int bd : {b.alpha, b.beta}) {
      if (bd == 1 || bd == res.kernel.num_items + 1) continue;
      bool touches_other = false;
      for (const auto& o : res.kernel.bases) {
        if (o.id == b.id) continue;
        if (res.kernel.boundary_touches(bd, o) || res.kernel.boundary_intersects(bd, o))
          touches_other = true;
      }
      if (!touches_other) {
        tag = 'b';
        return true;
      }
    }
    return false;
  };

  size_t guard = 0;
  for (;;) {
    if (++guard > 10000) throw internal_error("d4 failed to converge");
    int pick = -1;
    char tag = 'a';
    for (int id : preferred_order) {
      char t;
      if (res.kernel.has_base(id) && eliminable(res.kernel.base(id), t)) {
        pick = id;
        tag = t;
        break;
      }
    }
    if (pick < 0) {
      for (const auto& b : res.kernel.bases) {
        char t;
        if (eliminable(b, t) && (pick < 0 || b.id < pick)) {
          pick = b.id;
          tag = t;
        }
      }
    }
    if (pick < 0) break;

    const BaseRec b = res.kernel.base(pick);
    const BaseRec d = res.kernel.dual(b);
    Elimination el;
    el.base_id = b.id;
    el.dual_id = d.id;
    el.case_tag = tag;
    if (tag == 'a') {
      int li = -1;
      for (int i = b.alpha; i < b.beta; ++i)
        if (res.kernel.gamma(i) == 1) li = i;
      ItemWord lhs = res.kernel.h_of_base(b);
      ItemWord rhs = res.kernel.h_of_base(d);
      ItemWord prefix, suffix;
      bool seen = false;
      int li_sign = 1;
      for (const Term& t : lhs) {
        if (std::holds_alternative<ItemRef>(t) && std::get<ItemRef>(t).item == li && !seen) {
          seen = true;
          li_sign = std::get<ItemRef>(t).sign;
          continue;
        }
        (seen ? suffix : prefix).push_back(t);
      }
      ItemWord w = item_word_concat(item_word_inverse(prefix),
                                    item_word_concat(rhs, item_word_inverse(suffix)));
      if (li_sign < 0) w = item_word_inverse(w);
      el.relation = "h" + std::to_string(li) + " = " + print_item_word(res.kernel, w);
      for (auto [i, j] : res.kernel.constraints)
        if (i == li || j == li)
          res.commutators.push_back("[h" + std::to_string(i == li ? j : i) + ", " +
                                    print_item_word(res.kernel, w) + "]");
    } else {
      el.relation = "boundary elimination of base " + std::to_string(b.id);
    }
    res.log.push_back(el);
    res.elimination_order.push_back(b.id);
    res.kernel.remove_connections_of(b.id);
    erase_base(res.kernel, b.id);
    if (d.id != b.id) erase_base(res.kernel, d.id);
  }

  for (int i = 1; i <= res.kernel.num_items; ++i) {
    bool in_kernel = res.kernel.item_constant(i);
    for (const auto& b : res.kernel.bases)
      if (res.kernel.item_in_base(i, b)) in_kernel = true;
    if (!in_kernel) res.free_items.push_back(i);
  }
  return res;
}

bool item_in_kernel(const KernelResult& k, int item) {
  return std::find(k.free_items.begin(), k.free_items.end(), item) == k.free_items.end();
}

std::optional<CarrierInfo> carrier_info(const GeneralisedEquation& ge, int forced_carrier) {
  CarrierInfo info;
  if (forced_carrier >= 0) {
    info.carrier = forced_carrier;
  } else {
    for (const auto& b : ge.bases) {
      if (b.kind != BaseKind::Variable || b.alpha != 1 || !ge.base_active(b)) continue;
      if (info.carrier < 0) {
        info.carrier = b.id;
        continue;
      }
      const BaseRec& cur = ge.base(info.carrier);
      if (b.beta > cur.beta || (b.beta == cur.beta && b.id < cur.id)) info.carrier = b.id;
    }
    if (info.carrier < 0) return std::nullopt;
  }
  const BaseRec& mu = ge.base(info.carrier);
  for (const auto& b : ge.bases) {
    if (b.id == mu.id || b.kind != BaseKind::Variable) continue;
    if (!ge.base_active(b)) continue;
    if (b.beta <= mu.beta) info.transfer_bases.push_back(b.id);
  }
  std::sort(info.transfer_bases.begin(), info.transfer_bases.end());
  return info;
}

TransformOutcome d5_entire(const GeneralisedEquation& ge0, size_t properness_bound,
                           int forced_carrier) {
  auto m0 = metrics(ge0);
  for (int i = 1; i <= ge0.num_items; ++i)
    if (ge0.item_active(i) && m0.gamma[i - 1] < 2)
      throw input_error("d5: active item covered less than twice");
  auto info = carrier_info(ge0, forced_carrier);
  if (!info) throw input_error("d5: no leading base");
  int mu_id = info->carrier;
  // The transfer set is fixed at entry; transferred bases must not re-qualify.
  const std::vector<int> transfer_ids = info->transfer_bases;

  auto needs_tie = [mu_id, &transfer_ids](const GeneralisedEquation& ge) -> std::optional<int> {
    const BaseRec& mu = ge.base(mu_id);
    for (int tb : transfer_ids) {
      const BaseRec& la = ge.base(tb);
      for (int bnd = la.alpha; bnd <= la.beta; ++bnd) {
        if (!(mu.alpha < bnd && bnd < mu.beta)) continue;
        if (!ge.connection_of(bnd, mu_id)) return bnd;
      }
    }
    return std::nullopt;
  };

  struct Pend {
    GeneralisedEquation ge;
    WordMap map;
    std::vector<TransportStep> transport;
    Properness prop = Properness::Iso;
    std::string label;
  };
  std::vector<Pend> work{{ge0, WordMap::identity(ge0.num_items), {}, Properness::Iso, "D5"}};
  std::vector<Pend> tied;
  size_t guard = 0;
  while (!work.empty()) {
    if (++guard > 100000) throw internal_error("d5 tie stage failed to converge");
    Pend w = std::move(work.back());
    work.pop_back();
    auto bnd = needs_tie(w.ge);
    if (!bnd) {
      tied.push_back(std::move(w));
      continue;
    }
    auto sub = et5_tie(w.ge, *bnd, mu_id, properness_bound);
    for (auto& br : sub.branches) {
      Pend n;
      n.ge = std::move(br.ge);
      n.map = compose(w.map, br.map);
      n.transport = w.transport;
      n.transport.insert(n.transport.end(), br.transport.begin(), br.transport.end());
      n.prop = std::max(w.prop, br.properness);
      n.label = w.label + "; " + br.label;
      work.push_back(std::move(n));
    }
  }

  TransformOutcome out;
  for (auto& w : tied) {
    // Transfer every fixed transfer base once, then settle the cut point;
    // tying the cut boundary may branch, but transfers never repeat.
    for (int tb : transfer_ids) {
      auto sub = et2_transfer(w.ge, tb, mu_id);
      w.ge = std::move(sub.branches[0].ge);
      w.label += "; " + sub.branches[0].label;
    }
    std::vector<Pend> stage{std::move(w)};
    std::vector<Pend> finals;
    while (!stage.empty()) {
      Pend s = std::move(stage.back());
      stage.pop_back();

      const BaseRec& mu = s.ge.base(mu_id);
      int k = 0;
      for (int i = 1; i < mu.beta; ++i) {
        bool only_mu = true;
        for (const auto& b : s.ge.bases)
          if (b.id != mu_id && s.ge.item_in_base(i, b)) only_mu = false;
        if (!only_mu) break;
        k = i;
      }
      if (k == 0) throw internal_error("d5: carrier has no exclusive prefix");

      if (k + 1 == mu.beta) {
        auto sub = et4_remove_linear(s.ge, mu_id);
        Pend f;
        f.ge = std::move(sub.branches[0].ge);
        f.map = compose(s.map, sub.branches[0].map);
        f.transport = s.transport;
        f.transport.insert(f.transport.end(), sub.branches[0].transport.begin(),
                           sub.branches[0].transport.end());
        f.prop = s.prop;
        f.label = s.label + "; " + sub.branches[0].label;
        finals.push_back(std::move(f));
        continue;
      }
      if (!s.ge.connection_of(k + 1, mu_id)) {
        auto sub = et5_tie(s.ge, k + 1, mu_id, properness_bound);
        for (auto& br : sub.branches) {
          Pend n;
          n.ge = std::move(br.ge);
          n.map = compose(s.map, br.map);
          n.transport = s.transport;
          n.transport.insert(n.transport.end(), br.transport.begin(), br.transport.end());
          n.prop = std::max(s.prop, br.properness);
          n.label = s.label + "; " + br.label;
          stage.push_back(std::move(n));
        }
        continue;
      }
      int parent_of_mu = s.ge.base(mu_id).parent;
      auto cut = et1_cut(s.ge, k + 1, mu_id);
      GeneralisedEquation after_cut = std::move(cut.branches[0].ge);
      int left_piece = -1;
      for (const auto& b : after_cut.bases)
        if (b.kind == BaseKind::Variable && b.alpha == 1 && b.beta == k + 1 &&
            (b.parent == mu_id || (parent_of_mu >= 0 && b.parent == parent_of_mu)))
          left_piece = b.id;
      if (left_piece < 0) throw internal_error("d5: lost the cut piece");
      auto rem = et4_remove_linear(after_cut, left_piece);
      Pend f;
      f.ge = std::move(rem.branches[0].ge);
      f.map = compose(s.map, compose(cut.branches[0].map, rem.branches[0].map));
      f.transport = s.transport;
      f.transport.insert(f.transport.end(), rem.branches[0].transport.begin(),
                         rem.branches[0].transport.end());
      f.prop = s.prop;
      f.label = s.label + "; cut at " + std::to_string(k + 1) + "; " + rem.branches[0].label;
      finals.push_back(std::move(f));
    }
    for (auto& f : finals) {
      Branch br;
      br.ge = std::move(f.ge);
      br.map = std::move(f.map);
      br.transport = std::move(f.transport);
      br.properness = f.prop;
      br.label = std::move(f.label);
      out.branches.push_back(std::move(br));
    }
  }
  if (out.branches.empty()) throw internal_error("d5 produced no branches");
  return out;
}

TransformOutcome d6_identify_constants(const GeneralisedEquation& ge0, int c1_id, int c2_id) {
  const BaseRec& c1 = ge0.base(c1_id);
  const BaseRec& c2 = ge0.base(c2_id);
  if (c1.kind != BaseKind::Constant || c2.kind != BaseKind::Constant)
    throw input_error("d6: not constant bases");
  if (!(c1.letter == c2.letter)) throw input_error("d6: labels differ");
  int i = c1.alpha, j = c2.alpha;
  if (i == j) throw input_error("d6: same section");
  if (ge0.boundary_open(i) || ge0.boundary_open(i + 1) || ge0.boundary_open(j) ||
      ge0.boundary_open(j + 1))
    throw input_error("d6: sections not closed");

  GeneralisedEquation ge = ge0;
  for (auto& b : ge.bases) {
    if (b.alpha == i && b.beta == i + 1 && b.id != c1_id) {
      b.alpha = j;
      b.beta = j + 1;
    }
  }
  erase_base(ge, c1_id);
  std::set<std::pair<int, int>> re;
  for (auto [x, y] : ge.constraints) {
    int nx = x == i ? j : x;
    int ny = y == i ? j : y;
    if (nx != ny) re.insert({std::min(nx, ny), std::max(nx, ny)});
  }
  ge.constraints = std::move(re);
  collapse_boundary_range(ge, i, i + 1);

  WordMap map;
  map.source_items = ge0.num_items;
  map.target_items = ge.num_items;
  map.assign.resize(ge0.num_items);
  auto renum = [&](int x) { return x > i ? x - 1 : x; };
  for (int x = 1; x <= ge0.num_items; ++x) {
    if (x == i)
      map.assign[x - 1] = {ItemRef{renum(j), 1}};
    else
      map.assign[x - 1] = {ItemRef{renum(x), 1}};
  }

  Branch br;
  br.ge = std::move(ge);
  br.ge.validate();
  br.map = std::move(map);
  TransportStep merge;
  merge.kind = TransportStep::Kind::MergeItem;
  merge.item = i;
  br.transport.push_back(merge);
  br.label = "D6 identify constant sections " + std::to_string(i) + " and " + std::to_string(j);
  return TransformOutcome{{std::move(br)}};
}

std::pair<size_t, SolutionTuple> apply_to_solution(const TransformOutcome& outcome,
                                                   const GeneralisedEquation& src,
                                                   const SolutionTuple& H) {
  {
    auto chk = check_solution(src, H, SolutionMonoid::F);
    if (!chk.ok)
      throw input_error("apply_to_solution: H does not solve the source: " + chk.failure);
  }
  std::optional<std::pair<size_t, SolutionTuple>> found;
  for (size_t i = 0; i < outcome.branches.size(); ++i) {
    const Branch& br = outcome.branches[i];
    SolutionTuple cur = H;
    bool ok = true;
    for (const auto& step : br.transport) {
      try {
        cur = transport_apply(step, cur);
      } catch (const internal_error&) {
        ok = false;
        break;
      }
    }
    if (!ok || static_cast<int>(cur.words.size()) != br.ge.num_items) continue;
    if (!check_solution(br.ge, cur, SolutionMonoid::F).ok) continue;
    if (found) throw internal_error("apply_to_solution: two branches admit the solution");
    found = {i, cur};
  }
  if (!found) throw internal_error("apply_to_solution: no branch admits the solution");
  return *found;
}

std::vector<SolutionTuple> solve_relaxed_bounded(const GeneralisedEquation& ge, size_t max_len,
                                                 size_t cap) {
  auto values = oracle::all_geodesics(ge.graph, max_len, cap);
  auto sys = associated_system(ge);
  std::vector<SolutionTuple> out;
  SolutionTuple cur;
  cur.words.resize(ge.num_items);

  auto max_item = [](const Equation& e) {
    int m = 0;
    for (const auto& w : {e.lhs, e.rhs})
      for (const auto& t : w)
        if (std::holds_alternative<ItemRef>(t)) m = std::max(m, std::get<ItemRef>(t).item);
    return m;
  };
  std::vector<std::vector<const Equation*>> ready(ge.num_items + 1);
  for (const auto& e : sys) ready[max_item(e)].push_back(&e);
  std::vector<std::vector<std::pair<int, int>>> ready_re(ge.num_items + 1);
  for (const auto& [i, j] : ge.constraints) ready_re[std::max(i, j)].push_back({i, j});

  size_t visited = 0;
  std::function<void(int)> rec = [&](int item) {
    if (++visited > cap) throw budget_error("solve_relaxed_bounded: cap exceeded");
    if (item > ge.num_items) {
      out.push_back(cur);
      return;
    }
    for (const Word& v : values) {
      cur.words[item - 1] = v;
      bool ok = true;
      for (const Equation* e : ready[item]) {
        Word l = eval_item_word(e->lhs, cur), r = eval_item_word(e->rhs, cur);
        if (!group_equal(ge.graph, l, r)) {
          ok = false;
          break;
        }
      }
      if (ok)
        for (auto [i, j] : ready_re[item]) {
          if (!group_equal(ge.graph, cur.words[i - 1] * cur.words[j - 1],
                           cur.words[j - 1] * cur.words[i - 1])) {
            ok = false;
            break;
          }
        }
      if (ok) rec(item + 1);
    }
  };
  rec(1);
  return out;
}

}  // namespace pcmr
