#include "pcmr/process_tree.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "pcmr/group.h"

namespace pcmr {

long long rep_threshold_formula(int rho) {
  // 2^(4 rho^2 (2^rho + 1)) + 1, saturated to LLONG_MAX.
  if (rho <= 0) return 2;
  long double expo = 4.0L * rho * rho * (std::pow(2.0L, rho) + 1);
  if (expo > 62) return std::numeric_limits<long long>::max();
  return (1LL << static_cast<long long>(expo)) + 1;
}

namespace {

struct CasePredicates {
  const GeneralisedEquation& ge;
  Metrics m;

  explicit CasePredicates(const GeneralisedEquation& g) : ge(g), m(metrics(g)) {}

  bool has_active_sections() const {
    for (const auto& s : ge.sections)
      if (s.tag == SectionTag::Active) return true;
    return false;
  }

  // Case 3: a constant base in the active part whose span is not closed.
  std::optional<int> case3() const {
    for (const auto& b : ge.bases)
      if (b.kind == BaseKind::Constant && ge.base_active(b) &&
          (ge.boundary_open(b.alpha) || ge.boundary_open(b.beta)))
        return b.id;
    return std::nullopt;
  }
  // Case 4: a constant base in the active part with closed span.
  std::optional<int> case4() const {
    for (const auto& b : ge.bases)
      if (b.kind == BaseKind::Constant && ge.base_active(b) && !ge.boundary_open(b.alpha) &&
          !ge.boundary_open(b.beta))
        return b.id;
    return std::nullopt;
  }
  // Case 5: a free item in the active part.
  std::optional<int> case5() const {
    for (int i = 1; i <= ge.num_items; ++i)
      if (ge.item_active(i) && ge.item_free(i)) return i;
    return std::nullopt;
  }
  // Case 6: a matched pair in the active part.
  std::optional<int> case6() const {
    for (const auto& b : ge.bases)
      if (ge.matched_pair(b) && b.id < b.dual && ge.base_active(b)) return b.id;
    return std::nullopt;
  }
  // Cases 7, 8, 10: a linear active item, split by boundary openness.
  std::optional<int> linear_item(int open_count) const {
    for (int i = 1; i <= ge.num_items; ++i) {
      if (!ge.item_active(i) || m.gamma[i - 1] != 1) continue;
      int open = (ge.boundary_open(i) ? 1 : 0) + (ge.boundary_open(i + 1) ? 1 : 0);
      if (open == open_count) return i;
    }
    return std::nullopt;
  }
  struct Case9Data {
    int mu1, mu2, from, to;
  };
  std::optional<Case9Data> case9() const {
    if (!linear_item(2)) return std::nullopt;
    for (const auto& b : ge.bases) {
      if (b.kind != BaseKind::Variable || !ge.base_active(b)) continue;
      if (ge.boundary_open(b.alpha) || ge.boundary_open(b.beta)) continue;
      std::vector<const BaseRec*> inside;
      for (const auto& o : ge.bases)
        if (o.alpha >= b.alpha && o.beta <= b.beta) inside.push_back(&o);
      if (inside.size() != 2) continue;
      const BaseRec* mu1 = inside[0];
      const BaseRec* mu2 = inside[1];
      if (mu1->alpha != b.alpha || mu1->beta != b.beta || mu2->alpha != b.alpha ||
          mu2->beta != b.beta)
        continue;
      if (mu1->dual == mu2->id) continue;  // matched pair
      auto cc = d3_complete_cut(ge);
      auto kernel = d4_kernel(cc.ge);
      bool in_kernel = false;
      for (const auto& kb : kernel.kernel.bases) {
        int root = kb.parent >= 0 ? kb.parent : kb.id;
        if (root == mu1->id || root == mu2->id || root == mu1->dual || root == mu2->dual)
          in_kernel = true;
      }
      if (in_kernel) continue;
      return Case9Data{mu1->id, mu2->id, b.alpha, b.beta};
    }
    return std::nullopt;
  }
  // Case 11: a free boundary in the active part.
  std::optional<int> case11() const {
    for (int i = 2; i <= ge.num_items; ++i)
      if (ge.item_active(i - 1) && ge.item_active(i) && ge.boundary_free(i)) return i;
    return std::nullopt;
  }
  bool all_active_quadratic() const {
    bool any = false;
    for (int i = 1; i <= ge.num_items; ++i)
      if (ge.item_active(i)) {
        any = true;
        if (m.gamma[i - 1] != 2) return false;
      }
    return any;
  }
  bool all_active_ge2_some_more() const {
    bool more = false;
    for (int i = 1; i <= ge.num_items; ++i)
      if (ge.item_active(i)) {
        if (m.gamma[i - 1] < 2) return false;
        if (m.gamma[i - 1] > 2) more = true;
      }
    return more;
  }
  // Case 13: an active variable base spanning a closed section.
  std::optional<int> case13() const {
    for (const auto& b : ge.bases) {
      if (b.kind != BaseKind::Variable || !ge.base_active(b)) continue;
      if (ge.boundary_open(b.alpha) || ge.boundary_open(b.beta)) continue;
      bool interior_open = true;
      for (int i = b.alpha + 1; i < b.beta; ++i)
        if (!ge.boundary_open(i)) interior_open = false;
      if (interior_open) return b.id;
    }
    return std::nullopt;
  }
  // Case 14: an active boundary touching one base, intersecting another base
  // it is not tied in.
  std::optional<std::pair<int, int>> case14() const {
    for (int j = 2; j <= ge.num_items; ++j) {
      if (!ge.item_active(j - 1) && !ge.item_active(j)) continue;
      bool touches = false;
      for (const auto& b : ge.bases)
        if (ge.boundary_touches(j, b)) touches = true;
      if (!touches) continue;
      for (const auto& b : ge.bases) {
        if (b.kind != BaseKind::Variable) continue;
        if (ge.boundary_intersects(j, b) && !ge.connection_of(j, b.id))
          return std::make_pair(j, b.id);
      }
    }
    return std::nullopt;
  }
};

}  // namespace

int classify_case(const GeneralisedEquation& ge, Properness incoming, const Budget& budget) {
  auto rep = is_formally_consistent(ge);
  if (!rep.ok) throw input_error("classify_case: formally inconsistent equation: " + rep.detail);
  if (incoming == Properness::Proper) return 1;
  if (incoming == Properness::Unknown && budget.unknown_properness_is_proper) return 1;
  CasePredicates p(ge);
  if (!p.has_active_sections()) return 2;
  if (p.case3()) return 3;
  if (p.case4()) return 4;
  if (p.case5()) return 5;
  if (p.case6()) return 6;
  if (p.linear_item(0)) return 7;
  if (p.linear_item(1)) return 8;
  if (p.case9()) return 9;
  if (p.linear_item(2)) return 10;
  if (p.case11()) return 11;
  if (p.all_active_quadratic()) return 12;
  if (!p.all_active_ge2_some_more())
    throw internal_error("classify_case: uncovered configuration");
  if (p.case13()) return 13;
  if (p.case14()) return 14;
  return 15;
}

namespace {

// Common tail of Cases 8 and 10: close the item's span, then remove it.
TransformOutcome tie_cut_remove(const GeneralisedEquation& ge, int item, size_t bound) {
  int mu = -1;
  for (const auto& b : ge.bases)
    if (b.kind == BaseKind::Variable && ge.item_in_base(item, b)) mu = b.id;
  if (mu < 0) throw internal_error("linear item without a covering variable base");
  int mu_root = ge.base(mu).parent >= 0 ? ge.base(mu).parent : mu;
  auto close = d1_close(ge, item, item + 1, bound);
  std::vector<Branch> out;
  for (auto& br : close.branches) {
    // The single-item piece of mu covering the item is removed by ET4.
    int piece = -1;
    for (const auto& b : br.ge.bases) {
      if (b.kind != BaseKind::Variable) continue;
      if (b.id != mu && b.parent != mu && b.parent != mu_root) continue;
      if (b.beta != b.alpha + 1) continue;
      if (br.ge.boundary_open(b.alpha) || br.ge.boundary_open(b.beta)) continue;
      bool only = true;
      for (const auto& o : br.ge.bases)
        if (o.id != b.id && br.ge.item_in_base(b.alpha, o)) only = false;
      if (only) piece = b.id;
    }
    if (piece < 0) continue;
    auto rem = et4_remove_linear(br.ge, piece);
    Branch fin;
    fin.ge = std::move(rem.branches[0].ge);
    fin.map = compose(br.map, rem.branches[0].map);
    fin.transport = br.transport;
    fin.transport.insert(fin.transport.end(), rem.branches[0].transport.begin(),
                         rem.branches[0].transport.end());
    fin.properness = std::max(br.properness, rem.branches[0].properness);
    fin.label = br.label + "; " + rem.branches[0].label;
    out.push_back(std::move(fin));
  }
  if (out.empty()) throw internal_error("case 8/10 recipe produced no branch");
  return TransformOutcome{std::move(out)};
}

GeneralisedEquation build_hat(const GeneralisedEquation& ge, int carrier) {
  GeneralisedEquation hat = ge;
  const BaseRec& mu = hat.base(carrier);
  const BaseRec& dm = hat.dual(mu);
  int rho = hat.num_items;
  hat.num_items = rho + 1;
  hat.sections.push_back({rho + 1, rho + 2, SectionTag::Constant});
  BaseRec la, dla;
  la.id = hat.fresh_base_id();
  dla.id = hat.fresh_base_id();
  la.kind = dla.kind = BaseKind::Variable;
  la.alpha = 1;
  la.beta = dm.beta;
  dla.alpha = rho + 1;
  dla.beta = rho + 2;
  la.eps = dla.eps = 1;
  la.dual = dla.id;
  dla.dual = la.id;
  hat.bases.push_back(la);
  hat.bases.push_back(dla);
  hat.validate();
  return hat;
}

// Case 15 tie round: tie every active boundary that touches some base in
// every base it intersects untied.
TransformOutcome case15_tie_round(const GeneralisedEquation& start, const Budget& budget) {
  std::vector<Branch> work;
  {
    Branch root;
    root.ge = start;
    root.map = WordMap::identity(start.num_items);
    work.push_back(std::move(root));
  }
  std::vector<Branch> done;
  size_t guard = 0;
  while (!work.empty()) {
    if (++guard > 20000) throw budget_error("case 15 tie round exceeded its guard");
    Branch w = std::move(work.back());
    work.pop_back();
    int tj = -1, tmu = -1;
    int ra = w.ge.rho_a();
    for (int j = 2; j <= w.ge.num_items && tj < 0; ++j) {
      if (j >= ra + 1) break;
      bool touches = false;
      for (const auto& b : w.ge.bases)
        if (w.ge.boundary_touches(j, b)) touches = true;
      if (!touches) continue;
      for (const auto& b : w.ge.bases) {
        if (b.kind != BaseKind::Variable) continue;
        if (w.ge.boundary_intersects(j, b) && !w.ge.connection_of(j, b.id)) {
          tj = j;
          tmu = b.id;
          break;
        }
      }
    }
    if (tj < 0) {
      done.push_back(std::move(w));
      if (static_cast<int>(done.size()) > budget.expand_branch_cap)
        throw budget_error("case 15 tie round exceeded the branch cap");
      continue;
    }
    auto sub = et5_tie(w.ge, tj, tmu, budget.properness_bound);
    for (auto& nb : sub.branches) {
      Branch n;
      n.ge = std::move(nb.ge);
      n.map = compose(w.map, nb.map);
      n.transport = w.transport;
      n.transport.insert(n.transport.end(), nb.transport.begin(), nb.transport.end());
      n.properness = std::max(w.properness, nb.properness);
      n.kind = w.kind;
      n.label = w.label.empty() ? nb.label : w.label + "; " + nb.label;
      work.push_back(std::move(n));
    }
  }
  return TransformOutcome{std::move(done)};
}

TransformOutcome chain(TransformOutcome first,
                       const std::function<TransformOutcome(const GeneralisedEquation&)>& next) {
  std::vector<Branch> out;
  for (auto& br : first.branches) {
    TransformOutcome sub = next(br.ge);
    for (auto& nb : sub.branches) {
      Branch n;
      n.ge = std::move(nb.ge);
      n.map = compose(br.map, nb.map);
      n.transport = br.transport;
      n.transport.insert(n.transport.end(), nb.transport.begin(), nb.transport.end());
      n.properness = std::max(br.properness, nb.properness);
      n.kind = br.kind == EdgeKind::Auxiliary || nb.kind == EdgeKind::Auxiliary
                   ? EdgeKind::Auxiliary
                   : EdgeKind::Principal;
      n.label = br.label + "; " + nb.label;
      out.push_back(std::move(n));
    }
  }
  return TransformOutcome{std::move(out)};
}

}  // namespace

TransformOutcome expand(const GeneralisedEquation& ge, int tp, const Budget& budget) {
  CasePredicates p(ge);
  switch (tp) {
    case 3: {
      int id = *p.case3();
      const BaseRec& b = ge.base(id);
      return d1_close(ge, b.alpha, b.beta, budget.properness_bound);
    }
    case 4: {
      int id = *p.case4();
      const BaseRec& b = ge.base(id);
      auto moved = d2_to_end(ge, b.alpha, b.beta, SectionTag::Constant);
      for (auto& br : moved.branches) br.kind = EdgeKind::Auxiliary;
      auto merge_all = [](const GeneralisedEquation& g) -> TransformOutcome {
        GeneralisedEquation cur = g;
        WordMap map = WordMap::identity(g.num_items);
        std::vector<TransportStep> transport;
        std::string label;
        for (;;) {
          const BaseRec* keep = nullptr;
          const BaseRec* drop = nullptr;
          for (const auto& b1 : cur.bases) {
            if (b1.kind != BaseKind::Constant) continue;
            if (cur.boundary_open(b1.alpha) || cur.boundary_open(b1.beta)) continue;
            for (const auto& b2 : cur.bases) {
              if (b2.id == b1.id || b2.kind != BaseKind::Constant) continue;
              if (!(b2.letter == b1.letter)) continue;
              if (b2.alpha == b1.alpha) continue;
              if (cur.boundary_open(b2.alpha) || cur.boundary_open(b2.beta)) continue;
              drop = &b1;
              keep = &b2;
              break;
            }
            if (drop) break;
          }
          if (!drop) break;
          auto sub = d6_identify_constants(cur, drop->id, keep->id);
          GeneralisedEquation nge = std::move(sub.branches[0].ge);
          map = compose(map, sub.branches[0].map);
          transport.insert(transport.end(), sub.branches[0].transport.begin(),
                           sub.branches[0].transport.end());
          label += sub.branches[0].label + "; ";
          cur = std::move(nge);
        }
        Branch br;
        br.ge = std::move(cur);
        br.map = std::move(map);
        br.transport = std::move(transport);
        br.label = label.empty() ? "no merges" : label;
        return TransformOutcome{{std::move(br)}};
      };
      return chain(std::move(moved), merge_all);
    }
    case 5: {
      int q = *p.case5();
      auto out = d2_to_end(ge, q, q + 1, SectionTag::Constant);
      for (auto& br : out.branches) br.kind = EdgeKind::Auxiliary;
      return out;
    }
    case 6:
      return et3_remove_matched(ge, *p.case6());
    case 7: {
      int i = *p.linear_item(0);
      int mu = -1;
      for (const auto& b : ge.bases)
        if (b.kind == BaseKind::Variable && ge.item_in_base(i, b)) mu = b.id;
      return et4_remove_linear(ge, mu);
    }
    case 8:
      return tie_cut_remove(ge, *p.linear_item(1), budget.properness_bound);
    case 9: {
      auto data = *p.case9();
      std::vector<Branch> work;
      {
        Branch root;
        root.ge = ge;
        root.map = WordMap::identity(ge.num_items);
        work.push_back(std::move(root));
      }
      std::vector<Branch> out;
      size_t guard = 0;
      while (!work.empty()) {
        if (++guard > 20000) throw budget_error("case 9 exceeded its guard");
        Branch w = std::move(work.back());
        work.pop_back();
        const BaseRec& mu1 = w.ge.base(data.mu1);
        int untied = -1;
        for (int b = mu1.alpha + 1; b < mu1.beta; ++b)
          if (!w.ge.connection_of(b, data.mu1)) {
            untied = b;
            break;
          }
        if (untied >= 0) {
          auto sub = et5_tie(w.ge, untied, data.mu1, budget.properness_bound);
          for (auto& nb : sub.branches) {
            Branch n;
            n.ge = std::move(nb.ge);
            n.map = compose(w.map, nb.map);
            n.transport = w.transport;
            n.transport.insert(n.transport.end(), nb.transport.begin(), nb.transport.end());
            n.properness = std::max(w.properness, nb.properness);
            n.label = w.label + "; " + nb.label;
            work.push_back(std::move(n));
          }
          continue;
        }
        auto tr = et2_transfer(w.ge, data.mu2, data.mu1);
        auto rem = et4_remove_linear(tr.branches[0].ge, data.mu1);
        Branch fin;
        fin.ge = std::move(rem.branches[0].ge);
        fin.map = compose(w.map, compose(tr.branches[0].map, rem.branches[0].map));
        fin.transport = w.transport;
        fin.transport.insert(fin.transport.end(), rem.branches[0].transport.begin(),
                             rem.branches[0].transport.end());
        fin.properness = w.properness;
        fin.label = w.label + "; " + tr.branches[0].label + "; " + rem.branches[0].label;
        out.push_back(std::move(fin));
      }
      return TransformOutcome{std::move(out)};
    }
    case 10:
      return tie_cut_remove(ge, *p.linear_item(2), budget.properness_bound);
    case 11: {
      int j = *p.case11();
      int mu = -1;
      for (const auto& b : ge.bases)
        if (b.kind == BaseKind::Variable && ge.boundary_intersects(j, b)) {
          mu = b.id;
          break;
        }
      if (mu < 0) throw internal_error("case 11: free boundary intersects nothing");
      return et5_tie(ge, j, mu, budget.properness_bound);
    }
    case 12:
      return d5_entire(ge, budget.properness_bound);
    case 13: {
      int mu = *p.case13();
      const BaseRec& b = ge.base(mu);
      auto moved = d2_to_front(ge, b.alpha, b.beta);
      return chain(std::move(moved), [&](const GeneralisedEquation& g) {
        return d5_entire(g, budget.properness_bound, mu);
      });
    }
    case 14: {
      auto [j, mu] = *p.case14();
      return et5_tie(ge, j, mu, budget.properness_bound);
    }
    case 15: {
      auto principal =
          chain(d5_entire(ge, budget.properness_bound), [&](const GeneralisedEquation& g) {
            return case15_tie_round(g, budget);
          });
      auto info = carrier_info(ge);
      const BaseRec& mu = ge.base(info->carrier);
      const BaseRec& dm = ge.dual(mu);
      bool overlap = std::max(mu.alpha, dm.alpha) < std::min(mu.beta, dm.beta);
      if (overlap && dm.beta >= mu.beta) {
        GeneralisedEquation hat = build_hat(ge, info->carrier);
        int lambda_id = hat.bases[hat.bases.size() - 2].id;
        WordMap embed;
        embed.source_items = ge.num_items;
        embed.target_items = hat.num_items;
        embed.assign.resize(ge.num_items);
        for (int i = 1; i <= ge.num_items; ++i) embed.assign[i - 1] = {ItemRef{i, 1}};
        try {
          auto aux = chain(d5_entire(hat, budget.properness_bound, lambda_id),
                           [&](const GeneralisedEquation& g) {
                             return case15_tie_round(g, budget);
                           });
          for (auto& br : aux.branches) {
            br.kind = EdgeKind::Auxiliary;
            br.map = compose(embed, br.map);
            br.label = "15.1 via hat; " + br.label;
            // No tree-level transport for auxiliary children: the trace uses
            // the periodicity cutoff route instead.
            br.transport.clear();
            principal.branches.push_back(std::move(br));
          }
        } catch (const budget_error&) {
          // Auxiliary expansion abandoned under the branch cap.
        }
      }
      return principal;
    }
    default:
      throw input_error("expand: not an expandable case");
  }
}

ProcessTree build_tree(const GeneralisedEquation& ge0, const Budget& budget) {
  ProcessTree tree;

  GeneralisedEquation root_ge = ge0;
  normalize_sections(root_ge);
  for (;;) {
    // Preprocessing: move the first active section that follows a non-active
    // one to the front, until actives form a prefix.
    int from = -1, to = -1;
    bool seen_na = false;
    for (const auto& s : root_ge.sections) {
      if (s.tag != SectionTag::Active) {
        seen_na = true;
      } else if (seen_na) {
        from = s.from;
        to = s.to;
        break;
      }
    }
    if (from < 0) break;
    auto out = d2_to_front(root_ge, from, to);
    root_ge = std::move(out.branches[0].ge);
  }

  ProcessNode root;
  root.id = "v0";
  root.ge = root_ge;
  root.tp = classify_case(root_ge, Properness::Iso, budget);
  tree.nodes.push_back(std::move(root));

  std::deque<std::pair<int, int>> queue;
  queue.emplace_back(0, 0);
  while (!queue.empty()) {
    auto [idx, depth] = queue.front();
    queue.pop_front();
    if (tree.nodes[idx].tp <= 2) continue;
    if (depth >= budget.max_depth || static_cast<int>(tree.nodes.size()) >= budget.max_nodes) {
      tree.nodes[idx].budget_cut = true;
      tree.budget_exhausted = true;
      continue;
    }
    TransformOutcome out;
    try {
      out = expand(tree.nodes[idx].ge, tree.nodes[idx].tp, budget);
    } catch (const budget_error&) {
      tree.nodes[idx].budget_cut = true;
      tree.budget_exhausted = true;
      continue;
    }
    std::vector<size_t> order(out.branches.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<CanonicalForm> forms(out.branches.size());
    for (size_t i = 0; i < order.size(); ++i) forms[i] = canonical_form(out.branches[i].ge);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (forms[a].hash != forms[b].hash) return forms[a].hash < forms[b].hash;
      return out.branches[a].label < out.branches[b].label;
    });
    int child_no = 0;
    for (size_t oi : order) {
      if (static_cast<int>(tree.nodes.size()) >= budget.max_nodes) {
        tree.budget_exhausted = true;
        tree.nodes[idx].budget_cut = true;
        break;
      }
      Branch& br = out.branches[oi];
      ProcessNode child;
      child.id = tree.nodes[idx].id + "." + std::to_string(child_no++);
      child.ge = std::move(br.ge);
      child.parent = idx;
      child.edge_map = std::move(br.map);
      child.edge_kind = br.kind;
      child.edge_properness = br.properness;
      child.edge_label = std::move(br.label);
      child.tp = classify_case(child.ge, child.edge_properness, budget);
      int cidx = static_cast<int>(tree.nodes.size());
      tree.nodes[idx].children.push_back(cidx);
      tree.nodes.push_back(std::move(child));
      queue.emplace_back(cidx, depth + 1);
    }
  }
  return tree;
}

namespace {

// ---- Solution-guided single-path execution of the case recipes. ----
// The enumerating recipes above multiply ET5 branches; a trace resolves each
// ET5 against the solution on the spot, keeping every step linear.

struct GuidedState {
  GeneralisedEquation ge;
  SolutionTuple H;
  std::string note;
};

void guided_one(GuidedState& st, const TransformOutcome& out) {
  auto [idx, H2] = apply_to_solution(out, st.ge, st.H);
  st.ge = out.branches[idx].ge;
  st.H = std::move(H2);
  if (!st.note.empty()) st.note += "; ";
  st.note += out.branches[idx].label;
}

void guided_et5(GuidedState& st, int p, int mu) { guided_one(st, et5_tie(st.ge, p, mu, 0)); }

// Close the section [from, to], tracking the endpoints across insertions.
void guided_close(GuidedState& st, int from, int to) {
  size_t guard = 0;
  while (true) {
    if (++guard > 10000) throw internal_error("guided close diverged");
    int bnd = -1, spanning = -1;
    for (int cand : {from, to}) {
      for (const auto& b : st.ge.bases)
        if (b.kind == BaseKind::Variable && st.ge.boundary_intersects(cand, b)) {
          bnd = cand;
          spanning = b.id;
          break;
        }
      if (bnd >= 0) break;
    }
    if (bnd < 0) return;
    size_t before = st.H.words.size();
    if (!st.ge.connection_of(bnd, spanning)) {
      auto out = et5_tie(st.ge, bnd, spanning, 0);
      auto [idx, H2] = apply_to_solution(out, st.ge, st.H);
      if (!out.branches[idx].transport.empty() &&
          out.branches[idx].transport.back().kind == TransportStep::Kind::SplitItem) {
        int at = out.branches[idx].transport.back().item;
        if (from > at) ++from;
        if (to > at) ++to;
      }
      st.ge = out.branches[idx].ge;
      st.H = std::move(H2);
    } else {
      guided_one(st, et1_cut(st.ge, bnd, spanning));
    }
    (void)before;
  }
}

void guided_d5(GuidedState& st, int forced_carrier) {
  auto info = carrier_info(st.ge, forced_carrier);
  if (!info) throw internal_error("guided d5: no carrier");
  int mu_id = info->carrier;
  const std::vector<int> transfer_ids = info->transfer_bases;

  // Tie boundaries meeting the transfer bases.
  size_t guard = 0;
  for (;;) {
    if (++guard > 10000) throw internal_error("guided d5 tie stage diverged");
    int bnd = -1;
    const BaseRec& mu = st.ge.base(mu_id);
    for (int tb : transfer_ids) {
      const BaseRec& la = st.ge.base(tb);
      for (int b = la.alpha; b <= la.beta && bnd < 0; ++b)
        if (mu.alpha < b && b < mu.beta && !st.ge.connection_of(b, mu_id)) bnd = b;
      if (bnd >= 0) break;
    }
    if (bnd < 0) break;
    guided_et5(st, bnd, mu_id);
  }
  for (int tb : transfer_ids) guided_one(st, et2_transfer(st.ge, tb, mu_id));

  for (;;) {
    if (++guard > 20000) throw internal_error("guided d5 cut stage diverged");
    const BaseRec& mu = st.ge.base(mu_id);
    int k = 0;
    for (int i = 1; i < mu.beta; ++i) {
      bool only_mu = true;
      for (const auto& b : st.ge.bases)
        if (b.id != mu_id && st.ge.item_in_base(i, b)) only_mu = false;
      if (!only_mu) break;
      k = i;
    }
    if (k == 0) throw internal_error("guided d5: carrier has no exclusive prefix");
    if (k + 1 == mu.beta) {
      guided_one(st, et4_remove_linear(st.ge, mu_id));
      return;
    }
    if (!st.ge.connection_of(k + 1, mu_id)) {
      guided_et5(st, k + 1, mu_id);
      continue;
    }
    int parent_of_mu = st.ge.base(mu_id).parent;
    auto cut = et1_cut(st.ge, k + 1, mu_id);
    guided_one(st, cut);
    int left_piece = -1;
    for (const auto& b : st.ge.bases)
      if (b.kind == BaseKind::Variable && b.alpha == 1 && b.beta == k + 1 &&
          (b.parent == mu_id || (parent_of_mu >= 0 && b.parent == parent_of_mu)))
        left_piece = b.id;
    if (left_piece < 0) throw internal_error("guided d5: lost the cut piece");
    guided_one(st, et4_remove_linear(st.ge, left_piece));
    return;
  }
}

void guided_case15_ties(GuidedState& st) {
  size_t guard = 0;
  for (;;) {
    if (++guard > 20000) throw internal_error("guided case 15 ties diverged");
    int tj = -1, tmu = -1;
    int ra = st.ge.rho_a();
    for (int j = 2; j <= st.ge.num_items && tj < 0; ++j) {
      if (j >= ra + 1) break;
      bool touches = false;
      for (const auto& b : st.ge.bases)
        if (st.ge.boundary_touches(j, b)) touches = true;
      if (!touches) continue;
      for (const auto& b : st.ge.bases) {
        if (b.kind != BaseKind::Variable) continue;
        if (st.ge.boundary_intersects(j, b) && !st.ge.connection_of(j, b.id)) {
          tj = j;
          tmu = b.id;
          break;
        }
      }
    }
    if (tj < 0) return;
    guided_et5(st, tj, tmu);
  }
}

// One traced step of the case recipe; returns false for leaf cases.
bool apply_case_guided(GuidedState& st, int tp, const Budget& budget) {
  CasePredicates p(st.ge);
  switch (tp) {
    case 3: {
      int id = *p.case3();
      const BaseRec& b = st.ge.base(id);
      guided_close(st, b.alpha, b.beta);
      return true;
    }
    case 4: {
      int id = *p.case4();
      const BaseRec& b = st.ge.base(id);
      guided_one(st, d2_to_end(st.ge, b.alpha, b.beta, SectionTag::Constant));
      for (;;) {
        const BaseRec* keep = nullptr;
        const BaseRec* drop = nullptr;
        for (const auto& b1 : st.ge.bases) {
          if (b1.kind != BaseKind::Constant) continue;
          if (st.ge.boundary_open(b1.alpha) || st.ge.boundary_open(b1.beta)) continue;
          for (const auto& b2 : st.ge.bases) {
            if (b2.id == b1.id || b2.kind != BaseKind::Constant) continue;
            if (!(b2.letter == b1.letter) || b2.alpha == b1.alpha) continue;
            if (st.ge.boundary_open(b2.alpha) || st.ge.boundary_open(b2.beta)) continue;
            drop = &b1;
            keep = &b2;
            break;
          }
          if (drop) break;
        }
        if (!drop) break;
        guided_one(st, d6_identify_constants(st.ge, drop->id, keep->id));
      }
      return true;
    }
    case 5: {
      int q = *p.case5();
      guided_one(st, d2_to_end(st.ge, q, q + 1, SectionTag::Constant));
      return true;
    }
    case 6:
      guided_one(st, et3_remove_matched(st.ge, *p.case6()));
      return true;
    case 7: {
      int i = *p.linear_item(0);
      int mu = -1;
      for (const auto& b : st.ge.bases)
        if (b.kind == BaseKind::Variable && st.ge.item_in_base(i, b)) mu = b.id;
      guided_one(st, et4_remove_linear(st.ge, mu));
      return true;
    }
    case 8:
    case 10: {
      int i = tp == 8 ? *p.linear_item(1) : *p.linear_item(2);
      int mu = -1;
      for (const auto& b : st.ge.bases)
        if (b.kind == BaseKind::Variable && st.ge.item_in_base(i, b)) mu = b.id;
      int mu_root = st.ge.base(mu).parent >= 0 ? st.ge.base(mu).parent : mu;
      // Track the item across insertions: it is the unique linear active item
      // of the base piece; close its span then remove.
      int from = i, to = i + 1;
      {
        // guided_close with endpoint tracking.
        size_t guard = 0;
        while (true) {
          if (++guard > 10000) throw internal_error("case 8/10 close diverged");
          int bnd = -1, spanning = -1;
          for (int cand : {from, to}) {
            for (const auto& b : st.ge.bases)
              if (b.kind == BaseKind::Variable && st.ge.boundary_intersects(cand, b)) {
                bnd = cand;
                spanning = b.id;
                break;
              }
            if (bnd >= 0) break;
          }
          if (bnd < 0) break;
          if (!st.ge.connection_of(bnd, spanning)) {
            auto out = et5_tie(st.ge, bnd, spanning, 0);
            auto [idx, H2] = apply_to_solution(out, st.ge, st.H);
            if (!out.branches[idx].transport.empty() &&
                out.branches[idx].transport.back().kind == TransportStep::Kind::SplitItem) {
              int at = out.branches[idx].transport.back().item;
              if (from > at) ++from;
              if (to > at) ++to;
            }
            st.ge = out.branches[idx].ge;
            st.H = std::move(H2);
          } else {
            guided_one(st, et1_cut(st.ge, bnd, spanning));
          }
        }
      }
      int piece = -1;
      for (const auto& b : st.ge.bases) {
        if (b.kind != BaseKind::Variable) continue;
        if (b.id != mu && b.parent != mu && b.parent != mu_root) continue;
        if (b.alpha != from || b.beta != to) continue;
        piece = b.id;
      }
      if (piece < 0) throw internal_error("case 8/10: lost the linear piece");
      guided_one(st, et4_remove_linear(st.ge, piece));
      return true;
    }
    case 9: {
      auto data = *p.case9();
      size_t guard = 0;
      for (;;) {
        if (++guard > 10000) throw internal_error("case 9 ties diverged");
        const BaseRec& mu1 = st.ge.base(data.mu1);
        int untied = -1;
        for (int b = mu1.alpha + 1; b < mu1.beta && untied < 0; ++b)
          if (!st.ge.connection_of(b, data.mu1)) untied = b;
        if (untied < 0) break;
        guided_et5(st, untied, data.mu1);
      }
      guided_one(st, et2_transfer(st.ge, data.mu2, data.mu1));
      guided_one(st, et4_remove_linear(st.ge, data.mu1));
      return true;
    }
    case 11: {
      int j = *p.case11();
      int mu = -1;
      for (const auto& b : st.ge.bases)
        if (b.kind == BaseKind::Variable && st.ge.boundary_intersects(j, b)) {
          mu = b.id;
          break;
        }
      guided_et5(st, j, mu);
      return true;
    }
    case 12:
      guided_d5(st, -1);
      return true;
    case 13: {
      int mu = *p.case13();
      const BaseRec& b = st.ge.base(mu);
      guided_one(st, d2_to_front(st.ge, b.alpha, b.beta));
      guided_d5(st, mu);
      return true;
    }
    case 14: {
      auto [j, mu] = *p.case14();
      guided_et5(st, j, mu);
      return true;
    }
    case 15: {
      guided_d5(st, -1);
      guided_case15_ties(st);
      return true;
    }
    default:
      (void)budget;
      return false;
  }
}

// Shortest string period: w = P^r P1 with P = w[0..p).
std::pair<Word, int> leading_period(const Word& w) {
  size_t n = w.size();
  std::vector<size_t> fail(n + 1, 0);
  for (size_t i = 1; i < n; ++i) {
    size_t k = fail[i];
    while (k > 0 && !(w[i] == w[k])) k = fail[k];
    if (w[i] == w[k]) ++k;
    fail[i + 1] = k;
  }
  size_t p = n - fail[n];
  if (p == 0 || p > n) p = n;
  Word period = w.subword(0, p);
  int r = static_cast<int>(n / p);
  return {period, r};
}

}  // namespace

std::vector<TraceRecord> trace_path(const GeneralisedEquation& ge0, const SolutionTuple& H0,
                                    const Budget& budget) {
  std::vector<TraceRecord> path;
  GeneralisedEquation ge = ge0;
  SolutionTuple H = H0;
  {
    auto chk = check_solution(ge, H, SolutionMonoid::F);
    if (!chk.ok) throw input_error("trace_path: not a solution: " + chk.failure);
  }
  Properness incoming = Properness::Iso;
  for (int step = 0; step < budget.max_depth; ++step) {
    TraceRecord rec;
    rec.ge = ge;
    rec.solution = H;
    rec.tp = classify_case(ge, incoming, budget);
    auto info = carrier_info(ge);
    if (info) {
      rec.carrier = info->carrier;
      rec.transfer_bases = info->transfer_bases;
    }
    if (rec.tp == 15 && info) {
      const BaseRec& mu = ge.base(info->carrier);
      const BaseRec& dm = ge.dual(mu);
      rec.aux_available =
          std::max(mu.alpha, dm.alpha) < std::min(mu.beta, dm.beta) && dm.beta >= mu.beta;
    }
    if (rec.tp <= 2) {
      path.push_back(std::move(rec));
      return path;
    }

    if (rec.tp == 15 && rec.aux_available) {
      const BaseRec& mu = ge.base(rec.carrier);
      const BaseRec& dm = ge.dual(mu);
      Word w = eval_item_word(ge.h_interval(1, dm.beta), H);
      auto [period, r] = leading_period(w);
      if (r >= budget.s_value && is_geodesic(ge.graph, period) &&
          is_cyclically_reduced(ge.graph, period)) {
        GeneralisedEquation hat = build_hat(ge, rec.carrier);
        SolutionTuple H2 = H;
        H2.words.push_back(w);
        int bdm = dm.beta;
        GeneralisedEquation cur = hat;
        size_t guard = 0;
        while (true) {
          if (++guard > 10000) throw internal_error("trace 15.1 closing diverged");
          int bnd = -1, spanning = -1;
          for (int cand : {1, bdm}) {
            for (const auto& b : cur.bases)
              if (b.kind == BaseKind::Variable && cur.boundary_intersects(cand, b)) {
                bnd = cand;
                spanning = b.id;
                break;
              }
            if (bnd >= 0) break;
          }
          if (bnd < 0) break;
          TransformOutcome sub;
          if (!cur.connection_of(bnd, spanning))
            sub = et5_tie(cur, bnd, spanning, 0);
          else
            sub = et1_cut(cur, bnd, spanning);
          auto [bidx, H3] = apply_to_solution(sub, cur, H2);
          if (!sub.branches[bidx].transport.empty() &&
              sub.branches[bidx].transport.back().kind == TransportStep::Kind::SplitItem) {
            int at = sub.branches[bidx].transport.back().item;
            if (bdm > at) ++bdm;
          }
          cur = sub.branches[bidx].ge;
          H2 = H3;
        }
        normalize_sections(cur);
        for (auto& s : cur.sections)
          if (s.to <= bdm && s.tag == SectionTag::Active) s.tag = SectionTag::NonActive;
        cur.validate();
        rec.note = "15.1 periodicity cutoff: period " + ge.graph.print_word(period) +
                   " exponent " + std::to_string(r);
        rec.principal = false;
        path.push_back(std::move(rec));
        ge = std::move(cur);
        H = std::move(H2);
        incoming = Properness::Iso;
        continue;
      }
    }

    GuidedState st{ge, H, ""};
    if (!apply_case_guided(st, rec.tp, budget))
      throw internal_error("trace_path: case recipe failed");
    rec.principal = true;
    rec.note = st.note;
    incoming = Properness::Iso;
    int tp0 = rec.tp;
    size_t len0 = H.total_length();
    path.push_back(std::move(rec));
    if ((tp0 == 7 || tp0 == 8 || tp0 == 9 || tp0 == 10 || tp0 == 12 || tp0 == 15) &&
        !(st.H.total_length() < len0))
      throw internal_error("trace_path: solution length did not strictly decrease");
    ge = std::move(st.ge);
    H = std::move(st.H);
  }
  throw budget_error("trace_path: depth budget exhausted");
}

CanonicalForm canonical_form(const GeneralisedEquation& ge) {
  struct Key {
    int alpha, beta, kind, letter, sign, eps, dalpha, dbeta, deps;
    std::vector<std::pair<int, int>> conns;
    bool operator<(const Key& o) const {
      return std::tie(alpha, beta, kind, letter, sign, eps, dalpha, dbeta, deps, conns) <
             std::tie(o.alpha, o.beta, o.kind, o.letter, o.sign, o.eps, o.dalpha, o.dbeta,
                      o.deps, o.conns);
    }
  };
  std::vector<Key> keyed;
  for (const auto& b : ge.bases) {
    Key k{};
    k.alpha = b.alpha;
    k.beta = b.beta;
    k.kind = b.kind == BaseKind::Constant ? 1 : 0;
    k.letter = b.kind == BaseKind::Constant ? b.letter.letter : -1;
    k.sign = b.kind == BaseKind::Constant ? b.letter.sign : 0;
    k.eps = b.kind == BaseKind::Variable ? b.eps : 0;
    if (b.kind == BaseKind::Variable) {
      const BaseRec& d = ge.dual(b);
      k.dalpha = d.alpha;
      k.dbeta = d.beta;
      k.deps = d.eps;
      for (const auto& c : ge.connections) {
        if (c.base == b.id) k.conns.emplace_back(c.p, c.q);
        if (c.base == d.id) k.conns.emplace_back(c.q, c.p);
      }
      std::sort(k.conns.begin(), k.conns.end());
    }
    keyed.push_back(std::move(k));
  }
  std::sort(keyed.begin(), keyed.end());

  std::ostringstream out;
  out << "rho=" << ge.num_items << ";";
  for (const auto& s : ge.sections)
    out << "S" << s.from << "," << s.to << "," << static_cast<int>(s.tag) << ";";
  for (const auto& k : keyed) {
    out << "B" << k.alpha << "," << k.beta << "," << k.kind << "," << k.letter << "," << k.sign
        << "," << k.eps << "," << k.dalpha << "," << k.dbeta << "," << k.deps << "[";
    for (auto [p, q] : k.conns) out << p << ":" << q << " ";
    out << "];";
  }
  for (auto [i, j] : ge.constraints) out << "R" << i << "," << j << ";";

  CanonicalForm cf;
  cf.text = out.str();
  uint64_t h = 1469598103934665603ull;
  for (char c : cf.text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  cf.hash = h;
  return cf;
}

std::optional<size_t> mu_reducing_end(const std::vector<TraceRecord>& path, size_t start,
                                      const Budget& budget) {
  if (start >= path.size() || path[start].tp != 15) return std::nullopt;
  int mu = path[start].carrier;
  long long needed = 2;
  if (start + 1 < path.size() && path[start + 1].aux_available)
    needed = std::max<long long>(budget.s_value, 1);
  long long seen = 0;
  for (size_t m = start; m < path.size(); ++m) {
    if (path[m].tp != 15 || !path[m].principal) return std::nullopt;
    if (path[m].carrier == mu) ++seen;
    if (seen >= needed && m > start) return m + 1;
  }
  return std::nullopt;
}

ProhibitedReport detect_prohibited(const std::vector<TraceRecord>& path, const Budget& budget) {
  ProhibitedReport rep;
  auto threshold = [&](bool is12, int rho) {
    long long t = is12 ? budget.rep_threshold_12 : budget.rep_threshold_710;
    return t >= 0 ? t : rep_threshold_formula(rho);
  };

  for (int mode = 0; mode < 2; ++mode) {
    auto in_range = [&](int tp) { return mode == 0 ? (7 <= tp && tp <= 10) : tp == 12; };
    size_t i = 0;
    while (i < path.size()) {
      if (!in_range(path[i].tp)) {
        ++i;
        continue;
      }
      size_t j = i;
      std::map<uint64_t, long long> reps;
      while (j < path.size() && in_range(path[j].tp)) {
        uint64_t h = canonical_form(path[j].ge).hash;
        long long c = ++reps[h];
        long long t = threshold(mode == 1, path[j].ge.num_items);
        if (c >= t) {
          rep.found = true;
          rep.type = mode == 0 ? "7-10" : "12";
          rep.from = i;
          rep.to = j + 1;
          rep.detail = "an equation repeats " + std::to_string(c) + " times";
          return rep;
        }
        ++j;
      }
      i = j;
    }
  }

  size_t i = 0;
  while (i < path.size()) {
    if (path[i].tp != 15 || !path[i].principal) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < path.size() && path[j].tp == 15 && path[j].principal) ++j;
    std::vector<std::pair<int, size_t>> segments;  // (eta, one past segment end)
    size_t pos = i;
    while (pos < j) {
      auto end = mu_reducing_end(path, pos, budget);
      if (!end || *end > j) {
        ++pos;
        continue;
      }
      segments.emplace_back(path[pos].carrier, *end);
      pos = *end;
    }
    // Use the longest prefix of segments that leaves a rich enough tail p'.
    int n = static_cast<int>(path[i].ge.bases.size());
    long long need = 40LL * n * n * budget.f1_value + 20LL * n + 1;
    std::set<int> carriers;
    for (size_t k = i; k < j; ++k) carriers.insert(path[k].carrier);
    std::set<int> whole;
    for (size_t k = i; k < j; ++k)
      for (int t : path[k].transfer_bases) whole.insert(t);
    for (size_t take = segments.size(); take >= 1; --take) {
      bool all_often = true;
      for (int c : carriers) {
        long long cnt = 0;
        for (size_t s = 0; s < take; ++s)
          if (segments[s].first == c) ++cnt;
        if (cnt < need) {
          all_often = false;
          break;
        }
      }
      if (!all_often) continue;
      size_t tail_from = segments[take - 1].second;
      std::set<int> tail;
      for (size_t k = tail_from; k < j; ++k)
        for (int t : path[k].transfer_bases) tail.insert(t);
      if (std::includes(tail.begin(), tail.end(), whole.begin(), whole.end())) {
        rep.found = true;
        rep.type = "15";
        rep.from = i;
        rep.to = j;
        rep.detail = "decomposition with " + std::to_string(take) + " reducing segments";
        return rep;
      }
    }
    i = j;
  }
  return rep;
}

}  // namespace pcmr
