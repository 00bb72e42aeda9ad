// Command-line driver: normal forms, generalised-equation handling, the
// reduction pipeline, process trees, periodic structures and solution-tree
// leaves. Exit codes: 0 ok, 1 input error, 2 budget exhausted (partial
// results emitted), 3 internal invariant violation.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcmr/group.h"
#include "pcmr/json_io.h"
#include "pcmr/oracle.h"
#include "pcmr/periodic.h"
#include "pcmr/process_tree.h"
#include "pcmr/reduction.h"
#include "pcmr/soltree.h"
#include "pcmr/trace.h"

using namespace pcmr;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equation systems over partially commutative groups"};
  app.require_subcommand(1);

  std::string graph_path, word_text, ge_path, system_path, solution_path, out_path;
  std::string period_text, format = "json";
  unsigned seed = 0;
  Budget budget;
  app.add_option("--seed", seed, "seed for randomized auxiliary searches");

  auto* normalize = app.add_subcommand("normalize", "lexicographic normal form of a word");
  normalize->add_option("--graph", graph_path)->required();
  normalize->add_option("--word", word_text)->required();

  auto* dmnf = app.add_subcommand("dm-nf", "inversion-compatible trace normal form");
  dmnf->add_option("--graph", graph_path)->required();
  dmnf->add_option("--word", word_text)->required();

  auto* ge_cmd = app.add_subcommand("ge", "validate a generalised equation file");
  ge_cmd->add_option("--ge", ge_path)->required();
  ge_cmd->add_option("--solution", solution_path);

  auto* reduce_cmd = app.add_subcommand("reduce", "reduce a system to equations over the free monoid");
  reduce_cmd->add_option("--system", system_path)->required();
  reduce_cmd->add_option("--trace-solution", solution_path);
  reduce_cmd->add_option("--out", out_path);

  auto* tree_cmd = app.add_subcommand("tree", "build the process tree of an equation");
  tree_cmd->add_option("--ge", ge_path)->required();
  tree_cmd->add_option("--max-depth", budget.max_depth);
  tree_cmd->add_option("--max-nodes", budget.max_nodes);
  tree_cmd->add_option("--properness-bound", budget.properness_bound);
  tree_cmd->add_option("--format", format, "json or dot");
  tree_cmd->add_option("--out", out_path);

  auto* trace_cmd = app.add_subcommand("trace", "trace a solution through the process");
  trace_cmd->add_option("--ge", ge_path)->required();
  trace_cmd->add_option("--solution", solution_path)->required();
  trace_cmd->add_option("--max-depth", budget.max_depth);
  trace_cmd->add_option("--s-value", budget.s_value);

  auto* periodic_cmd = app.add_subcommand("periodic", "periodic structure analysis");
  periodic_cmd->add_option("--ge", ge_path)->required();
  periodic_cmd->add_option("--solution", solution_path)->required();
  periodic_cmd->add_option("--period", period_text)->required();
  size_t bound = 0;
  periodic_cmd->add_option("--bound", bound, "bounded search radius for classification");

  auto* soltree_cmd = app.add_subcommand("soltree", "solution-tree leaves of a coefficient leaf");
  soltree_cmd->add_option("--ge", ge_path)->required();

  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force references");
  std::string oracle_op = "bfs-length";
  oracle_cmd->add_option("--op", oracle_op, "bfs-length | trace-class | brute-centraliser");
  oracle_cmd->add_option("--graph", graph_path)->required();
  oracle_cmd->add_option("--word", word_text)->required();

  CLI11_PARSE(app, argc, argv);

  // Parallelism cap honored for schedule-independent output; the current
  // build evaluates sequentially, which is one legal schedule.
  if (const char* threads = std::getenv("RAAG_MR_THREADS")) (void)threads;

  try {
    if (*normalize) {
      auto g = graph_from_json(load_json(graph_path));
      std::cout << g.print_word(lex_nf(g, g.parse_word(word_text)).canonical) << "\n";
    } else if (*dmnf) {
      auto g = graph_from_json(load_json(graph_path));
      std::cout << g.print_word(dm_nf(g, g.parse_word(word_text))) << "\n";
    } else if (*ge_cmd) {
      auto ge = ge_from_json(load_json(ge_path));
      auto rep = is_formally_consistent(ge);
      json j;
      j["formally_consistent"] = rep.ok;
      if (!rep.ok) {
        j["violated_condition"] = rep.condition;
        j["detail"] = rep.detail;
      }
      auto m = metrics(ge);
      j["metrics"] = {{"n_active_bases", m.n_active_bases},
                      {"open_boundaries", m.open_boundaries_active},
                      {"complexity", m.complexity},
                      {"standard_form", m.standard_form},
                      {"rho_a", m.rho_a},
                      {"quadratic_part_end", m.quadratic_part_end}};
      if (!solution_path.empty()) {
        auto h = solution_from_json(ge.graph, load_json(solution_path));
        auto chk = check_solution(ge, h, SolutionMonoid::F);
        j["solution_ok"] = chk.ok;
        if (!chk.ok) j["solution_failure"] = chk.failure;
      }
      emit(j, out_path);
    } else if (*reduce_cmd) {
      auto sys = system_from_json(load_json(system_path));
      json j;
      if (!solution_path.empty()) {
        auto sol_json = load_json(solution_path);
        auto w = solution_from_json(sys.graph, sol_json);
        auto res = trace_solution(sys, w.words);
        j["table"] = json::object();
        json rows = json::array();
        for (size_t e = 0; e < res.table.v.size(); ++e) {
          json row = json::array();
          for (const auto& cell : res.table.v[e]) {
            std::string text;
            for (const ZRef& z : cell) {
              if (!text.empty()) text += " ";
              text += "z" + std::to_string(z.z) + (z.sign < 0 ? "^-1" : "");
            }
            row.push_back(text);
          }
          rows.push_back(row);
        }
        j["table"]["V"] = rows;
        json zedges = json::array();
        for (auto [a, b] : res.table.z_edges)
          zedges.push_back({"z" + std::to_string(a), "z" + std::to_string(b)});
        j["table"]["commuting_z"] = zedges;
        j["ge_over_T"] = ge_to_json(res.over_t.ge);
        j["induced_T"] = solution_to_json(sys.graph, res.over_t.induced);
        j["ge_over_F"] = ge_to_json(res.over_f.ge);
        j["induced_F"] = solution_to_json(sys.graph, res.over_f.induced);
        json p = json::object();
        for (size_t v = 0; v < sys.variables.size(); ++v)
          p[sys.variables[v]] = sys.graph.print_word(res.p_image[v]);
        j["p_image"] = p;
      } else {
        auto res = reduce_system(sys);
        j["complete"] = res.complete;
        json outs = json::array();
        for (const auto& o : res.outputs) {
          json jo;
          jo["ge"] = ge_to_json(o.ge);
          json wit = json::object();
          for (size_t v = 0; v < sys.variables.size(); ++v)
            wit[sys.variables[v]] =
                o.trivial_vars[v] ? std::string("1") : print_item_word(o.ge, o.witness_x[v]);
          jo["witness"] = wit;
          outs.push_back(jo);
        }
        j["outputs"] = outs;
        if (!res.complete) {
          emit(j, out_path);
          return 2;
        }
      }
      emit(j, out_path);
    } else if (*tree_cmd) {
      auto ge = ge_from_json(load_json(ge_path));
      auto tree = build_tree(ge, budget);
      if (format == "dot") {
        if (out_path.empty()) {
          std::cout << tree_to_dot(tree);
        } else {
          std::ofstream out(out_path);
          out << tree_to_dot(tree);
        }
      } else {
        emit(tree_to_json(tree), out_path);
      }
      if (tree.budget_exhausted) return 2;
    } else if (*trace_cmd) {
      auto ge = ge_from_json(load_json(ge_path));
      auto h = solution_from_json(ge.graph, load_json(solution_path));
      auto path = trace_path(ge, h, budget);
      json j = json::array();
      for (const auto& rec : path) {
        json jr;
        jr["tp"] = rec.tp;
        jr["solution_length"] = rec.solution.total_length();
        jr["note"] = rec.note;
        jr["principal"] = rec.principal;
        j.push_back(jr);
      }
      emit(j, out_path);
    } else if (*periodic_cmd) {
      auto ge = ge_from_json(load_json(ge_path));
      auto h = solution_from_json(ge.graph, load_json(solution_path));
      Word p = ge.graph.parse_word(period_text);
      auto ps = structure_from_solution(ge, h, p);
      auto cd = build_cycle_data(ge, ps);
      json j;
      json classes = json::array();
      {
        std::map<int, std::vector<std::string>> by_class;
        for (auto [key, c] : ps.r_class)
          by_class[c].push_back(std::to_string(key.first) +
                                (key.second ? "(right)" : ""));
        for (auto& [c, members] : by_class) {
          (void)c;
          classes.push_back(members);
        }
      }
      j["r_classes"] = classes;
      j["members"] = {{"items", ps.items}, {"bases", ps.bases}};
      json c1 = json::array(), c2 = json::array();
      for (const auto& row : cd.c1) c1.push_back(row);
      for (const auto& row : cd.c2) c2.push_back(row);
      j["C1"] = c1;
      j["C2"] = c2;
      auto cls = classify_structure(ge, ps, cd, bound);
      j["classification"] = cls.verdict == StructureVerdict::Singular          ? "singular"
                            : cls.verdict == StructureVerdict::Regular         ? "regular"
                            : cls.verdict == StructureVerdict::StronglySingularA ? "strongly-singular-a"
                            : cls.verdict == StructureVerdict::StronglySingularB ? "strongly-singular-b"
                                                                                 : "unknown";
      j["certified"] = cls.certified;
      j["evidence"] = cls.evidence;
      // Gamma in DOT form.
      std::ostringstream dot;
      dot << "graph Gamma {\n";
      for (const auto& e : cd.edges)
        dot << "  v" << e.from << " -- v" << e.to << " [label=\"h" << e.item << "\"];\n";
      dot << "}\n";
      j["gamma_dot"] = dot.str();
      if (cls.verdict == StructureVerdict::Singular && !cd.c2.empty()) {
        auto red = euclid_reduce_c2(ge, ps, cd, h, p);
        j["euclid"] = {{"exponents_before", red.exponents_before},
                       {"exponents_after", red.exponents_after},
                       {"log", red.log},
                       {"h_plus", solution_to_json(ge.graph, red.h_plus)["H"]}};
      }
      emit(j, out_path);
    } else if (*soltree_cmd) {
      auto ge = ge_from_json(load_json(ge_path));
      auto pi = build_pi(ge);
      auto homs = enumerate_homs(pi, ge.graph);
      json j;
      json jpi;
      jpi["items"] = pi.item_vertices;
      json ii = json::array();
      for (auto [a, b] : pi.item_item) ii.push_back({a, b});
      json il = json::array();
      for (auto [a, b] : pi.item_letter) il.push_back({a, ge.graph.letter_name(b)});
      jpi["item_item"] = ii;
      jpi["item_letter"] = il;
      j["pi"] = jpi;
      json jh = json::array();
      for (const auto& hom : homs) {
        json row = json::object();
        for (size_t k = 0; k < pi.item_vertices.size(); ++k) {
          std::string set;
          for (size_t x = 0; x < ge.graph.rank(); ++x)
            if ((hom.image[k] >> x) & 1) set += ge.graph.letter_name(static_cast<int>(x));
          row["h" + std::to_string(pi.item_vertices[k])] = set;
        }
        jh.push_back(row);
      }
      j["homomorphisms"] = jh;
      json leaves = json::array();
      for (const auto& hom : homs) {
        auto leaf = leaf_group(hom, pi, ge.graph);
        leaves.push_back(graph_to_json(leaf.flattened()));
      }
      j["leaf_groups"] = leaves;
      emit(j, out_path);
    } else if (*oracle_cmd) {
      auto g = graph_from_json(load_json(graph_path));
      Word w = g.parse_word(word_text);
      if (oracle_op == "bfs-length") {
        std::cout << oracle::bfs_geodesic_length(g, w) << "\n";
      } else if (oracle_op == "brute-centraliser") {
        oracle::SearchBounds b;
        b.max_word_len = 3;
        for (const Word& c : oracle::brute_centraliser(g, w, b))
          std::cout << g.print_word(c) << "\n";
      } else if (oracle_op == "trace-class") {
        for (const Word& rep : oracle::swap_closure_trace_class(g, w))
          std::cout << g.print_word(rep) << "\n";
      } else {
        throw input_error("unknown oracle op: " + oracle_op);
      }
    }
  } catch (const input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const budget_error& e) {
    std::cerr << "budget exhausted: " << e.what() << "\n";
    return 2;
  } catch (const internal_error& e) {
    std::cerr << "internal invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  }
  (void)seed;
  return 0;
}
