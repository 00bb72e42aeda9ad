#include "pcmr/json_io.h"

#include <sstream>

namespace pcmr {

using nlohmann::json;

namespace {

void require_schema(const json& j, const char* want) {
  if (!j.is_object()) throw input_error("expected a JSON object");
  if (j.contains("schema") && j["schema"] != want)
    throw input_error(std::string("unexpected schema: expected ") + want);
}

}  // namespace

json graph_to_json(const CommutationGraph& g) {
  json j;
  j["schema"] = kSchemaGraph;
  j["letters"] = g.letters();
  json edges = json::array();
  for (auto [a, b] : g.edges()) edges.push_back({g.letter_name(a), g.letter_name(b)});
  j["edges"] = edges;
  return j;
}

CommutationGraph graph_from_json(const json& j) {
  require_schema(j, kSchemaGraph);
  std::vector<std::string> letters = j.at("letters").get<std::vector<std::string>>();
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : j.at("edges"))
    edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  return CommutationGraph(letters, edges);
}

json ge_to_json(const GeneralisedEquation& ge) {
  json j;
  j["schema"] = kSchemaGe;
  j["graph"] = graph_to_json(ge.graph);
  j["rho"] = ge.num_items;
  json bases = json::array();
  for (const auto& b : ge.bases) {
    json jb;
    jb["id"] = b.id;
    jb["kind"] = b.kind == BaseKind::Variable ? "variable" : "constant";
    if (b.kind == BaseKind::Constant) {
      jb["letter"] = ge.graph.letter_name(b.letter.letter) + (b.letter.sign < 0 ? "^-1" : "");
    } else {
      jb["eps"] = b.eps;
      jb["dual"] = b.dual;
    }
    jb["alpha"] = b.alpha;
    jb["beta"] = b.beta;
    bases.push_back(jb);
  }
  j["bases"] = bases;
  json conns = json::array();
  for (const auto& c : ge.connections) conns.push_back({c.p, c.base, c.q});
  j["connections"] = conns;
  json cons = json::array();
  for (auto [a, b] : ge.constraints) cons.push_back({a, b});
  j["constraints"] = cons;
  json secs = json::array();
  for (const auto& s : ge.sections) {
    json js;
    js["from"] = s.from;
    js["to"] = s.to;
    js["tag"] = s.tag == SectionTag::Active ? "active"
                : s.tag == SectionTag::NonActive ? "non-active"
                                                 : "constant";
    secs.push_back(js);
  }
  j["sections"] = secs;
  return j;
}

GeneralisedEquation ge_from_json(const json& j) {
  require_schema(j, kSchemaGe);
  GeneralisedEquation ge;
  ge.graph = graph_from_json(j.at("graph"));
  ge.num_items = j.at("rho").get<int>();
  for (const auto& jb : j.at("bases")) {
    BaseRec b;
    b.id = jb.at("id").get<int>();
    b.alpha = jb.at("alpha").get<int>();
    b.beta = jb.at("beta").get<int>();
    std::string kind = jb.at("kind").get<std::string>();
    if (kind == "constant") {
      b.kind = BaseKind::Constant;
      Word w = ge.graph.parse_word(jb.at("letter").get<std::string>());
      if (w.size() != 1) throw input_error("constant base letter must be one syllable");
      b.letter = w[0];
    } else {
      b.kind = BaseKind::Variable;
      b.eps = jb.at("eps").get<int>();
      b.dual = jb.at("dual").get<int>();
    }
    ge.bases.push_back(b);
    ge.next_base_id = std::max(ge.next_base_id, b.id + 1);
  }
  for (const auto& jc : j.at("connections"))
    ge.connections.push_back({jc.at(0).get<int>(), jc.at(1).get<int>(), jc.at(2).get<int>()});
  for (const auto& jc : j.at("constraints")) {
    int a = jc.at(0).get<int>(), b = jc.at(1).get<int>();
    ge.constraints.insert({std::min(a, b), std::max(a, b)});
  }
  for (const auto& js : j.at("sections")) {
    Section s;
    s.from = js.at("from").get<int>();
    s.to = js.at("to").get<int>();
    std::string tag = js.at("tag").get<std::string>();
    s.tag = tag == "active" ? SectionTag::Active
            : tag == "constant" ? SectionTag::Constant
                                : SectionTag::NonActive;
    ge.sections.push_back(s);
  }
  ge.validate();
  return ge;
}

json solution_to_json(const CommutationGraph& g, const SolutionTuple& h) {
  json j;
  j["schema"] = kSchemaSolution;
  json words = json::array();
  for (const Word& w : h.words) words.push_back(g.print_word(w));
  j["H"] = words;
  return j;
}

SolutionTuple solution_from_json(const CommutationGraph& g, const json& j) {
  require_schema(j, kSchemaSolution);
  SolutionTuple h;
  for (const auto& w : j.at("H")) h.words.push_back(g.parse_word(w.get<std::string>()));
  return h;
}

json system_to_json(const EquationSystem& sys) {
  json j;
  j["schema"] = kSchemaSystem;
  j["graph"] = graph_to_json(sys.graph);
  j["variables"] = sys.variables;
  json eqs = json::array();
  for (const auto& eq : sys.equations) {
    std::string text;
    for (const auto& c : eq) {
      if (!text.empty()) text += " ";
      if (c.is_var)
        text += sys.variables[c.var] + (c.sign < 0 ? "^-1" : "");
      else
        text += sys.graph.letter_name(c.letter.letter) + (c.letter.sign < 0 ? "^-1" : "");
    }
    eqs.push_back(text + " = 1");
  }
  j["equations"] = eqs;
  return j;
}

EquationSystem system_from_json(const json& j) {
  require_schema(j, kSchemaSystem);
  CommutationGraph g = graph_from_json(j.at("graph"));
  std::vector<std::string> vars = j.at("variables").get<std::vector<std::string>>();
  std::vector<std::string> eqs;
  for (const auto& e : j.at("equations")) eqs.push_back(e.get<std::string>());
  return EquationSystem::parse(g, vars, eqs);
}

std::string item_word_text(const ItemWord& w) {
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
      out << "#" << s.letter << (s.sign < 0 ? "^-1" : "");
    }
  }
  if (first) out << "1";
  return out.str();
}

json word_map_to_json(const GeneralisedEquation& target, const WordMap& map) {
  json j = json::object();
  for (int i = 1; i <= map.source_items; ++i)
    j["h" + std::to_string(i)] = print_item_word(target, map.assign[i - 1]);
  return j;
}

json tree_to_json(const ProcessTree& tree) {
  json j;
  j["schema"] = kSchemaTree;
  j["budget_exhausted"] = tree.budget_exhausted;
  json nodes = json::array();
  for (const auto& n : tree.nodes) {
    json jn;
    jn["id"] = n.id;
    jn["tp"] = n.tp;
    jn["parent"] = n.parent;
    jn["edge_kind"] = n.edge_kind == EdgeKind::Auxiliary ? "auxiliary" : "principal";
    jn["budget_cut"] = n.budget_cut;
    jn["ge"] = ge_to_json(n.ge);
    if (n.parent >= 0) jn["edge_map"] = word_map_to_json(n.ge, n.edge_map);
    nodes.push_back(jn);
  }
  j["nodes"] = nodes;
  return j;
}

std::string tree_to_dot(const ProcessTree& tree) {
  std::ostringstream out;
  out << "digraph process {\n";
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    auto m = metrics(n.ge);
    out << "  n" << i << " [label=\"" << n.id << " tp=" << n.tp << " rho=" << n.ge.num_items
        << " comp=" << m.complexity << (n.budget_cut ? " cut" : "") << "\"];\n";
  }
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.parent < 0) continue;
    out << "  n" << n.parent << " -> n" << i;
    if (n.edge_kind == EdgeKind::Auxiliary) out << " [style=dashed]";
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace pcmr
