#include <fstream>
#include <string>

#include <json.hpp>

#include "molgram/errors.hpp"
#include "molgram/grammar.hpp"

namespace molgram {

namespace {

using Json = nlohmann::ordered_json;

BondOrder order_from_name(const std::string& s) {
  if (s == "single") return BondOrder::Single;
  if (s == "double") return BondOrder::Double;
  if (s == "triple") return BondOrder::Triple;
  if (s == "aromatic") return BondOrder::Aromatic;
  throw GrammarFormatError("unknown bond order '" + s + "'");
}

Json node_to_json(const MolHypergraph& h, int id) {
  Json j;
  j["id"] = id;
  const HGNode& n = h.node(id);
  if (n.kind == NodeKind::NonTerminal) {
    j["kind"] = "nonterminal";
    return j;
  }
  j["kind"] = "terminal";
  j["element"] = element_symbol(n.atom.element);
  j["charge"] = static_cast<int>(n.atom.formal_charge);
  j["aromatic"] = n.atom.aromatic;
  j["h"] = static_cast<int>(n.atom.total_h);
  return j;
}

Json edge_to_json(const Hyperedge& e) {
  Json j;
  if (!e.is_ring) {
    j["type"] = "bond";
    j["nodes"] = e.nodes;
    j["order"] = bond_order_name(e.order);
    return j;
  }
  j["type"] = "ring";
  j["nodes"] = e.nodes;
  j["aromatic"] = e.ring.aromatic;
  Json orders = Json::array();
  for (BondOrder o : e.ring.orders) orders.push_back(bond_order_name(o));
  j["orders"] = std::move(orders);
  j["positions"] = e.ring.pos2slot;
  return j;
}

Json rule_to_json(const ProductionRule& r) {
  Json j;
  j["key"] = r.key;
  j["is_initial"] = r.is_initial;
  j["terminal_only"] = r.terminal_only;
  j["count"] = r.count;
  Json anchors = Json::array();
  for (std::size_t i = 0; i < r.anchor_nodes.size(); ++i) {
    Json a;
    a["node"] = r.anchor_nodes[i];
    if (r.anchor_sigs[i].nonterminal) {
      a["nonterminal"] = true;
    } else {
      a["element"] = element_symbol(r.anchor_sigs[i].element);
      a["charge"] = static_cast<int>(r.anchor_sigs[i].charge);
    }
    anchors.push_back(std::move(a));
  }
  j["anchors"] = std::move(anchors);
  Json rhs;
  Json nodes = Json::array();
  for (int n : r.rhs.node_ids()) nodes.push_back(node_to_json(r.rhs, n));
  rhs["nodes"] = std::move(nodes);
  Json edges = Json::array();
  for (int e : r.rhs.edge_ids()) edges.push_back(edge_to_json(r.rhs.edge(e)));
  rhs["edges"] = std::move(edges);
  j["rhs"] = std::move(rhs);
  return j;
}

ProductionRule rule_from_json(const Json& j) {
  ProductionRule r;
  r.key = j.at("key").get<std::string>();
  r.is_initial = j.at("is_initial").get<bool>();
  r.terminal_only = j.at("terminal_only").get<bool>();
  r.count = j.at("count").get<int>();

  int expect = 0;
  for (const Json& nj : j.at("rhs").at("nodes")) {
    if (nj.at("id").get<int>() != expect++)
      throw GrammarFormatError("rule nodes must be contiguous from 0");
    HGNode n;
    if (nj.at("kind").get<std::string>() == "nonterminal") {
      n.kind = NodeKind::NonTerminal;
    } else {
      n.kind = NodeKind::Terminal;
      auto e = element_from_symbol(nj.at("element").get<std::string>());
      if (!e) throw GrammarFormatError("unknown element in rule node");
      n.atom.element = *e;
      n.atom.formal_charge =
          static_cast<std::int8_t>(nj.at("charge").get<int>());
      n.atom.aromatic = nj.at("aromatic").get<bool>();
      n.atom.total_h = static_cast<std::uint8_t>(nj.at("h").get<int>());
    }
    r.rhs.add_node(std::move(n));
  }
  for (const Json& ej : j.at("rhs").at("edges")) {
    Hyperedge e;
    e.nodes = ej.at("nodes").get<std::vector<int>>();
    if (ej.at("type").get<std::string>() == "bond") {
      e.is_ring = false;
      e.order = order_from_name(ej.at("order").get<std::string>());
    } else {
      e.is_ring = true;
      e.ring.aromatic = ej.at("aromatic").get<bool>();
      for (const Json& o : ej.at("orders"))
        e.ring.orders.push_back(order_from_name(o.get<std::string>()));
      e.ring.pos2slot = ej.at("positions").get<std::vector<int>>();
      for (int p : e.ring.pos2slot)
        if (p < 0 || p >= static_cast<int>(e.nodes.size()))
          throw GrammarFormatError("ring position out of range");
    }
    r.rhs.add_edge(std::move(e));
  }
  for (const Json& aj : j.at("anchors")) {
    const int node = aj.at("node").get<int>();
    if (!r.rhs.has_node(node))
      throw GrammarFormatError("anchor references missing node");
    r.anchor_nodes.push_back(node);
    AnchorSignature sig;
    if (aj.contains("nonterminal") && aj.at("nonterminal").get<bool>()) {
      sig.nonterminal = true;
    } else {
      auto e = element_from_symbol(aj.at("element").get<std::string>());
      if (!e) throw GrammarFormatError("unknown element in anchor");
      sig.element = *e;
      sig.charge = static_cast<std::int8_t>(aj.at("charge").get<int>());
    }
    r.anchor_sigs.push_back(sig);
  }
  if (rule_key(r) != r.key)
    throw GrammarFormatError("rule key does not match its structure");
  return r;
}

}  // namespace

std::string grammar_to_json(const Grammar& g) {
  Json j;
  j["version"] = 1;
  Json rules = Json::array();
  for (const ProductionRule& r : g.rules) rules.push_back(rule_to_json(r));
  j["rules"] = std::move(rules);

  Json prov = Json::object();
  for (const Derivation& d : g.derivations) {
    Json ids = Json::array();
    for (const ProvenanceStep& s : d.steps) ids.push_back(s.rule_id);
    prov[d.molecule_key] = std::move(ids);
  }
  j["provenance"] = std::move(prov);

  Json replay = Json::array();
  for (const Derivation& d : g.derivations) {
    Json dj;
    dj["molecule"] = d.molecule_key;
    Json steps = Json::array();
    for (const ProvenanceStep& s : d.steps) {
      Json sj;
      sj["rule"] = s.rule_id;
      sj["created"] = s.created_nt;
      sj["internals"] = s.internal_ids;
      sj["anchors"] = s.anchor_ids;
      steps.push_back(std::move(sj));
    }
    dj["steps"] = std::move(steps);
    replay.push_back(std::move(dj));
  }
  j["replay"] = std::move(replay);
  return j.dump(1) + "\n";
}

Grammar grammar_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw GrammarFormatError(std::string("grammar file is not valid JSON: ") +
                             e.what());
  }
  try {
    if (j.at("version").get<int>() != 1)
      throw GrammarFormatError("unsupported grammar file version");
    Grammar g;
    for (const Json& rj : j.at("rules")) g.rules.push_back(rule_from_json(rj));

    if (j.contains("replay")) {
      for (const Json& dj : j.at("replay")) {
        Derivation d;
        d.molecule_key = dj.at("molecule").get<std::string>();
        for (const Json& sj : dj.at("steps")) {
          ProvenanceStep s;
          s.rule_id = sj.at("rule").get<int>();
          s.created_nt = sj.at("created").get<int>();
          s.internal_ids = sj.at("internals").get<std::vector<int>>();
          s.anchor_ids = sj.at("anchors").get<std::vector<int>>();
          if (s.rule_id < 0 || s.rule_id >= static_cast<int>(g.rules.size()))
            throw GrammarFormatError("replay step references unknown rule");
          d.steps.push_back(std::move(s));
        }
        g.derivations.push_back(std::move(d));
      }
    } else {
      for (const auto& [key, ids] : j.at("provenance").items()) {
        Derivation d;
        d.molecule_key = key;
        for (const Json& id : ids)
          d.steps.push_back({id.get<int>(), -1, {}, {}});
        g.derivations.push_back(std::move(d));
      }
    }
    return g;
  } catch (const Json::exception& e) {
    throw GrammarFormatError(std::string("malformed grammar file: ") + e.what());
  }
}

void save_grammar(const Grammar& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << grammar_to_json(g);
  if (!out) throw Error("failed writing '" + path + "'");
}

Grammar load_grammar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GrammarFormatError("cannot open grammar file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return grammar_from_json(text);
}

}  // namespace molgram
