#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "molgram/canon.hpp"
#include "molgram/errors.hpp"
#include "molgram/grammar.hpp"
#include "molgram/rng.hpp"

namespace molgram {

namespace {

std::uint64_t pack_node_color(const HGNode& n, bool anchor) {
  std::uint64_t c;
  if (n.kind == NodeKind::NonTerminal) {
    c = 0x1ull << 32;
  } else {
    c = (0x2ull << 32) |
        (static_cast<std::uint64_t>(n.atom.element) << 16) |
        (static_cast<std::uint64_t>(n.atom.formal_charge + 16) << 10) |
        (static_cast<std::uint64_t>(n.atom.aromatic ? 1 : 0) << 9) |
        n.atom.total_h;
  }
  if (anchor) c |= 0x1ull << 40;
  return c;
}

constexpr std::uint64_t kRingPosColor = 0x3ull << 32;
constexpr std::uint64_t kBondEdge = 0x10;
constexpr std::uint64_t kRingCycleEdge = 0x20;
constexpr std::uint64_t kOccupancyEdge = 0x30;

// Gadget encoding of a rule: one vertex per RHS node (anchor flag folded
// into its color) and, per ring edge, a cycle of position vertices whose
// cycle edges carry the bond orders and whose occupancy edges point at the
// covering node. Ring rotation/reflection symmetry then reduces to plain
// graph isomorphism.
ColoredGraph rule_gadget(const MolHypergraph& rhs, const std::set<int>& anchors) {
  int extra = 0;
  for (int e : rhs.edge_ids())
    if (rhs.edge(e).is_ring) extra += rhs.edge(e).ring.arity();
  ColoredGraph g(rhs.node_count() + extra);

  std::map<int, int> vid;  // rhs node id -> gadget vertex
  int next = 0;
  for (int n : rhs.node_ids()) {
    vid[n] = next;
    g.set_color(next, pack_node_color(rhs.node(n), anchors.count(n) > 0));
    ++next;
  }
  for (int e : rhs.edge_ids()) {
    const Hyperedge& edge = rhs.edge(e);
    if (!edge.is_ring) {
      g.add_edge(vid.at(edge.nodes[0]), vid.at(edge.nodes[1]),
                 kBondEdge | static_cast<std::uint64_t>(edge.order));
      continue;
    }
    const int k = edge.ring.arity();
    const int base = next;
    next += k;
    for (int p = 0; p < k; ++p) {
      g.set_color(base + p, kRingPosColor | (edge.ring.aromatic ? 1 : 0));
      g.add_edge(base + p, base + (p + 1) % k,
                 kRingCycleEdge | static_cast<std::uint64_t>(edge.ring.orders[p]));
      g.add_edge(base + p, vid.at(edge.nodes[edge.ring.pos2slot[p]]),
                 kOccupancyEdge);
    }
  }
  return g;
}

struct EdgeSortKey {
  bool is_ring;
  std::vector<int> nodes;
  std::vector<int> label;

  bool operator<(const EdgeSortKey& o) const {
    if (is_ring != o.is_ring) return !is_ring;
    if (nodes != o.nodes) return nodes < o.nodes;
    return label < o.label;
  }
};

EdgeSortKey edge_sort_key(const Hyperedge& e) {
  EdgeSortKey k;
  k.is_ring = e.is_ring;
  k.nodes = e.nodes;
  if (e.is_ring) {
    k.label.push_back(e.ring.aromatic ? 1 : 0);
    for (BondOrder o : e.ring.orders) k.label.push_back(static_cast<int>(o));
    for (int p : e.ring.pos2slot) k.label.push_back(p);
  } else {
    k.label.push_back(static_cast<int>(e.order));
  }
  return k;
}

// Canonicalizes (rhs, anchors) in place: nodes renumbered to canonical
// order 0..k-1, edges sorted. Returns old-id -> new-id.
std::map<int, int> canonicalize_rule(MolHypergraph& rhs, std::set<int>& anchors,
                                     std::string* cert_out) {
  const ColoredGraph gadget = rule_gadget(rhs, anchors);
  const CanonResult canon = canonical_form(gadget);
  if (cert_out) *cert_out = canon.certificate;

  // Gadget vertices 0..node_count-1 correspond to rhs nodes in id order.
  std::vector<std::pair<int, int>> order;  // (canon position, rhs node id)
  {
    int v = 0;
    for (int n : rhs.node_ids()) order.emplace_back(canon.canon_pos[v++], n);
  }
  std::sort(order.begin(), order.end());

  std::map<int, int> perm;
  MolHypergraph out;
  out.origin = rhs.origin;
  for (const auto& [pos, n] : order) perm[n] = out.add_node(rhs.node(n));

  std::vector<Hyperedge> edges;
  for (int e : rhs.edge_ids()) {
    Hyperedge copy = rhs.edge(e);
    for (int& n : copy.nodes) n = perm.at(n);
    normalize_hyperedge(copy);
    edges.push_back(std::move(copy));
  }
  std::sort(edges.begin(), edges.end(), [](const Hyperedge& a, const Hyperedge& b) {
    return edge_sort_key(a) < edge_sort_key(b);
  });
  for (Hyperedge& e : edges) out.add_edge(std::move(e));

  std::set<int> new_anchors;
  for (int a : anchors) new_anchors.insert(perm.at(a));
  anchors = std::move(new_anchors);
  rhs = std::move(out);
  return perm;
}

}  // namespace

bool ProductionRule::is_anchor(int rhs_node) const {
  return std::find(anchor_nodes.begin(), anchor_nodes.end(), rhs_node) !=
         anchor_nodes.end();
}

std::vector<int> ProductionRule::internal_nodes() const {
  std::vector<int> out;
  for (int n : rhs.node_ids())
    if (!is_anchor(n)) out.push_back(n);
  return out;
}

std::vector<int> ProductionRule::connecting_edges() const {
  std::vector<int> out;
  for (int e : rhs.edge_ids())
    for (int n : rhs.edge(e).nodes)
      if (is_anchor(n)) {
        out.push_back(e);
        break;
      }
  return out;
}

RuleInstance make_rule(const MolHypergraph& h, const std::set<int>& component_nodes,
                       const std::set<int>& straddling_edges) {
  check_component(h, component_nodes, straddling_edges);

  RuleInstance inst;
  ProductionRule& r = inst.rule;
  r.is_initial =
      component_nodes.size() == static_cast<std::size_t>(h.node_count());

  std::set<int> anchor_src;
  for (int e : straddling_edges)
    for (int n : h.edge(e).nodes)
      if (!component_nodes.count(n)) anchor_src.insert(n);

  // Local graph: component nodes then anchors, both ascending.
  MolHypergraph raw;
  raw.origin = h.origin;
  std::map<int, int> local;
  std::vector<int> local_source;
  for (int n : component_nodes) {
    local[n] = raw.add_node(h.node(n));
    local_source.push_back(n);
  }
  for (int n : anchor_src) {
    local[n] = raw.add_node(h.node(n));
    local_source.push_back(n);
  }
  for (int e : h.edge_ids()) {
    const Hyperedge& edge = h.edge(e);
    bool inside = true;
    for (int n : edge.nodes)
      if (!component_nodes.count(n)) inside = false;
    if (!inside && !straddling_edges.count(e)) continue;
    Hyperedge copy = edge;
    for (int& n : copy.nodes) n = local.at(n);
    raw.add_edge(std::move(copy));
  }

  std::set<int> anchors_local;
  for (int n : anchor_src) anchors_local.insert(local.at(n));

  std::string cert;
  const std::map<int, int> perm = canonicalize_rule(raw, anchors_local, &cert);
  r.rhs = std::move(raw);
  r.key = std::string("R") + (r.is_initial ? "1" : "0") + "|" + cert;

  std::map<int, int> source_of_canon;
  for (std::size_t i = 0; i < local_source.size(); ++i)
    source_of_canon[perm.at(static_cast<int>(i))] = local_source[i];

  r.anchor_nodes.assign(anchors_local.begin(), anchors_local.end());
  for (int a : r.anchor_nodes) {
    const HGNode& n = r.rhs.node(a);
    AnchorSignature sig;
    sig.nonterminal = n.kind == NodeKind::NonTerminal;
    if (!sig.nonterminal) {
      sig.element = n.atom.element;
      sig.charge = n.atom.formal_charge;
    }
    r.anchor_sigs.push_back(sig);
    inst.anchor_source_ids.push_back(source_of_canon.at(a));
  }

  r.terminal_only = true;
  for (int n : r.internal_nodes()) {
    inst.internal_source_ids.push_back(source_of_canon.at(n));
    if (r.rhs.node(n).kind == NodeKind::NonTerminal) r.terminal_only = false;
  }
  r.count = 1;
  return inst;
}

std::string rule_key(const ProductionRule& r) {
  std::set<int> anchors(r.anchor_nodes.begin(), r.anchor_nodes.end());
  const ColoredGraph gadget = rule_gadget(r.rhs, anchors);
  return std::string("R") + (r.is_initial ? "1" : "0") + "|" +
         canonical_form(gadget).certificate;
}

namespace {

bool signature_matches(const AnchorSignature& sig, const HGNode& n) {
  if (sig.nonterminal) return n.kind == NodeKind::NonTerminal;
  return n.kind == NodeKind::Terminal && n.atom.element == sig.element &&
         n.atom.formal_charge == sig.charge;
}

struct MatchState {
  const MolHypergraph& partial;
  const ProductionRule& rule;
  int nt;
  std::vector<int> conn;               // rhs connecting edge ids
  std::vector<int> partial_edges;      // edges incident to nt
  std::vector<bool> used;              // per partial_edges
  std::map<int, int> slot_of_anchor;   // rhs anchor node -> slot index
  std::vector<int> binding;            // slot -> partial node (-1 unset)
  std::vector<std::pair<int, int>> pairing;
  std::vector<RuleMatch>& out;
  std::set<std::string>& dedup;
};

void emit(MatchState& s) {
  for (int b : s.binding)
    if (b < 0) return;  // every slot must be bound
  std::string sig;
  for (const auto& [a, b] : s.pairing)
    sig += std::to_string(a) + ":" + std::to_string(b) + ";";
  sig += "|";
  for (int b : s.binding) sig += std::to_string(b) + ";";
  if (!s.dedup.insert(sig).second) return;
  RuleMatch m;
  m.nt_node = s.nt;
  m.edge_pairing = s.pairing;
  m.anchor_binding = s.binding;
  s.out.push_back(std::move(m));
}

bool bind(MatchState& s, int slot, int node, std::vector<int>& undo) {
  if (s.binding[slot] == node) return true;
  if (s.binding[slot] != -1) return false;
  for (int b : s.binding)
    if (b == node) return false;  // injectivity
  if (!signature_matches(s.rule.anchor_sigs[slot], s.partial.node(node)))
    return false;
  s.binding[slot] = node;
  undo.push_back(slot);
  return true;
}

void try_edge(MatchState& s, std::size_t ci);

// Enumerate all label-preserving alignments of rule connecting edge `ce`
// onto partial edge `pe`, extending bindings, then recurse.
void align_and_recurse(MatchState& s, std::size_t ci, int ce_idx, int pe_idx) {
  const Hyperedge& ce = s.rule.rhs.edge(ce_idx);
  const Hyperedge& pe = s.partial.edge(pe_idx);
  if (ce.is_ring != pe.is_ring) return;

  if (!ce.is_ring) {
    if (ce.order != pe.order) return;
    const int other =
        pe.nodes[0] == s.nt ? pe.nodes[1] : (pe.nodes[1] == s.nt ? pe.nodes[0] : -1);
    if (other < 0) return;
    int anchor_node = -1;
    for (int n : ce.nodes)
      if (s.rule.is_anchor(n)) anchor_node = n;
    if (anchor_node < 0) return;
    std::vector<int> undo;
    if (bind(s, s.slot_of_anchor.at(anchor_node), other, undo)) {
      s.pairing.emplace_back(ce_idx, pe_idx);
      try_edge(s, ci + 1);
      s.pairing.pop_back();
    }
    for (int slot : undo) s.binding[slot] = -1;
    return;
  }

  const int k = ce.ring.arity();
  if (pe.ring.arity() != k || pe.ring.aromatic != ce.ring.aromatic) return;
  for (int start = 0; start < k; ++start) {
    for (int rev = 0; rev < 2; ++rev) {
      bool orders_ok = true;
      for (int j = 0; j < k && orders_ok; ++j) {
        const int po = rev ? ((start - j - 1) % k + k) % k : (start + j) % k;
        if (pe.ring.orders[j] != ce.ring.orders[po]) orders_ok = false;
      }
      // Position map: partial position j corresponds to rule position
      // rot(j); owners must agree (internal <-> nt, anchor <-> node).
      if (!orders_ok) continue;
      std::vector<int> undo;
      bool ok = true;
      for (int j = 0; j < k && ok; ++j) {
        const int rp = rev ? ((start - j) % k + k) % k : (start + j) % k;
        const int rule_owner = ce.nodes[ce.ring.pos2slot[rp]];
        const int part_owner = pe.nodes[pe.ring.pos2slot[j]];
        if (s.rule.is_anchor(rule_owner)) {
          if (part_owner == s.nt) { ok = false; break; }
          ok = bind(s, s.slot_of_anchor.at(rule_owner), part_owner, undo);
        } else {
          if (part_owner != s.nt) ok = false;
        }
      }
      if (ok) {
        s.pairing.emplace_back(ce_idx, pe_idx);
        try_edge(s, ci + 1);
        s.pairing.pop_back();
      }
      for (int slot : undo) s.binding[slot] = -1;
    }
  }
}

void try_edge(MatchState& s, std::size_t ci) {
  if (ci == s.conn.size()) {
    emit(s);
    return;
  }
  for (std::size_t i = 0; i < s.partial_edges.size(); ++i) {
    if (s.used[i]) continue;
    s.used[i] = true;
    align_and_recurse(s, ci, s.conn[ci], s.partial_edges[i]);
    s.used[i] = false;
  }
}

}  // namespace

std::vector<RuleMatch> match_sites(const MolHypergraph& partial,
                                   const ProductionRule& r) {
  std::vector<RuleMatch> out;
  std::set<std::string> dedup;
  const std::vector<int> conn = r.connecting_edges();

  for (int n : partial.node_ids()) {
    if (partial.node(n).kind != NodeKind::NonTerminal) continue;
    const std::vector<int> incident = partial.incident_edges(n);
    if (r.is_initial) {
      if (incident.empty()) {
        RuleMatch m;
        m.nt_node = n;
        out.push_back(std::move(m));
      }
      continue;
    }
    if (incident.size() != conn.size() || conn.empty()) continue;
    MatchState s{partial, r,         n,
                 conn,    incident,  std::vector<bool>(incident.size(), false),
                 {},      std::vector<int>(r.anchor_nodes.size(), -1),
                 {},      out,       dedup};
    for (std::size_t i = 0; i < r.anchor_nodes.size(); ++i)
      s.slot_of_anchor[r.anchor_nodes[i]] = static_cast<int>(i);
    try_edge(s, 0);
  }
  return out;
}

MolHypergraph apply_rule(const MolHypergraph& partial, const ProductionRule& r,
                         const RuleMatch& m, std::vector<int>* created_ids,
                         const std::vector<int>* forced_internal_ids) {
  if (!partial.has_node(m.nt_node) ||
      partial.node(m.nt_node).kind != NodeKind::NonTerminal)
    throw StaleMatch("match target is not a live non-terminal");
  const std::vector<int> incident = partial.incident_edges(m.nt_node);
  std::set<int> paired;
  for (const auto& [ce, pe] : m.edge_pairing) paired.insert(pe);
  if (paired.size() != m.edge_pairing.size() ||
      std::set<int>(incident.begin(), incident.end()) != paired)
    throw StaleMatch("match edges no longer cover the non-terminal");
  for (std::size_t i = 0; i < m.anchor_binding.size(); ++i) {
    if (!partial.has_node(m.anchor_binding[i]) ||
        !signature_matches(r.anchor_sigs[i], partial.node(m.anchor_binding[i])))
      throw StaleMatch("anchor binding no longer valid");
  }
  if (m.anchor_binding.size() != r.anchor_nodes.size())
    throw StaleMatch("anchor binding arity mismatch");

  MolHypergraph out = partial;
  for (int e : incident) out.remove_edge(e);
  out.remove_node(m.nt_node);

  std::map<int, int> node_map;
  for (std::size_t i = 0; i < r.anchor_nodes.size(); ++i)
    node_map[r.anchor_nodes[i]] = m.anchor_binding[i];

  const std::vector<int> internals = r.internal_nodes();
  if (forced_internal_ids && forced_internal_ids->size() != internals.size())
    throw GrammarFormatError("replay step has wrong internal id count");
  std::vector<int> created;
  for (std::size_t i = 0; i < internals.size(); ++i) {
    const HGNode& n = r.rhs.node(internals[i]);
    int id;
    if (forced_internal_ids)
      id = out.add_node_with_id(n, (*forced_internal_ids)[i]);
    else
      id = out.add_node(n);
    node_map[internals[i]] = id;
    created.push_back(id);
  }
  if (created_ids) *created_ids = created;

  for (int e : r.rhs.edge_ids()) {
    Hyperedge copy = r.rhs.edge(e);
    for (int& n : copy.nodes) n = node_map.at(n);
    out.add_edge(std::move(copy));
  }
  return out;
}

MolGraph generate(const Grammar& g, const GenerationConfig& cfg) {
  bool has_initial = false;
  for (const ProductionRule& r : g.rules)
    if (r.is_initial) has_initial = true;
  if (!has_initial) throw DeadEnd("grammar has no initial rule");

  MolHypergraph partial;
  partial.add_node({NodeKind::NonTerminal, {}});
  Rng rng(cfg.seed);

  for (int t = 0;; ++t) {
    bool any_nt = false;
    for (int n : partial.node_ids())
      if (partial.node(n).kind == NodeKind::NonTerminal) any_nt = true;
    if (!any_nt) return to_molecule(partial);
    if (t >= cfg.max_iterations)
      throw BudgetExceeded("generation hit the iteration budget");

    std::vector<std::pair<int, std::vector<RuleMatch>>> applicable;
    for (std::size_t ri = 0; ri < g.rules.size(); ++ri) {
      auto matches = match_sites(partial, g.rules[ri]);
      if (!matches.empty())
        applicable.emplace_back(static_cast<int>(ri), std::move(matches));
    }
    if (applicable.empty())
      throw DeadEnd("no applicable rule for the remaining non-terminals");

    double total = 0.0;
    std::vector<double> w(applicable.size());
    for (std::size_t i = 0; i < applicable.size(); ++i) {
      const ProductionRule& r = g.rules[applicable[i].first];
      w[i] = std::exp(cfg.alpha * t * (r.terminal_only ? 1.0 : 0.0));
      total += w[i];
    }
    double u = rng.uniform() * total;
    std::size_t pick = 0;
    for (; pick + 1 < w.size(); ++pick) {
      if (u < w[pick]) break;
      u -= w[pick];
    }
    const auto& [ri, matches] = applicable[pick];
    const RuleMatch& site = matches[rng.index(matches.size())];
    partial = apply_rule(partial, g.rules[ri], site);
  }
}

std::vector<int> Grammar::derivation_rule_ids(int molecule) const {
  std::vector<int> out;
  for (const ProvenanceStep& s : derivations[molecule].steps)
    out.push_back(s.rule_id);
  return out;
}

std::vector<int> shared_rule_ids(const Grammar& g) {
  if (g.derivations.empty()) return {};
  std::set<int> shared;
  for (const ProvenanceStep& s : g.derivations[0].steps) shared.insert(s.rule_id);
  for (std::size_t m = 1; m < g.derivations.size(); ++m) {
    std::set<int> here;
    for (const ProvenanceStep& s : g.derivations[m].steps) here.insert(s.rule_id);
    std::set<int> keep;
    for (int r : shared)
      if (here.count(r)) keep.insert(r);
    shared = std::move(keep);
  }
  return {shared.begin(), shared.end()};
}

MolGraph replay_molecule(const Grammar& g, int molecule) {
  if (molecule < 0 || molecule >= static_cast<int>(g.derivations.size()))
    throw GrammarFormatError("no such derivation");
  const Derivation& d = g.derivations[molecule];
  if (d.steps.empty()) throw GrammarFormatError("empty derivation");

  MolHypergraph partial;
  partial.add_node_with_id({NodeKind::NonTerminal, {}}, d.steps.back().created_nt);

  for (int i = static_cast<int>(d.steps.size()) - 1; i >= 0; --i) {
    const ProvenanceStep& step = d.steps[i];
    if (step.rule_id < 0 || step.rule_id >= static_cast<int>(g.rules.size()))
      throw GrammarFormatError("derivation references unknown rule");
    const ProductionRule& r = g.rules[step.rule_id];

    const RuleMatch* chosen = nullptr;
    auto matches = match_sites(partial, r);
    for (const RuleMatch& m : matches)
      if (m.nt_node == step.created_nt && m.anchor_binding == step.anchor_ids) {
        chosen = &m;
        break;
      }
    if (!chosen)
      throw GrammarFormatError("derivation replay found no matching site");
    partial = apply_rule(partial, r, *chosen, nullptr, &step.internal_ids);
  }
  return to_molecule(partial);
}

int GrammarBuilder::start_molecule(const std::string& molecule_key) {
  g_.derivations.push_back({molecule_key, {}});
  return static_cast<int>(g_.derivations.size()) - 1;
}

int GrammarBuilder::record(const RuleInstance& inst, int molecule, int created_nt) {
  int id;
  auto it = by_key_.find(inst.rule.key);
  if (it == by_key_.end()) {
    id = static_cast<int>(g_.rules.size());
    g_.rules.push_back(inst.rule);
    by_key_.emplace(inst.rule.key, id);
  } else {
    id = it->second;
    ++g_.rules[id].count;
  }
  g_.derivations[molecule].steps.push_back(
      {id, created_nt, inst.internal_source_ids, inst.anchor_source_ids});
  return id;
}

Grammar GrammarBuilder::finish() { return std::move(g_); }

FragmentGraph rule_fragment(const ProductionRule& r) {
  FragmentGraph f;
  std::map<int, int> index;
  for (int n : r.rhs.node_ids()) {
    index[n] = static_cast<int>(f.atoms.size());
    const HGNode& node = r.rhs.node(n);
    f.atoms.push_back(node.kind == NodeKind::Terminal ? node.atom : Atom{});
    f.nonterminal.push_back(node.kind == NodeKind::NonTerminal);
    int slot = -1;
    for (std::size_t i = 0; i < r.anchor_nodes.size(); ++i)
      if (r.anchor_nodes[i] == n) slot = static_cast<int>(i);
    f.anchor_slots.push_back(slot);
  }
  std::set<std::pair<int, int>> seen;
  auto add = [&](int a, int b, BondOrder o) {
    if (a == b) return;
    const auto key = std::minmax(a, b);
    if (!seen.insert(key).second) return;
    f.bonds.push_back({{key.first, key.second}, o});
  };
  for (int e : r.rhs.edge_ids()) {
    const Hyperedge& edge = r.rhs.edge(e);
    if (!edge.is_ring) {
      add(index.at(edge.nodes[0]), index.at(edge.nodes[1]), edge.order);
      continue;
    }
    const int k = edge.ring.arity();
    for (int p = 0; p < k; ++p)
      add(index.at(edge.nodes[edge.ring.pos2slot[p]]),
          index.at(edge.nodes[edge.ring.pos2slot[(p + 1) % k]]),
          edge.ring.orders[p]);
  }
  return f;
}

std::string render_rule(const ProductionRule& r) {
  const FragmentGraph f = rule_fragment(r);
  const int n = static_cast<int>(f.atoms.size());
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (std::size_t b = 0; b < f.bonds.size(); ++b) {
    adj[f.bonds[b].first.first].emplace_back(f.bonds[b].first.second,
                                             static_cast<int>(b));
    adj[f.bonds[b].first.second].emplace_back(f.bonds[b].first.first,
                                              static_cast<int>(b));
  }

  std::string out = r.is_initial ? "X ->" : "R*(";
  if (!r.is_initial) {
    for (std::size_t i = 0; i < r.anchor_sigs.size(); ++i) {
      if (i) out += ",";
      const AnchorSignature& s = r.anchor_sigs[i];
      out += s.nonterminal ? std::string("*") : std::string(element_symbol(s.element));
      if (!s.nonterminal && s.charge)
        out += s.charge > 0 ? "+" : "-";
    }
    out += ") ->";
  }

  auto atom_text = [&](int i) {
    if (f.nonterminal[i]) return std::string("[*]");
    const Atom& a = f.atoms[i];
    std::string sym = element_symbol(a.element);
    if (a.aromatic)
      for (char& c : sym) c = static_cast<char>(std::tolower(c));
    const bool mark = f.anchor_slots[i] >= 0 || a.formal_charge != 0;
    if (!mark) return sym;
    std::string t = "[" + sym;
    if (a.formal_charge > 0) t += "+";
    if (a.formal_charge < 0) t += "-";
    if (f.anchor_slots[i] >= 0) t += ":" + std::to_string(f.anchor_slots[i] + 1);
    return t + "]";
  };
  auto bond_text = [&](int b) {
    switch (f.bonds[b].second) {
      case BondOrder::Double: return "=";
      case BondOrder::Triple: return "#";
      default: return "";
    }
  };

  // Plain DFS rendering with ring-closure digits.
  std::vector<bool> visited(n, false), bond_done(f.bonds.size(), false);
  std::map<int, std::vector<std::pair<int, int>>> closures;
  int digit = 1;
  std::string body;
  for (int root = 0; root < n; ++root) {
    if (visited[root]) continue;
    if (!body.empty()) body += " ";
    // Closure discovery pass.
    {
      std::vector<int> stack{root};
      std::vector<bool> seen(n, false);
      seen[root] = true;
      std::vector<bool> used(f.bonds.size(), false);
      std::vector<std::pair<int, std::size_t>> frames{{root, 0}};
      while (!frames.empty()) {
        auto& [v, next] = frames.back();
        if (next >= adj[v].size()) {
          frames.pop_back();
          continue;
        }
        auto [u, b] = adj[v][next++];
        if (used[b]) continue;
        used[b] = true;
        if (!seen[u]) {
          seen[u] = true;
          frames.push_back({u, 0});
        } else {
          closures[v].emplace_back(digit, b);
          closures[u].emplace_back(digit, b);
          bond_done[b] = true;
          ++digit;
        }
      }
    }
    struct F {
      int atom;
      std::vector<std::pair<int, int>> kids;
      std::size_t next = 0;
      bool wrapped = false;
    };
    auto mk = [&](int atom) {
      F fr;
      fr.atom = atom;
      for (auto [u, b] : adj[atom])
        if (!bond_done[b] && !visited[u]) fr.kids.emplace_back(b, u);
      return fr;
    };
    auto emit_atom = [&](int atom) {
      body += atom_text(atom);
      auto it = closures.find(atom);
      if (it != closures.end())
        for (auto [d, b] : it->second) {
          body += bond_text(b);
          body += d < 10 ? std::to_string(d) : "%" + std::to_string(d);
        }
    };
    visited[root] = true;
    emit_atom(root);
    std::vector<F> stack{mk(root)};
    while (!stack.empty()) {
      F& fr = stack.back();
      while (fr.next < fr.kids.size() && visited[fr.kids[fr.next].second])
        ++fr.next;
      if (fr.next >= fr.kids.size()) {
        if (fr.wrapped) body += ')';
        stack.pop_back();
        continue;
      }
      auto [b, child] = fr.kids[fr.next++];
      bool more = false;
      for (std::size_t i = fr.next; i < fr.kids.size(); ++i)
        if (!visited[fr.kids[i].second]) more = true;
      F cf = mk(child);
      cf.wrapped = more;
      if (more) body += '(';
      bond_done[b] = true;
      visited[child] = true;
      body += bond_text(b);
      emit_atom(child);
      stack.push_back(std::move(cf));
    }
  }
  return out + " " + body;
}

}  // namespace molgram
