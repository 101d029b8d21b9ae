#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <map>
#include <queue>
#include <set>
#include <string>

#include "molgram/errors.hpp"
#include "molgram/hypergraph.hpp"

namespace molgram {

namespace {

char order_char(BondOrder o) {
  switch (o) {
    case BondOrder::Single: return 's';
    case BondOrder::Double: return 'd';
    case BondOrder::Triple: return 't';
    case BondOrder::Aromatic: return 'a';
  }
  return '?';
}

// Slot occupancy pattern with slots renumbered by first appearance, so two
// rings can be compared independently of concrete node ids.
std::vector<int> slot_pattern(const std::vector<int>& pos2slot) {
  std::vector<int> out;
  out.reserve(pos2slot.size());
  int next = 0;
  std::map<int, int> seen;
  for (int s : pos2slot) {
    auto it = seen.find(s);
    if (it == seen.end()) it = seen.emplace(s, next++).first;
    out.push_back(it->second);
  }
  return out;
}

struct RingView {
  std::vector<BondOrder> orders;
  std::vector<int> slots;  // node id per position
};

RingView rotated(const RingView& rv, int start, bool reversed) {
  const int k = static_cast<int>(rv.orders.size());
  RingView out;
  out.orders.resize(k);
  out.slots.resize(k);
  for (int j = 0; j < k; ++j) {
    if (!reversed) {
      out.slots[j] = rv.slots[(start + j) % k];
      out.orders[j] = rv.orders[(start + j) % k];
    } else {
      out.slots[j] = rv.slots[(start - j % k + k) % k];
      out.orders[j] = rv.orders[((start - j % k) - 1 + 2 * k) % k];
    }
  }
  return out;
}

void normalize_ring(Hyperedge& e) {
  const int k = e.ring.arity();
  RingView rv;
  rv.orders = e.ring.orders;
  rv.slots.resize(k);
  for (int p = 0; p < k; ++p) rv.slots[p] = e.nodes[e.ring.pos2slot[p]];

  RingView best;
  bool first = true;
  for (int start = 0; start < k; ++start)
    for (int rev = 0; rev < 2; ++rev) {
      RingView cand = rotated(rv, start, rev == 1);
      auto key = [](const RingView& v) {
        return std::make_pair(v.slots, v.orders);
      };
      if (first || key(cand) < key(best)) {
        best = std::move(cand);
        first = false;
      }
    }

  std::vector<int> nodes;
  std::vector<int> pos2slot(k);
  for (int p = 0; p < k; ++p) {
    auto it = std::find(nodes.begin(), nodes.end(), best.slots[p]);
    if (it == nodes.end()) {
      pos2slot[p] = static_cast<int>(nodes.size());
      nodes.push_back(best.slots[p]);
    } else {
      pos2slot[p] = static_cast<int>(it - nodes.begin());
    }
  }
  e.nodes = std::move(nodes);
  e.ring.orders = std::move(best.orders);
  e.ring.pos2slot = std::move(pos2slot);
}

}  // namespace

void normalize_hyperedge(Hyperedge& e) {
  if (e.is_ring) normalize_ring(e);
  else std::sort(e.nodes.begin(), e.nodes.end());
}

bool Hyperedge::same_label(const Hyperedge& other) const {
  if (is_ring != other.is_ring) return false;
  if (!is_ring) return order == other.order;
  if (ring.arity() != other.ring.arity()) return false;
  if (ring.aromatic != other.ring.aromatic) return false;
  const int k = ring.arity();
  RingView mine;
  mine.orders = ring.orders;
  mine.slots.resize(k);
  for (int p = 0; p < k; ++p) mine.slots[p] = ring.pos2slot[p];
  for (int start = 0; start < k; ++start)
    for (int rev = 0; rev < 2; ++rev) {
      RingView cand = rotated(mine, start, rev == 1);
      if (cand.orders == other.ring.orders &&
          slot_pattern(cand.slots) == slot_pattern(other.ring.pos2slot))
        return true;
    }
  return false;
}

bool MolHypergraph::has_node(int id) const {
  return id >= 0 && id < static_cast<int>(nodes_.size()) && node_live_[id];
}

bool MolHypergraph::has_edge(int id) const {
  return id >= 0 && id < static_cast<int>(edges_.size()) && edge_live_[id];
}

const HGNode& MolHypergraph::node(int id) const {
  if (!has_node(id)) throw std::out_of_range("no such hypergraph node");
  return nodes_[id];
}

const Hyperedge& MolHypergraph::edge(int id) const {
  if (!has_edge(id)) throw UnknownEdge("no such hyperedge");
  return edges_[id];
}

std::vector<int> MolHypergraph::incident_edges(int node_id) const {
  std::vector<int> out;
  for (int e : edge_ids_)
    for (int n : edges_[e].nodes)
      if (n == node_id) {
        out.push_back(e);
        break;
      }
  return out;
}

int MolHypergraph::add_node(HGNode n) {
  nodes_.push_back(std::move(n));
  node_live_.push_back(true);
  node_ids_.push_back(static_cast<int>(nodes_.size()) - 1);
  return node_ids_.back();
}

int MolHypergraph::add_node_with_id(HGNode n, int id) {
  if (id < static_cast<int>(nodes_.size())) {
    if (node_live_[id]) throw std::logic_error("node id already live");
    nodes_[id] = std::move(n);
    node_live_[id] = true;
  } else {
    nodes_.resize(id + 1);
    node_live_.resize(id + 1, false);
    nodes_[id] = std::move(n);
    node_live_[id] = true;
  }
  rebuild_id_lists();
  return id;
}

int MolHypergraph::add_edge(Hyperedge e) {
  for (int n : e.nodes)
    if (!has_node(n)) throw std::logic_error("hyperedge references dead node");
  std::set<int> uniq(e.nodes.begin(), e.nodes.end());
  if (uniq.size() != e.nodes.size())
    throw std::logic_error("hyperedge node ids must be distinct");
  if (e.is_ring) {
    if (e.ring.orders.size() != e.ring.pos2slot.size() || e.ring.arity() < 3)
      throw std::logic_error("malformed ring label");
  } else {
    if (e.nodes.size() != 2) throw std::logic_error("bond edge arity must be 2");
  }
  normalize_hyperedge(e);
  edges_.push_back(std::move(e));
  edge_live_.push_back(true);
  edge_ids_.push_back(static_cast<int>(edges_.size()) - 1);
  return edge_ids_.back();
}

void MolHypergraph::remove_node(int id) {
  if (!has_node(id)) throw std::logic_error("removing dead node");
  node_live_[id] = false;
  rebuild_id_lists();
}

void MolHypergraph::remove_edge(int id) {
  if (!has_edge(id)) throw std::logic_error("removing dead edge");
  edge_live_[id] = false;
  rebuild_id_lists();
}

void MolHypergraph::rebuild_id_lists() {
  node_ids_.clear();
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i)
    if (node_live_[i]) node_ids_.push_back(i);
  edge_ids_.clear();
  for (int i = 0; i < static_cast<int>(edges_.size()); ++i)
    if (edge_live_[i]) edge_ids_.push_back(i);
}

bool MolHypergraph::connected() const {
  if (node_ids_.empty()) return false;
  std::set<int> seen{node_ids_[0]};
  std::vector<int> stack{node_ids_[0]};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int e : edge_ids_) {
      const auto& nodes = edges_[e].nodes;
      if (std::find(nodes.begin(), nodes.end(), v) == nodes.end()) continue;
      for (int u : nodes)
        if (!seen.count(u)) {
          seen.insert(u);
          stack.push_back(u);
        }
    }
  }
  return seen.size() == node_ids_.size();
}

std::vector<std::vector<int>> sssr_rings(const MolGraph& g) {
  const int n = g.atom_count();
  const int m = static_cast<int>(g.bonds().size());
  const int dim = m - n + 1;
  if (dim <= 0) return {};

  struct Candidate {
    std::vector<int> bonds;  // sorted
    std::vector<int> atoms;  // traversal order
  };
  std::vector<Candidate> candidates;
  std::set<std::vector<int>> seen;

  for (int v = 0; v < n; ++v) {
    std::vector<int> dist(n, -1), parent_bond(n, -1), parent(n, -1);
    std::queue<int> q;
    dist[v] = 0;
    q.push(v);
    while (!q.empty()) {
      const int x = q.front();
      q.pop();
      for (const auto& [u, bi] : g.neighbors(x))
        if (dist[u] == -1) {
          dist[u] = dist[x] + 1;
          parent[u] = x;
          parent_bond[u] = bi;
          q.push(u);
        }
    }
    auto walk = [&](int from, std::vector<int>& atoms, std::vector<int>& bonds) {
      for (int x = from; x != v; x = parent[x]) {
        atoms.push_back(x);
        bonds.push_back(parent_bond[x]);
      }
      atoms.push_back(v);
    };
    for (int bi = 0; bi < m; ++bi) {
      const Bond& b = g.bond(bi);
      if (parent_bond[b.a] == bi || parent_bond[b.b] == bi) continue;
      std::vector<int> ax, bx, axb, bxb;
      walk(b.a, ax, axb);
      walk(b.b, bx, bxb);
      // Paths may only share the root.
      std::set<int> on_a(ax.begin(), ax.end());
      bool ok = true;
      for (std::size_t i = 0; ok && i + 1 < bx.size(); ++i)
        if (on_a.count(bx[i])) ok = false;
      if (!ok) continue;
      std::vector<int> bonds = axb;
      bonds.insert(bonds.end(), bxb.begin(), bxb.end());
      bonds.push_back(bi);
      std::sort(bonds.begin(), bonds.end());
      if (bonds.size() < 3 || seen.count(bonds)) continue;
      seen.insert(bonds);
      // Atom order: v .. a, then b .. back toward v.
      std::vector<int> atoms(ax.rbegin(), ax.rend());
      atoms.insert(atoms.end(), bx.begin(), bx.end() - 1);
      candidates.push_back({std::move(bonds), std::move(atoms)});
    }
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.bonds.size() != b.bonds.size())
                return a.bonds.size() < b.bonds.size();
              return a.bonds < b.bonds;
            });

  const int words = (m + 63) / 64;
  auto to_bits = [&](const std::vector<int>& bonds) {
    std::vector<std::uint64_t> bits(words, 0);
    for (int b : bonds) bits[b >> 6] |= 1ull << (b & 63);
    return bits;
  };
  auto highest_bit = [&](const std::vector<std::uint64_t>& bits) {
    for (int w = words - 1; w >= 0; --w)
      if (bits[w]) return w * 64 + 63 - std::countl_zero(bits[w]);
    return -1;
  };

  std::map<int, std::vector<std::uint64_t>> basis;  // leading bit -> row
  std::vector<const Candidate*> selected;
  for (const Candidate& c : candidates) {
    if (static_cast<int>(selected.size()) == dim) break;
    auto bits = to_bits(c.bonds);
    for (;;) {
      const int lead = highest_bit(bits);
      if (lead < 0) break;
      auto it = basis.find(lead);
      if (it == basis.end()) {
        basis.emplace(lead, bits);
        selected.push_back(&c);
        break;
      }
      for (int w = 0; w < words; ++w) bits[w] ^= it->second[w];
    }
  }

  // Patch: every ring bond must lie on at least one chosen ring, even when
  // the cycle-space basis happens to skip it (symmetric cage graphs).
  std::vector<char> covered(m, 0);
  for (const Candidate* c : selected)
    for (int b : c->bonds) covered[b] = 1;
  std::set<const Candidate*> chosen(selected.begin(), selected.end());
  for (int bi = 0; bi < m; ++bi) {
    if (covered[bi] || !g.bond_in_ring(bi)) continue;
    for (const Candidate& c : candidates)
      if (std::binary_search(c.bonds.begin(), c.bonds.end(), bi)) {
        if (!chosen.count(&c)) {
          selected.push_back(&c);
          chosen.insert(&c);
          for (int b : c.bonds) covered[b] = 1;
        }
        break;
      }
  }

  std::vector<std::vector<int>> out;
  out.reserve(selected.size());
  for (const Candidate* c : selected) out.push_back(c->atoms);
  return out;
}

MolHypergraph build_hypergraph(const MolGraph& g, int origin) {
  MolHypergraph h;
  h.origin = origin;
  for (int i = 0; i < g.atom_count(); ++i)
    h.add_node({NodeKind::Terminal, g.atom(i)});

  const auto rings = sssr_rings(g);

  auto bond_between = [&](int a, int b) {
    for (const auto& [nbr, bi] : g.neighbors(a))
      if (nbr == b) return bi;
    throw std::logic_error("ring traversal produced a non-bond");
  };

  std::vector<bool> in_ring_edge(g.bonds().size(), false);
  std::vector<Hyperedge> ring_edges;
  for (const auto& atoms : rings) {
    const int k = static_cast<int>(atoms.size());
    Hyperedge e;
    e.is_ring = true;
    e.nodes = atoms;
    e.ring.pos2slot.resize(k);
    e.ring.orders.resize(k);
    bool all_aromatic = true;
    for (int p = 0; p < k; ++p) {
      e.ring.pos2slot[p] = p;
      const int bi = bond_between(atoms[p], atoms[(p + 1) % k]);
      in_ring_edge[bi] = true;
      e.ring.orders[p] = g.bond(bi).order;
      if (g.bond(bi).order != BondOrder::Aromatic) all_aromatic = false;
    }
    e.ring.aromatic = all_aromatic;
    ring_edges.push_back(std::move(e));
  }

  for (int bi = 0; bi < static_cast<int>(g.bonds().size()); ++bi) {
    if (in_ring_edge[bi]) continue;
    const Bond& b = g.bond(bi);
    Hyperedge e;
    e.is_ring = false;
    e.nodes = {b.a, b.b};
    e.order = b.order;
    h.add_edge(std::move(e));
  }
  for (Hyperedge& e : ring_edges) h.add_edge(std::move(e));
  return h;
}

void check_component(const MolHypergraph& h, const std::set<int>& component_nodes,
                     const std::set<int>& straddling_edges) {
  if (component_nodes.empty())
    throw InvalidComponent("component node set is empty");
  for (int n : component_nodes)
    if (!h.has_node(n)) throw InvalidComponent("component references dead node");

  for (int e : h.edge_ids()) {
    const auto& nodes = h.edge(e).nodes;
    int inside = 0;
    for (int n : nodes) inside += component_nodes.count(n) ? 1 : 0;
    const bool partial = inside > 0 && inside < static_cast<int>(nodes.size());
    if (partial && !straddling_edges.count(e))
      throw InvalidComponent("edge partially overlaps component but is not straddling");
    if (!partial && straddling_edges.count(e))
      throw InvalidComponent("straddling edge does not partially overlap component");
  }

  // Connectivity over inside edges plus straddling edges.
  std::map<int, int> uf;
  for (int n : component_nodes) uf[n] = n;
  auto find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  auto unite = [&](int a, int b) { uf[find(a)] = find(b); };
  for (int e : h.edge_ids()) {
    const auto& nodes = h.edge(e).nodes;
    std::vector<int> inside;
    for (int n : nodes)
      if (component_nodes.count(n)) inside.push_back(n);
    if (inside.empty()) continue;
    const bool wholly = inside.size() == nodes.size();
    if (wholly || straddling_edges.count(e))
      for (std::size_t i = 1; i < inside.size(); ++i) unite(inside[0], inside[i]);
  }
  const int root = find(*component_nodes.begin());
  for (int n : component_nodes)
    if (find(n) != root)
      throw InvalidComponent("component is not connected");
}

MolHypergraph contract(const MolHypergraph& h, const std::set<int>& component_nodes,
                       const std::set<int>& straddling_edges, int* created_nt) {
  check_component(h, component_nodes, straddling_edges);

  MolHypergraph out = h;
  const int nt = out.next_node_id();
  out.add_node({NodeKind::NonTerminal, {}});
  if (created_nt) *created_nt = nt;

  for (int e : h.edge_ids()) {
    const Hyperedge& old = h.edge(e);
    int inside = 0;
    for (int n : old.nodes) inside += component_nodes.count(n) ? 1 : 0;
    if (inside == 0) continue;
    if (inside == static_cast<int>(old.nodes.size())) {
      out.remove_edge(e);
      continue;
    }
    // Re-anchor onto the non-terminal, label preserved.
    Hyperedge repl = old;
    out.remove_edge(e);
    if (!repl.is_ring) {
      const int outside = component_nodes.count(repl.nodes[0]) ? repl.nodes[1]
                                                               : repl.nodes[0];
      repl.nodes = {outside, nt};
    } else {
      std::vector<int> slots = repl.nodes;
      std::vector<int> new_nodes;
      std::vector<int> slot_map(slots.size(), -1);
      for (std::size_t s = 0; s < slots.size(); ++s) {
        const int node = component_nodes.count(slots[s]) ? nt : slots[s];
        auto it = std::find(new_nodes.begin(), new_nodes.end(), node);
        if (it == new_nodes.end()) {
          slot_map[s] = static_cast<int>(new_nodes.size());
          new_nodes.push_back(node);
        } else {
          slot_map[s] = static_cast<int>(it - new_nodes.begin());
        }
      }
      for (int& p : repl.ring.pos2slot) p = slot_map[p];
      repl.nodes = std::move(new_nodes);
    }
    out.add_edge(std::move(repl));
  }

  for (int n : component_nodes) out.remove_node(n);
  return out;
}

MolGraph to_molecule(const MolHypergraph& h) {
  for (int n : h.node_ids())
    if (h.node(n).kind == NodeKind::NonTerminal)
      throw NonTerminalPresent("hypergraph still contains a non-terminal node");

  std::map<int, int> atom_index;
  std::vector<Atom> atoms;
  for (int n : h.node_ids()) {
    atom_index[n] = static_cast<int>(atoms.size());
    atoms.push_back(h.node(n).atom);
  }

  std::map<std::pair<int, int>, BondOrder> bond_map;
  auto add_bond = [&](int a, int b, BondOrder o) {
    if (a == b)
      throw ValenceError("ring expansion produced a self bond");
    const auto key = std::minmax(a, b);
    auto it = bond_map.find(key);
    if (it != bond_map.end()) {
      if (it->second != o)
        throw ValenceError("conflicting bond orders during ring expansion");
      return;
    }
    bond_map.emplace(key, o);
  };

  for (int e : h.edge_ids()) {
    const Hyperedge& edge = h.edge(e);
    if (!edge.is_ring) {
      add_bond(atom_index.at(edge.nodes[0]), atom_index.at(edge.nodes[1]),
               edge.order);
      continue;
    }
    const int k = edge.ring.arity();
    if (static_cast<int>(edge.nodes.size()) != k)
      throw ValenceError("ring edge is still partially contracted");
    for (int p = 0; p < k; ++p) {
      const int a = edge.nodes[edge.ring.pos2slot[p]];
      const int b = edge.nodes[edge.ring.pos2slot[(p + 1) % k]];
      add_bond(atom_index.at(a), atom_index.at(b), edge.ring.orders[p]);
    }
  }

  std::vector<Bond> bonds;
  bonds.reserve(bond_map.size());
  for (const auto& [key, order] : bond_map)
    bonds.push_back({key.first, key.second, order, 1});
  return MolGraph::from_parts(std::move(atoms), std::move(bonds));
}

std::string dump(const MolHypergraph& h) {
  std::string out;
  char buf[128];
  for (int n : h.node_ids()) {
    const HGNode& node = h.node(n);
    if (node.kind == NodeKind::NonTerminal) {
      std::snprintf(buf, sizeof(buf), "node %d nonterminal R*\n", n);
      out += buf;
      continue;
    }
    std::string sym = element_symbol(node.atom.element);
    if (node.atom.aromatic)
      for (char& c : sym) c = static_cast<char>(std::tolower(c));
    std::string label = sym + "H" + std::to_string(node.atom.total_h);
    if (node.atom.formal_charge > 0)
      label += "+" + std::to_string(node.atom.formal_charge);
    else if (node.atom.formal_charge < 0)
      label += std::to_string(node.atom.formal_charge);
    std::snprintf(buf, sizeof(buf), "node %d terminal %s\n", n, label.c_str());
    out += buf;
  }
  for (int e : h.edge_ids()) {
    const Hyperedge& edge = h.edge(e);
    std::string label;
    if (!edge.is_ring) {
      label = std::string("bond:") + bond_order_name(edge.order);
    } else {
      label = "ring:";
      for (BondOrder o : edge.ring.orders) label += order_char(o);
      bool identity = true;
      for (int p = 0; p < edge.ring.arity(); ++p)
        if (edge.ring.pos2slot[p] != p) identity = false;
      if (!identity) {
        label += ":pos=";
        for (int p = 0; p < edge.ring.arity(); ++p) {
          if (p) label += ',';
          label += std::to_string(edge.ring.pos2slot[p]);
        }
      }
    }
    std::snprintf(buf, sizeof(buf), "edge %d %d %s", e,
                  static_cast<int>(edge.nodes.size()), label.c_str());
    out += buf;
    for (int n : edge.nodes) out += " " + std::to_string(n);
    out += "\n";
  }
  return out;
}

}  // namespace molgram
