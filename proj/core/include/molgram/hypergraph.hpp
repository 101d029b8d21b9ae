#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "molgram/molgraph.hpp"

namespace molgram {

enum class NodeKind : std::uint8_t { Terminal, NonTerminal };

struct HGNode {
  NodeKind kind = NodeKind::Terminal;
  Atom atom;  // meaningful for Terminal nodes only
};

// Ring hyperedges keep the full ring even after parts of it have been
// contracted away: `orders[i]` is the bond order between ring positions i
// and i+1 (cyclic), and `pos2slot[i]` says which entry of `nodes` currently
// covers position i. An uncontracted ring has pos2slot == identity; after a
// contraction several positions may map to the same non-terminal slot.
struct RingLabel {
  std::vector<BondOrder> orders;
  std::vector<int> pos2slot;
  bool aromatic = false;

  int arity() const { return static_cast<int>(orders.size()); }
};

struct Hyperedge {
  std::vector<int> nodes;  // distinct node ids; slots for ring edges
  bool is_ring = false;
  BondOrder order = BondOrder::Single;  // bond edges
  RingLabel ring;                       // ring edges

  bool same_label(const Hyperedge& other) const;
};

// Rewrites an edge into its unique minimal form: ring edges get the
// lexicographically smallest rotation/reflection (by node id, then order),
// bond edges get sorted endpoints. add_edge applies this automatically.
void normalize_hyperedge(Hyperedge& e);

// Node- and hyperedge-indexed molecular hypergraph. Ids are stable across
// contraction: surviving nodes and straddling edges keep theirs, the fresh
// non-terminal gets a new id. Values are immutable; contract() returns a
// new hypergraph.
class MolHypergraph {
 public:
  int origin = -1;  // index of the source molecule, -1 if synthetic

  const std::vector<int>& node_ids() const { return node_ids_; }
  const std::vector<int>& edge_ids() const { return edge_ids_; }
  int node_count() const { return static_cast<int>(node_ids_.size()); }
  int edge_count() const { return static_cast<int>(edge_ids_.size()); }

  bool has_node(int id) const;
  bool has_edge(int id) const;
  const HGNode& node(int id) const;
  const Hyperedge& edge(int id) const;

  // Edge ids incident to a node, ascending.
  std::vector<int> incident_edges(int node_id) const;

  int add_node(HGNode n);
  int add_edge(Hyperedge e);
  void remove_node(int id);
  void remove_edge(int id);
  int next_node_id() const { return static_cast<int>(nodes_.size()); }

  // Reserve a specific node id (used by derivation replay); throws if taken.
  int add_node_with_id(HGNode n, int id);

  bool connected() const;

 private:
  std::vector<HGNode> nodes_;
  std::vector<Hyperedge> edges_;
  std::vector<bool> node_live_;
  std::vector<bool> edge_live_;
  std::vector<int> node_ids_;
  std::vector<int> edge_ids_;

  void rebuild_id_lists();
};

// One hyperedge per non-ring bond and one per SSSR ring.
MolHypergraph build_hypergraph(const MolGraph& g, int origin = -1);

// Replaces the connected component `component_nodes` by one fresh
// non-terminal node. Edges wholly inside the component are consumed;
// `straddling_edges` (every edge partially overlapping the component) are
// re-anchored onto the non-terminal with their labels preserved.
MolHypergraph contract(const MolHypergraph& h, const std::set<int>& component_nodes,
                       const std::set<int>& straddling_edges,
                       int* created_nt = nullptr);

// Validates the (component, straddling) pair the way contract() does.
void check_component(const MolHypergraph& h, const std::set<int>& component_nodes,
                     const std::set<int>& straddling_edges);

// Expands ring edges back to bonds and rebuilds a valence-checked molecule.
// Throws NonTerminalPresent if any non-terminal remains.
MolGraph to_molecule(const MolHypergraph& h);

// SSSR atom cycles of a molecular graph (each cycle in traversal order).
std::vector<std::vector<int>> sssr_rings(const MolGraph& g);

// Debug dump: one line per node `id kind label`, one per edge
// `id arity label node-list`.
std::string dump(const MolHypergraph& h);

}  // namespace molgram
