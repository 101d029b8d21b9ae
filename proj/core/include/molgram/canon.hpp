#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace molgram {

// Vertex- and edge-colored simple graph used as the common substrate for
// canonical labeling. Molecular graphs map onto it directly; hypergraphs
// and production rules are first expanded into gadget graphs.
class ColoredGraph {
 public:
  explicit ColoredGraph(int n) : color_(n), adj_(n) {}

  int size() const { return static_cast<int>(color_.size()); }

  void set_color(int v, std::uint64_t c) { color_[v] = c; }
  std::uint64_t color(int v) const { return color_[v]; }

  void add_edge(int u, int v, std::uint64_t edge_color);

  const std::vector<std::pair<int, std::uint64_t>>& neighbors(int v) const {
    return adj_[v];
  }

 private:
  std::vector<std::uint64_t> color_;
  std::vector<std::vector<std::pair<int, std::uint64_t>>> adj_;
};

struct CanonResult {
  // canon_pos[v] = position of vertex v in the canonical ordering.
  std::vector<int> canon_pos;
  // Complete certificate: equal iff the two colored graphs are isomorphic.
  std::string certificate;
};

// Exact canonical form by iterative neighborhood refinement with tie-break
// branching. Exponential in the worst case; molecules are far from it.
CanonResult canonical_form(const ColoredGraph& g);

}  // namespace molgram
