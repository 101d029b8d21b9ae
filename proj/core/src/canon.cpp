#include "molgram/canon.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace molgram {

void ColoredGraph::add_edge(int u, int v, std::uint64_t edge_color) {
  adj_[u].emplace_back(v, edge_color);
  adj_[v].emplace_back(u, edge_color);
}

namespace {

// A partition is stored as cell index per vertex; cell indices are dense
// and ordered, so a discrete partition is itself the canonical position.
using Partition = std::vector<int>;

Partition initial_partition(const ColoredGraph& g) {
  std::vector<int> order(g.size());
  for (int i = 0; i < g.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return g.color(a) < g.color(b);
  });
  Partition cell(g.size());
  int c = -1;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || g.color(order[i]) != g.color(order[i - 1])) ++c;
    cell[order[i]] = c;
  }
  return cell;
}

// 1-WL style refinement: signature of a vertex is its cell plus the sorted
// multiset of (edge color, neighbor cell). Cell numbering stays ordered by
// (old cell, signature), which keeps the process isomorphism-invariant.
void refine(const ColoredGraph& g, Partition& cell) {
  const int n = g.size();
  for (;;) {
    std::vector<std::vector<std::pair<std::uint64_t, int>>> sig(n);
    for (int v = 0; v < n; ++v) {
      auto& s = sig[v];
      s.reserve(g.neighbors(v).size());
      for (const auto& [u, ec] : g.neighbors(v)) s.emplace_back(ec, cell[u]);
      std::sort(s.begin(), s.end());
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (cell[a] != cell[b]) return cell[a] < cell[b];
      return sig[a] < sig[b];
    });
    Partition next(n);
    int c = -1;
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int v = order[i];
      if (i == 0 || cell[order[i - 1]] != cell[v] || sig[order[i - 1]] != sig[v])
        ++c;
      next[v] = c;
    }
    for (int v = 0; v < n && !changed; ++v) changed = next[v] != cell[v];
    cell.swap(next);
    if (!changed) return;
  }
}

bool is_discrete(const Partition& cell) {
  std::vector<char> seen(cell.size(), 0);
  for (int c : cell) {
    if (seen[c]) return false;
    seen[c] = 1;
  }
  return true;
}

std::string certificate_for(const ColoredGraph& g, const Partition& pos) {
  // Color dictionary sorted by value keeps the certificate compact while
  // remaining a pure function of the isomorphism class.
  std::vector<std::uint64_t> dict;
  dict.reserve(g.size());
  for (int v = 0; v < g.size(); ++v) dict.push_back(g.color(v));
  std::sort(dict.begin(), dict.end());
  dict.erase(std::unique(dict.begin(), dict.end()), dict.end());
  auto didx = [&](std::uint64_t c) {
    return static_cast<int>(std::lower_bound(dict.begin(), dict.end(), c) -
                            dict.begin());
  };

  std::vector<std::uint64_t> ecolors;
  struct E {
    int a, b;
    std::uint64_t c;
  };
  std::vector<E> edges;
  for (int v = 0; v < g.size(); ++v)
    for (const auto& [u, ec] : g.neighbors(v))
      if (v < u) {
        edges.push_back({std::min(pos[v], pos[u]), std::max(pos[v], pos[u]), ec});
        ecolors.push_back(ec);
      }
  std::sort(ecolors.begin(), ecolors.end());
  ecolors.erase(std::unique(ecolors.begin(), ecolors.end()), ecolors.end());
  auto eidx = [&](std::uint64_t c) {
    return static_cast<int>(
        std::lower_bound(ecolors.begin(), ecolors.end(), c) - ecolors.begin());
  };
  std::sort(edges.begin(), edges.end(), [](const E& x, const E& y) {
    if (x.a != y.a) return x.a < y.a;
    if (x.b != y.b) return x.b < y.b;
    return x.c < y.c;
  });

  std::vector<int> color_at(g.size());
  for (int v = 0; v < g.size(); ++v) color_at[pos[v]] = didx(g.color(v));

  std::string out;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%d;", g.size());
  out += buf;
  for (std::uint64_t c : dict) {
    std::snprintf(buf, sizeof(buf), "%llx,", static_cast<unsigned long long>(c));
    out += buf;
  }
  out += ';';
  for (std::uint64_t c : ecolors) {
    std::snprintf(buf, sizeof(buf), "%llx,", static_cast<unsigned long long>(c));
    out += buf;
  }
  out += ';';
  for (int c : color_at) {
    std::snprintf(buf, sizeof(buf), "%x,", c);
    out += buf;
  }
  out += ';';
  for (const E& e : edges) {
    std::snprintf(buf, sizeof(buf), "%x-%x-%x,", e.a, e.b, eidx(e.c));
    out += buf;
  }
  return out;
}

struct Search {
  const ColoredGraph& g;
  std::string best;
  Partition best_pos;
  long leaves = 0;

  explicit Search(const ColoredGraph& graph) : g(graph) {}

  void run(Partition cell) {
    refine(g, cell);
    if (is_discrete(cell)) {
      if (++leaves > 2000000)
        throw std::logic_error("canonical_form: branching blew up");
      std::string cert = certificate_for(g, cell);
      if (best.empty() || cert < best) {
        best = std::move(cert);
        best_pos = cell;
      }
      return;
    }
    // First non-singleton cell in cell order becomes the branching target.
    const int n = g.size();
    std::vector<int> count(n, 0);
    for (int c : cell) ++count[c];
    int target = 0;
    while (count[target] <= 1) ++target;
    for (int v = 0; v < n; ++v) {
      if (cell[v] != target) continue;
      // Individualize v: it gets its own cell right before its old cell.
      Partition split(n);
      for (int u = 0; u < n; ++u) {
        int c = cell[u];
        split[u] = c * 2 + (c == target && u != v ? 1 : 0);
      }
      // Re-densify cell ids, preserving order.
      std::vector<int> ids(split.begin(), split.end());
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      for (int u = 0; u < n; ++u)
        split[u] = static_cast<int>(
            std::lower_bound(ids.begin(), ids.end(), split[u]) - ids.begin());
      run(std::move(split));
    }
  }
};

}  // namespace

CanonResult canonical_form(const ColoredGraph& g) {
  if (g.size() == 0) return {{}, "0;;;;"};
  Search s(g);
  s.run(initial_partition(g));
  return {std::move(s.best_pos), std::move(s.best)};
}

}  // namespace molgram
