#include <algorithm>
#include <cstdlib>
#include <string>

#include "graph_detail.hpp"
#include "molgram/errors.hpp"
#include "molgram/molgraph.hpp"

namespace molgram {

namespace {

struct ElementInfo {
  const char* symbol;
  double weight;
  std::vector<int> valences;
};

const ElementInfo& info(Element e) {
  static const ElementInfo table[kElementCount] = {
      {"H", 1.008, {1}},        {"B", 10.811, {3}},
      {"C", 12.011, {4}},       {"N", 14.007, {3}},
      {"O", 15.999, {2}},       {"F", 18.998, {1}},
      {"Si", 28.086, {4}},      {"P", 30.974, {3, 5}},
      {"S", 32.065, {2, 4, 6}}, {"Cl", 35.453, {1}},
      {"Br", 79.904, {1}},      {"I", 126.904, {1}},
  };
  return table[static_cast<int>(e)];
}

}  // namespace

const char* element_symbol(Element e) { return info(e).symbol; }

double atomic_weight(Element e) { return info(e).weight; }

std::optional<Element> element_from_symbol(std::string_view s) {
  for (int i = 0; i < kElementCount; ++i)
    if (s == info(static_cast<Element>(i)).symbol) return static_cast<Element>(i);
  return std::nullopt;
}

const char* bond_order_name(BondOrder o) {
  switch (o) {
    case BondOrder::Single: return "single";
    case BondOrder::Double: return "double";
    case BondOrder::Triple: return "triple";
    case BondOrder::Aromatic: return "aromatic";
  }
  return "?";
}

std::vector<int> allowed_valences(Element e, int charge) {
  std::vector<int> vs = info(e).valences;
  for (int& v : vs) {
    switch (e) {
      // Lone-pair bearers gain a bond per positive charge and lose one per
      // negative charge; boron is the mirror case; carbon-like elements
      // lose a bond either way.
      case Element::N:
      case Element::O:
      case Element::P:
      case Element::S:
      case Element::F:
      case Element::Cl:
      case Element::Br:
      case Element::I:
        v += charge;
        break;
      case Element::B:
        v -= charge;
        break;
      case Element::C:
      case Element::Si:
      case Element::H:
        v -= std::abs(charge);
        break;
    }
  }
  std::erase_if(vs, [](int v) { return v < 0; });
  std::sort(vs.begin(), vs.end());
  return vs;
}

namespace detail {

void build_adjacency(GraphParts& p) {
  const int n = static_cast<int>(p.atoms.size());
  p.adj.assign(n, {});
  for (int i = 0; i < static_cast<int>(p.bonds.size()); ++i) {
    const Bond& b = p.bonds[i];
    if (b.a < 0 || b.a >= n || b.b < 0 || b.b >= n || b.a == b.b)
      throw ValenceError("bond endpoints invalid");
    for (const auto& [nbr, bi] : p.adj[b.a])
      if (nbr == b.b) throw ValenceError("duplicate bond between atoms");
    p.adj[b.a].emplace_back(b.b, i);
    p.adj[b.b].emplace_back(b.a, i);
  }
}

void compute_ring_flags(GraphParts& p) {
  const int n = static_cast<int>(p.atoms.size());
  p.atom_ring.assign(n, false);
  p.bond_ring.assign(p.bonds.size(), true);
  // Iterative DFS lowlink; bridges are exactly the non-ring bonds.
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  struct Frame {
    int v;
    int parent_bond;
    std::size_t next;
  };
  for (int root = 0; root < n; ++root) {
    if (disc[root] != -1) continue;
    std::vector<Frame> stack{{root, -1, 0}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < p.adj[f.v].size()) {
        auto [u, bi] = p.adj[f.v][f.next++];
        if (bi == f.parent_bond) continue;
        if (disc[u] == -1) {
          disc[u] = low[u] = timer++;
          stack.push_back({u, bi, 0});
        } else {
          low[f.v] = std::min(low[f.v], disc[u]);
        }
      } else {
        if (f.parent_bond >= 0) {
          const Bond& b = p.bonds[f.parent_bond];
          const int parent = b.a == f.v ? b.b : b.a;
          low[parent] = std::min(low[parent], low[f.v]);
          if (low[f.v] > disc[parent]) p.bond_ring[f.parent_bond] = false;
        }
        stack.pop_back();
      }
    }
  }
  for (int i = 0; i < static_cast<int>(p.bonds.size()); ++i)
    if (p.bond_ring[i]) {
      p.atom_ring[p.bonds[i].a] = true;
      p.atom_ring[p.bonds[i].b] = true;
    }
}

void check_connected(const GraphParts& p) {
  if (p.atoms.empty()) throw ValenceError("empty molecule");
  std::vector<char> seen(p.atoms.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (const auto& [u, bi] : p.adj[v])
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
  }
  if (count != p.atoms.size())
    throw UnsupportedFeature("disconnected molecular graph");
}

namespace {

// An aromatic atom needs exactly one ring double bond iff its bond-order
// sum with aromatic bonds counted single (plus known hydrogens) is not
// itself an allowed valence. Implicit hydrogens absorb any remaining slack
// after kekulization, so pyrrole-type atoms (sum already allowed) stay
// single-bonded while pyridine- and benzene-type atoms get one double bond.
bool needs_double_bond(const GraphParts& p, int atom, int h) {
  int sbo = h;
  for (const auto& [u, bi] : p.adj[atom]) {
    const BondOrder o = p.bonds[bi].order;
    sbo += o == BondOrder::Aromatic ? 1 : static_cast<int>(o);
  }
  const auto vs = allowed_valences(p.atoms[atom].element,
                                   p.atoms[atom].formal_charge);
  if (vs.empty())
    throw ValenceError(std::string("no allowed valence for charged ") +
                       element_symbol(p.atoms[atom].element));
  if (std::find(vs.begin(), vs.end(), sbo) != vs.end()) return false;
  if (sbo < vs.back()) return true;
  throw ValenceError(std::string("aromatic ") +
                     element_symbol(p.atoms[atom].element) +
                     " cannot reach an allowed valence");
}

bool match_candidates(const GraphParts& p, const std::vector<char>& candidate,
                      std::vector<int>& matched_with) {
  int pick = -1;
  for (int v = 0; v < static_cast<int>(candidate.size()); ++v)
    if (candidate[v] && matched_with[v] == -1) {
      pick = v;
      break;
    }
  if (pick == -1) return true;
  for (const auto& [u, bi] : p.adj[pick]) {
    if (p.bonds[bi].order != BondOrder::Aromatic) continue;
    if (!candidate[u] || matched_with[u] != -1) continue;
    matched_with[pick] = u;
    matched_with[u] = pick;
    if (match_candidates(p, candidate, matched_with)) return true;
    matched_with[pick] = -1;
    matched_with[u] = -1;
  }
  return false;
}

}  // namespace

void kekulize(GraphParts& p, const std::vector<int>& h_for_candidacy) {
  const int n = static_cast<int>(p.atoms.size());
  for (Bond& b : p.bonds)
    b.kek_order = b.order == BondOrder::Aromatic
                      ? 1
                      : static_cast<std::uint8_t>(b.order);

  std::vector<char> touches_aromatic(n, 0);
  bool any = false;
  for (const Bond& b : p.bonds)
    if (b.order == BondOrder::Aromatic) {
      touches_aromatic[b.a] = touches_aromatic[b.b] = 1;
      if (!p.bond_ring[static_cast<int>(&b - p.bonds.data())])
        throw ValenceError("aromatic bond outside a ring");
      any = true;
    }
  for (int v = 0; v < n; ++v)
    if (p.atoms[v].aromatic && !touches_aromatic[v])
      throw ValenceError("aromatic atom outside an aromatic ring");
  if (!any) return;

  std::vector<char> candidate(n, 0);
  for (int v = 0; v < n; ++v)
    if (touches_aromatic[v])
      candidate[v] = needs_double_bond(p, v, h_for_candidacy[v]) ? 1 : 0;

  std::vector<int> matched_with(n, -1);
  if (!match_candidates(p, candidate, matched_with))
    throw ValenceError("kekulization failed: no alternating bond assignment");

  for (Bond& b : p.bonds)
    if (b.order == BondOrder::Aromatic && matched_with[b.a] == b.b)
      b.kek_order = 2;
}

int kek_bond_sum(const GraphParts& p, int atom) {
  int sum = 0;
  for (const auto& [u, bi] : p.adj[atom]) sum += p.bonds[bi].kek_order;
  return sum;
}

void resolve_hydrogens(GraphParts& p) {
  for (int v = 0; v < static_cast<int>(p.atoms.size()); ++v) {
    Atom& a = p.atoms[v];
    if (a.explicit_h) {
      a.total_h = *a.explicit_h;
      continue;
    }
    const int sum = kek_bond_sum(p, v);
    int h = -1;
    for (int val : allowed_valences(a.element, a.formal_charge))
      if (val >= sum) {
        h = val - sum;
        break;
      }
    if (h < 0)
      throw ValenceError(std::string("no hydrogen assignment for ") +
                         element_symbol(a.element) + " with bond order sum " +
                         std::to_string(sum));
    a.total_h = static_cast<std::uint8_t>(h);
  }
}

void verify_valences(const GraphParts& p) {
  for (int v = 0; v < static_cast<int>(p.atoms.size()); ++v) {
    const Atom& a = p.atoms[v];
    const int total = kek_bond_sum(p, v) + a.total_h;
    const auto vs = allowed_valences(a.element, a.formal_charge);
    if (std::find(vs.begin(), vs.end(), total) == vs.end())
      throw ValenceError(std::string("valence ") + std::to_string(total) +
                         " not allowed for " + element_symbol(a.element) +
                         (a.formal_charge ? " (charged)" : ""));
  }
}

}  // namespace detail

}  // namespace molgram
