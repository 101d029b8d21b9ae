#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "molgram/errors.hpp"
#include "molgram/molgraph.hpp"

namespace molgram {

namespace {

// Hydrogen count a reader would infer for this atom from the written
// structure. Brackets are needed whenever it differs from the actual one.
int reader_inferred_h(const MolGraph& g, int atom) {
  const Atom& a = g.atom(atom);
  if (a.formal_charge != 0) return -1;
  int sum = 0;
  for (const auto& [nbr, bi] : g.neighbors(atom)) sum += g.bond(bi).kek_order;
  for (int v : allowed_valences(a.element, 0))
    if (v >= sum) return v - sum;
  return -1;
}

bool organic_subset(Element e) {
  switch (e) {
    case Element::B:
    case Element::C:
    case Element::N:
    case Element::O:
    case Element::P:
    case Element::S:
    case Element::F:
    case Element::Cl:
    case Element::Br:
    case Element::I:
      return true;
    default:
      return false;
  }
}

std::string atom_token(const MolGraph& g, int atom) {
  const Atom& a = g.atom(atom);
  std::string sym = element_symbol(a.element);
  if (a.aromatic)
    for (char& c : sym) c = static_cast<char>(std::tolower(c));

  const bool bare_ok = organic_subset(a.element) && a.formal_charge == 0 &&
                       reader_inferred_h(g, atom) == a.total_h;
  if (bare_ok) return sym;

  std::string out = "[" + sym;
  if (a.total_h == 1) out += "H";
  else if (a.total_h > 1)
    out += "H" + std::to_string(static_cast<int>(a.total_h));
  if (a.formal_charge > 0)
    out += a.formal_charge == 1 ? "+" : "+" + std::to_string(a.formal_charge);
  else if (a.formal_charge < 0)
    out += a.formal_charge == -1 ? "-" : "-" + std::to_string(-a.formal_charge);
  out += "]";
  return out;
}

std::string bond_token(const MolGraph& g, int bond) {
  const Bond& b = g.bond(bond);
  switch (b.order) {
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    case BondOrder::Aromatic:
      // Implicit between two aromatic atoms, the only place it can occur.
      return "";
    case BondOrder::Single:
      // A ring single bond between two aromatic atoms must be spelled out
      // or a reader would take it as aromatic.
      if (g.atom(b.a).aromatic && g.atom(b.b).aromatic) return "-";
      return "";
  }
  return "";
}

struct Writer {
  const MolGraph& g;
  std::vector<bool> visited;
  std::vector<bool> closure_bond;
  std::map<int, std::vector<std::pair<int, int>>> closures;  // atom -> (digit, bond)
  std::string out;

  explicit Writer(const MolGraph& graph)
      : g(graph),
        visited(graph.atom_count(), false),
        closure_bond(graph.bonds().size(), false) {}

  // DFS once to split bonds into spanning-tree and ring-closure bonds and
  // hand out closure digits in traversal order.
  void assign_closures() {
    std::vector<bool> used(g.bonds().size(), false);
    int next_digit = 1;
    struct Frame {
      int atom;
      std::size_t next = 0;
    };
    std::vector<Frame> stack{{0}};
    visited[0] = true;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next >= g.neighbors(f.atom).size()) {
        stack.pop_back();
        continue;
      }
      auto [nbr, bi] = g.neighbors(f.atom)[f.next++];
      if (used[bi]) continue;
      used[bi] = true;
      if (!visited[nbr]) {
        visited[nbr] = true;
        stack.push_back({nbr});
      } else {
        const int digit = next_digit++;
        closure_bond[bi] = true;
        closures[f.atom].emplace_back(digit, bi);
        closures[nbr].emplace_back(digit, bi);
      }
    }
    std::fill(visited.begin(), visited.end(), false);
  }

  void emit_atom(int atom) {
    out += atom_token(g, atom);
    auto it = closures.find(atom);
    if (it == closures.end()) return;
    for (const auto& [digit, bi] : it->second) {
      out += bond_token(g, bi);
      out += digit < 10 ? std::to_string(digit) : "%" + std::to_string(digit);
    }
  }

  void emit(int atom) {
    visited[atom] = true;
    emit_atom(atom);
    std::vector<std::pair<int, int>> children;  // (bond, child)
    for (auto [nbr, bi] : g.neighbors(atom))
      if (!closure_bond[bi] && !visited[nbr]) children.emplace_back(bi, nbr);
    for (std::size_t i = 0; i < children.size(); ++i) {
      const bool last = i + 1 == children.size();
      if (!last) out += '(';
      out += bond_token(g, children[i].first);
      emit(children[i].second);
      if (!last) out += ')';
    }
  }
};

}  // namespace

std::string write_smiles(const MolGraph& g) {
  Writer w(g);
  w.assign_closures();
  w.emit(0);
  return w.out;
}

}  // namespace molgram
