#include <algorithm>
#include <bit>

#include "molgram/canon.hpp"
#include "molgram/errors.hpp"
#include "molgram/molgraph.hpp"

namespace molgram {

namespace {

std::uint64_t atom_color(const Atom& a) {
  std::uint64_t c = static_cast<std::uint64_t>(a.element);
  c = (c << 6) | static_cast<std::uint64_t>(a.formal_charge + 16);
  c = (c << 1) | (a.aromatic ? 1u : 0u);
  c = (c << 5) | a.total_h;
  return c;
}

}  // namespace

std::string canonical_key(const MolGraph& g) {
  ColoredGraph cg(g.atom_count());
  for (int i = 0; i < g.atom_count(); ++i) cg.set_color(i, atom_color(g.atom(i)));
  for (const Bond& b : g.bonds())
    cg.add_edge(b.a, b.b, static_cast<std::uint64_t>(b.order));
  return "m1|" + canonical_form(cg).certificate;
}

void validate_valences(const MolGraph& g) {
  // Recomputes everything from the bond list; shares no state with the
  // assignment done at construction time.
  std::vector<int> sum(g.atom_count(), 0);
  for (const Bond& b : g.bonds()) {
    if (b.order == BondOrder::Aromatic &&
        (b.kek_order < 1 || b.kek_order > 2))
      throw ValenceError("aromatic bond without kekulized order");
    if (b.order != BondOrder::Aromatic &&
        b.kek_order != static_cast<int>(b.order))
      throw ValenceError("kekulized order disagrees with bond order");
    sum[b.a] += b.kek_order;
    sum[b.b] += b.kek_order;
  }
  for (int i = 0; i < g.atom_count(); ++i) {
    const Atom& a = g.atom(i);
    const int total = sum[i] + a.total_h;
    const auto vs = allowed_valences(a.element, a.formal_charge);
    if (std::find(vs.begin(), vs.end(), total) == vs.end())
      throw ValenceError(std::string("atom ") + std::to_string(i) + " (" +
                         element_symbol(a.element) + ") has disallowed valence " +
                         std::to_string(total));
  }
}

int Fingerprint::popcount() const {
  int n = 0;
  for (std::uint64_t w : words) n += std::popcount(w);
  return n;
}

double molecular_weight(const MolGraph& g) {
  double w = 0.0;
  for (const Atom& a : g.atoms())
    w += atomic_weight(a.element) + a.total_h * atomic_weight(Element::H);
  return w;
}

}  // namespace molgram
