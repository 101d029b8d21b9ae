#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graph_detail.hpp"
#include "molgram/errors.hpp"
#include "molgram/molgraph.hpp"

namespace molgram {

namespace {

struct Reader {
  std::string_view text;
  std::size_t pos = 0;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() { return text[pos++]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw SyntaxError(what + " at position " + std::to_string(pos));
  }
};

struct PendingBond {
  std::optional<BondOrder> order;
};

std::optional<BondOrder> bond_from_char(char c) {
  switch (c) {
    case '-': return BondOrder::Single;
    case '=': return BondOrder::Double;
    case '#': return BondOrder::Triple;
    case ':': return BondOrder::Aromatic;
    default: return std::nullopt;
  }
}

bool aromatic_allowed(Element e) {
  switch (e) {
    case Element::B:
    case Element::C:
    case Element::N:
    case Element::O:
    case Element::P:
    case Element::S:
      return true;
    default:
      return false;
  }
}

Atom parse_bracket_atom(Reader& r) {
  // '[' already consumed.
  if (r.done()) r.fail("unterminated bracket atom");
  if (std::isdigit(static_cast<unsigned char>(r.peek())))
    throw UnsupportedFeature("isotope specifications are not supported");

  Atom atom;
  char c = r.take();
  if (c == '*') throw UnsupportedFeature("wildcard atoms are not supported");
  if (std::islower(static_cast<unsigned char>(c))) {
    auto e = element_from_symbol(std::string(1, static_cast<char>(
                                                   std::toupper(c))));
    if (!e || !aromatic_allowed(*e)) r.fail("unknown aromatic element");
    atom.element = *e;
    atom.aromatic = true;
  } else if (std::isupper(static_cast<unsigned char>(c))) {
    std::string sym(1, c);
    if (!r.done() && std::islower(static_cast<unsigned char>(r.peek()))) {
      std::string two = sym + r.peek();
      if (auto e = element_from_symbol(two)) {
        atom.element = *e;
        r.take();
      } else if (auto e1 = element_from_symbol(sym)) {
        atom.element = *e1;
      } else {
        r.fail("unsupported element '" + two + "'");
      }
    } else {
      auto e = element_from_symbol(sym);
      if (!e) r.fail("unsupported element '" + sym + "'");
      atom.element = *e;
    }
  } else {
    r.fail("expected element symbol in bracket atom");
  }

  int hcount = 0;
  if (!r.done() && r.peek() == '@')
    throw UnsupportedFeature("stereo markers are not supported");
  if (!r.done() && r.peek() == 'H') {
    if (atom.element == Element::H) r.fail("hydrogen count on hydrogen");
    r.take();
    hcount = 1;
    if (!r.done() && std::isdigit(static_cast<unsigned char>(r.peek())))
      hcount = r.take() - '0';
  }
  atom.explicit_h = static_cast<std::uint8_t>(hcount);

  int charge = 0;
  if (!r.done() && (r.peek() == '+' || r.peek() == '-')) {
    const char sign = r.take();
    if (!r.done() && std::isdigit(static_cast<unsigned char>(r.peek()))) {
      charge = r.take() - '0';
    } else {
      charge = 1;
      while (!r.done() && r.peek() == sign) {
        r.take();
        ++charge;
      }
    }
    if (sign == '-') charge = -charge;
  }
  atom.formal_charge = static_cast<std::int8_t>(charge);

  if (!r.done() && r.peek() == ':')
    throw UnsupportedFeature("atom class labels are not supported");
  if (r.done() || r.take() != ']') r.fail("expected ']'");
  return atom;
}

std::optional<Atom> parse_organic_atom(Reader& r) {
  const char c = r.peek();
  Atom atom;
  if (std::islower(static_cast<unsigned char>(c))) {
    auto e = element_from_symbol(std::string(1, static_cast<char>(
                                                   std::toupper(c))));
    if (!e || !aromatic_allowed(*e)) return std::nullopt;
    r.take();
    atom.element = *e;
    atom.aromatic = true;
    return atom;
  }
  if (!std::isupper(static_cast<unsigned char>(c))) return std::nullopt;
  // Two-character organic-subset symbols first.
  if (c == 'C' && r.pos + 1 < r.text.size() && r.text[r.pos + 1] == 'l') {
    r.pos += 2;
    atom.element = Element::Cl;
    return atom;
  }
  if (c == 'B' && r.pos + 1 < r.text.size() && r.text[r.pos + 1] == 'r') {
    r.pos += 2;
    atom.element = Element::Br;
    return atom;
  }
  switch (c) {
    case 'B': atom.element = Element::B; break;
    case 'C': atom.element = Element::C; break;
    case 'N': atom.element = Element::N; break;
    case 'O': atom.element = Element::O; break;
    case 'P': atom.element = Element::P; break;
    case 'S': atom.element = Element::S; break;
    case 'F': atom.element = Element::F; break;
    case 'I': atom.element = Element::I; break;
    default: return std::nullopt;
  }
  r.take();
  return atom;
}

struct ProvisionalBond {
  int a;
  int b;
  std::optional<BondOrder> order;
};

struct RingRef {
  int atom;
  std::optional<BondOrder> order;
};

}  // namespace

MolGraph parse_smiles(std::string_view text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' ||
                           text.back() == ' ' || text.back() == '\t'))
    text.remove_suffix(1);
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
    text.remove_prefix(1);
  if (text.empty()) throw SyntaxError("empty SMILES string");

  Reader r{text};
  std::vector<Atom> atoms;
  std::vector<ProvisionalBond> pbonds;
  std::vector<int> branch_stack;
  std::map<int, RingRef> open_rings;
  int prev = -1;
  std::optional<BondOrder> pending;

  auto attach = [&](int to) {
    if (prev >= 0) pbonds.push_back({prev, to, pending});
    else if (pending)
      r.fail("bond symbol before first atom");
    pending.reset();
    prev = to;
  };

  auto close_ring = [&](int number) {
    auto it = open_rings.find(number);
    if (prev < 0) r.fail("ring closure before any atom");
    if (it == open_rings.end()) {
      open_rings[number] = RingRef{prev, pending};
      pending.reset();
      return;
    }
    RingRef ref = it->second;
    open_rings.erase(it);
    if (ref.atom == prev) r.fail("ring closure to the same atom");
    std::optional<BondOrder> order;
    if (ref.order && pending && *ref.order != *pending)
      r.fail("conflicting ring closure bond orders");
    order = ref.order ? ref.order : pending;
    pending.reset();
    pbonds.push_back({ref.atom, prev, order});
  };

  while (!r.done()) {
    const char c = r.peek();
    if (c == '.')
      throw UnsupportedFeature("multi-fragment SMILES is not supported");
    if (c == '*')
      throw UnsupportedFeature("wildcard atoms are not supported");
    if (c == '/' || c == '\\' || c == '@')
      throw UnsupportedFeature("stereo markers are not supported");
    if (c == ' ' || c == '\t') r.fail("unexpected whitespace");

    if (auto b = bond_from_char(c)) {
      if (pending) r.fail("two consecutive bond symbols");
      r.take();
      pending = b;
      continue;
    }
    if (c == '(') {
      r.take();
      if (prev < 0) r.fail("branch before first atom");
      if (pending) r.fail("bond symbol before '('");
      branch_stack.push_back(prev);
      continue;
    }
    if (c == ')') {
      r.take();
      if (branch_stack.empty()) r.fail("unmatched ')'");
      if (pending) r.fail("dangling bond symbol before ')'");
      prev = branch_stack.back();
      branch_stack.pop_back();
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      r.take();
      close_ring(c - '0');
      continue;
    }
    if (c == '%') {
      r.take();
      if (r.done() || !std::isdigit(static_cast<unsigned char>(r.peek())))
        r.fail("expected two digits after '%'");
      int hi = r.take() - '0';
      if (r.done() || !std::isdigit(static_cast<unsigned char>(r.peek())))
        r.fail("expected two digits after '%'");
      int lo = r.take() - '0';
      close_ring(hi * 10 + lo);
      continue;
    }
    if (c == '[') {
      r.take();
      atoms.push_back(parse_bracket_atom(r));
      attach(static_cast<int>(atoms.size()) - 1);
      continue;
    }
    if (auto atom = parse_organic_atom(r)) {
      atoms.push_back(*atom);
      attach(static_cast<int>(atoms.size()) - 1);
      continue;
    }
    r.fail(std::string("unexpected character '") + c + "'");
  }

  if (!branch_stack.empty()) throw SyntaxError("unclosed branch");
  if (!open_rings.empty()) throw SyntaxError("unclosed ring bond");
  if (pending) throw SyntaxError("dangling bond symbol");
  if (atoms.empty()) throw SyntaxError("no atoms in SMILES string");

  detail::GraphParts parts;
  parts.atoms = std::move(atoms);
  std::vector<bool> is_default;
  for (const ProvisionalBond& pb : pbonds) {
    parts.bonds.push_back({pb.a, pb.b, pb.order.value_or(BondOrder::Single), 1});
    is_default.push_back(!pb.order.has_value());
  }
  detail::build_adjacency(parts);
  detail::compute_ring_flags(parts);

  // An unwritten bond between two aromatic atoms is aromatic when it lies
  // in a ring, single otherwise (biphenyl-style bridges).
  for (std::size_t i = 0; i < parts.bonds.size(); ++i) {
    if (!is_default[i]) continue;
    Bond& b = parts.bonds[i];
    if (parts.atoms[b.a].aromatic && parts.atoms[b.b].aromatic &&
        parts.bond_ring[i])
      b.order = BondOrder::Aromatic;
  }

  std::vector<int> h_for_candidacy(parts.atoms.size(), 0);
  for (std::size_t i = 0; i < parts.atoms.size(); ++i)
    if (parts.atoms[i].explicit_h)
      h_for_candidacy[i] = *parts.atoms[i].explicit_h;
  detail::kekulize(parts, h_for_candidacy);
  detail::resolve_hydrogens(parts);

  // Fold explicit [H] atoms into their heavy neighbor's hydrogen count.
  bool has_h = false;
  for (const Atom& a : parts.atoms)
    if (a.element == Element::H) has_h = true;
  if (has_h) {
    std::vector<int> remap(parts.atoms.size(), -1);
    detail::GraphParts folded;
    for (std::size_t i = 0; i < parts.atoms.size(); ++i) {
      const Atom& a = parts.atoms[i];
      if (a.element != Element::H) {
        remap[i] = static_cast<int>(folded.atoms.size());
        folded.atoms.push_back(a);
        continue;
      }
      if (a.formal_charge != 0)
        throw UnsupportedFeature("charged hydrogen atoms are not supported");
      if (parts.adj[i].size() != 1)
        throw ValenceError("explicit hydrogen must have exactly one bond");
      const auto& [nbr, bi] = parts.adj[i][0];
      if (parts.atoms[nbr].element == Element::H)
        throw UnsupportedFeature("hydrogen-only fragments are not supported");
      if (parts.bonds[bi].order != BondOrder::Single)
        throw ValenceError("explicit hydrogen bonded with non-single bond");
    }
    if (folded.atoms.empty())
      throw UnsupportedFeature("molecule has no heavy atoms");
    for (std::size_t i = 0; i < parts.atoms.size(); ++i) {
      if (parts.atoms[i].element != Element::H) continue;
      const int nbr = parts.adj[i][0].first;
      Atom& heavy = folded.atoms[remap[nbr]];
      heavy.total_h = static_cast<std::uint8_t>(heavy.total_h + 1);
    }
    for (const Bond& b : parts.bonds) {
      if (parts.atoms[b.a].element == Element::H ||
          parts.atoms[b.b].element == Element::H)
        continue;
      Bond nb = b;
      nb.a = remap[b.a];
      nb.b = remap[b.b];
      folded.bonds.push_back(nb);
    }
    detail::build_adjacency(folded);
    detail::compute_ring_flags(folded);
    parts = std::move(folded);
  }

  detail::check_connected(parts);
  detail::verify_valences(parts);

  MolGraph g;
  g.atoms_ = std::move(parts.atoms);
  g.bonds_ = std::move(parts.bonds);
  g.adj_ = std::move(parts.adj);
  g.atom_ring_ = std::move(parts.atom_ring);
  g.bond_ring_ = std::move(parts.bond_ring);
  return g;
}

MolGraph MolGraph::from_parts(std::vector<Atom> atoms, std::vector<Bond> bonds) {
  detail::GraphParts parts;
  parts.atoms = std::move(atoms);
  parts.bonds = std::move(bonds);
  for (const Atom& a : parts.atoms)
    if (a.element == Element::H)
      throw ValenceError("explicit hydrogen atoms are not valid graph nodes");
  detail::build_adjacency(parts);
  detail::compute_ring_flags(parts);
  std::vector<int> h(parts.atoms.size());
  for (std::size_t i = 0; i < parts.atoms.size(); ++i)
    h[i] = parts.atoms[i].total_h;
  detail::kekulize(parts, h);
  detail::check_connected(parts);
  detail::verify_valences(parts);

  MolGraph g;
  g.atoms_ = std::move(parts.atoms);
  g.bonds_ = std::move(parts.bonds);
  g.adj_ = std::move(parts.adj);
  g.atom_ring_ = std::move(parts.atom_ring);
  g.bond_ring_ = std::move(parts.bond_ring);
  return g;
}

}  // namespace molgram
