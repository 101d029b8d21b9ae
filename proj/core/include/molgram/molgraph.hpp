#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "molgram/errors.hpp"

namespace molgram {

enum class Element : std::uint8_t { H, B, C, N, O, F, Si, P, S, Cl, Br, I };

constexpr int kElementCount = 12;

const char* element_symbol(Element e);
std::optional<Element> element_from_symbol(std::string_view s);
double atomic_weight(Element e);

enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

const char* bond_order_name(BondOrder o);

struct Atom {
  Element element = Element::C;
  std::int8_t formal_charge = 0;
  bool aromatic = false;
  // Bracket-atom hydrogen count; implicit-H inference is disabled when set.
  std::optional<std::uint8_t> explicit_h;
  // Resolved hydrogen count (explicit or inferred). Always valid on a
  // constructed graph.
  std::uint8_t total_h = 0;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::Single;
  // Kekulized order (1 or 2) used for valence accounting; equals the
  // integer order for non-aromatic bonds.
  std::uint8_t kek_order = 1;
};

// Connected molecular graph over heavy atoms with implicit hydrogens.
// Immutable after construction; all operations on it are pure functions.
class MolGraph {
 public:
  int atom_count() const { return static_cast<int>(atoms_.size()); }
  const Atom& atom(int i) const { return atoms_[i]; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const Bond& bond(int i) const { return bonds_[i]; }

  // (neighbor atom, bond index) pairs.
  const std::vector<std::pair<int, int>>& neighbors(int atom) const {
    return adj_[atom];
  }

  bool atom_in_ring(int i) const { return atom_ring_[i]; }
  bool bond_in_ring(int i) const { return bond_ring_[i]; }

  // Validates connectivity and valence, perceives rings, kekulizes
  // aromatic systems. Hydrogen counts in `atoms` are trusted and verified.
  static MolGraph from_parts(std::vector<Atom> atoms, std::vector<Bond> bonds);

 private:
  friend MolGraph parse_smiles(std::string_view);
  MolGraph() = default;

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
  std::vector<bool> atom_ring_;
  std::vector<bool> bond_ring_;
};

// Supported SMILES subset: organic-subset atoms, aromatic lowercase atoms,
// bracket atoms with charge and H-count, bonds - = # :, branches, ring
// closures (digits and %nn). Explicit [H] atoms are folded into their
// neighbor's hydrogen count. Wildcards, isotopes, stereo markers and
// multi-fragment input are rejected with UnsupportedFeature.
MolGraph parse_smiles(std::string_view text);

std::string write_smiles(const MolGraph& g);

// Exact canonical key: equal iff the graphs are label-preserving
// isomorphic (element, charge, aromatic flag, hydrogen count, bond order).
std::string canonical_key(const MolGraph& g);

// Independent valence re-check used by validity metrics and tests; throws
// ValenceError when some atom's kekulized bond-order sum plus hydrogens is
// not an allowed valence for its element and charge.
void validate_valences(const MolGraph& g);

// Allowed valences for an element at a formal charge (ascending).
std::vector<int> allowed_valences(Element e, int charge);

struct Fingerprint {
  int radius = 2;
  int nbits = 2048;
  std::vector<std::uint64_t> words;

  int popcount() const;
};

Fingerprint morgan_fingerprint(const MolGraph& g, int radius = 2, int nbits = 2048);

// 1 - |a AND b| / |a OR b|; 0 when both fingerprints are empty.
double tanimoto_distance(const Fingerprint& a, const Fingerprint& b);

double molecular_weight(const MolGraph& g);

}  // namespace molgram
