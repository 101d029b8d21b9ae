#pragma once

// Internal helpers shared by the SMILES reader, from_parts and to_molecule.

#include <vector>

#include "molgram/molgraph.hpp"

namespace molgram::detail {

struct GraphParts {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, bond idx)
  std::vector<bool> atom_ring;
  std::vector<bool> bond_ring;
};

// Validates endpoints and duplicate bonds, fills adj.
void build_adjacency(GraphParts& p);

// Marks non-bridge bonds and their endpoints as ring members.
void compute_ring_flags(GraphParts& p);

void check_connected(const GraphParts& p);

// Assigns kek_order on aromatic bonds by backtracking perfect matching over
// double-bond candidate atoms. `h_for_candidacy[i]` is the hydrogen count
// assumed when deciding whether atom i needs a ring double bond (explicit
// count for bracket atoms, 0 for organic-subset atoms before inference).
void kekulize(GraphParts& p, const std::vector<int>& h_for_candidacy);

// Infers total_h for atoms without explicit_h from kekulized bond-order
// sums; copies explicit_h otherwise.
void resolve_hydrogens(GraphParts& p);

// Kekulized bond-order sum at an atom.
int kek_bond_sum(const GraphParts& p, int atom);

void verify_valences(const GraphParts& p);

}  // namespace molgram::detail
