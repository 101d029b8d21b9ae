#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "molgram/hypergraph.hpp"

namespace molgram {

struct AnchorSignature {
  bool nonterminal = false;
  Element element = Element::C;
  std::int8_t charge = 0;
};

// LHS -> RHS rewrite. The RHS is stored in canonical form: node ids are
// 0..k-1 in canonical order and edges are sorted, so structurally equal
// rules are bit-identical. Anchor nodes appear unchanged on both sides;
// the LHS is derived: a non-terminal plus the anchors, connected by the
// RHS edges that touch an anchor, with internal nodes collapsed into the
// non-terminal.
struct ProductionRule {
  std::string key;
  bool is_initial = false;
  bool terminal_only = false;  // no non-terminal among RHS internals
  int count = 0;
  MolHypergraph rhs;
  std::vector<int> anchor_nodes;  // rhs node ids, in anchor-slot order
  std::vector<AnchorSignature> anchor_sigs;

  bool is_anchor(int rhs_node) const;
  std::vector<int> internal_nodes() const;   // ascending rhs node ids
  std::vector<int> connecting_edges() const; // rhs edges touching an anchor
};

// A rule extracted from a concrete contraction step, with the mapping back
// to the host hypergraph needed for provenance replay.
struct RuleInstance {
  ProductionRule rule;
  std::vector<int> internal_source_ids;  // aligned with rule.internal_nodes()
  std::vector<int> anchor_source_ids;    // aligned with rule.anchor_nodes
};

struct ProvenanceStep {
  int rule_id = -1;
  int created_nt = -1;
  std::vector<int> internal_ids;
  std::vector<int> anchor_ids;
};

struct Derivation {
  std::string molecule_key;
  std::vector<ProvenanceStep> steps;  // contraction order
};

struct Grammar {
  std::vector<ProductionRule> rules;
  std::vector<Derivation> derivations;

  std::vector<int> derivation_rule_ids(int molecule) const;
};

struct GenerationConfig {
  double alpha = 0.5;
  int max_iterations = 100;
  std::uint64_t seed = 0;
};

// Builds the production rule for contracting `component_nodes` out of `h`
// (straddling edges re-anchored as in contract()). is_initial is set when
// the component covers the whole remaining hypergraph.
RuleInstance make_rule(const MolHypergraph& h, const std::set<int>& component_nodes,
                       const std::set<int>& straddling_edges);

// Canonical key; equal keys iff the rules are isomorphic as anchored graphs.
std::string rule_key(const ProductionRule& r);

struct RuleMatch {
  int nt_node = -1;
  // (rhs connecting edge id, partial edge id) in rhs edge order.
  std::vector<std::pair<int, int>> edge_pairing;
  std::vector<int> anchor_binding;  // slot -> partial node id
};

// Exhaustive backtracking enumeration of the sites where r can rewrite a
// non-terminal of `partial`. Anchor bindings are injective and label- and
// signature-checked.
std::vector<RuleMatch> match_sites(const MolHypergraph& partial,
                                   const ProductionRule& r);

// Splices the RHS in at a match. `forced_internal_ids`, when given, pins
// the ids of the spliced internal nodes (provenance replay); otherwise
// fresh ids are assigned. `created_ids` receives the spliced internal ids
// aligned with r.internal_nodes().
MolHypergraph apply_rule(const MolHypergraph& partial, const ProductionRule& r,
                         const RuleMatch& m,
                         std::vector<int>* created_ids = nullptr,
                         const std::vector<int>* forced_internal_ids = nullptr);

// Stochastic top-down generation per the tilted rule distribution
// p(r) ∝ exp(alpha * t * x_r) over currently applicable rules, with the
// match site chosen uniformly.
MolGraph generate(const Grammar& g, const GenerationConfig& cfg);

// Rule ids appearing in every molecule's derivation.
std::vector<int> shared_rule_ids(const Grammar& g);

// Replays the recorded derivation of one training molecule; the result
// must reproduce it exactly (callers check canonical_key equality).
MolGraph replay_molecule(const Grammar& g, int molecule);

// Incremental construction with key-based deduplication.
class GrammarBuilder {
 public:
  int start_molecule(const std::string& molecule_key);
  int record(const RuleInstance& inst, int molecule, int created_nt);
  Grammar finish();

 private:
  Grammar g_;
  std::map<std::string, int> by_key_;
};

// Serialization (versioned JSON). Writing then reading yields
// rule_key-identical grammars.
std::string grammar_to_json(const Grammar& g);
Grammar grammar_from_json(const std::string& text);
void save_grammar(const Grammar& g, const std::string& path);
Grammar load_grammar(const std::string& path);

// Terminal atoms and bonds of a rule RHS (ring edges expanded, positions
// covered by non-terminals skipped). Not necessarily a valid molecule;
// used for motif searches and rule rendering.
struct FragmentGraph {
  std::vector<Atom> atoms;
  std::vector<std::pair<std::pair<int, int>, BondOrder>> bonds;
  std::vector<int> anchor_slots;  // per atom: slot id or -1
  std::vector<bool> nonterminal;  // per atom: placeholder flag
};
FragmentGraph rule_fragment(const ProductionRule& r);

// Human-readable one-line rendering of a rule.
std::string render_rule(const ProductionRule& r);

}  // namespace molgram
