#pragma once

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "molgram/grammar.hpp"
#include "molgram/molgraph.hpp"

namespace molgram {

// Element- and bond-order-labeled subgraph query (substructure semantics:
// query bonds must exist in the target, extra target bonds are fine).
struct SubstructQuery {
  std::vector<Element> atoms;
  std::vector<std::tuple<int, int, BondOrder>> bonds;
};

bool contains_substructure(const MolGraph& g, const SubstructQuery& q);

// Class membership test. Builtin patterns are validated against their own
// training dataset the first time they are requested.
class MembershipPattern {
 public:
  static const MembershipPattern& builtin(const std::string& id);
  static std::vector<std::string> builtin_ids();

  const std::string& id() const { return id_; }
  bool matches(const MolGraph& g) const;

  // Weaker fragment-level test used on rule right-hand sides: does the
  // fragment contain the class's characteristic group?
  bool fragment_has_motif(const FragmentGraph& f) const;

 private:
  explicit MembershipPattern(std::string id) : id_(std::move(id)) {}
  std::string id_;
};

double validity(const std::vector<bool>& parse_ok);
double uniqueness(const std::vector<MolGraph>& mols);
double novelty(const std::vector<MolGraph>& mols,
               const std::set<std::string>& train_keys);
double diversity(const std::vector<MolGraph>& mols);
double diversity_fp(const std::vector<Fingerprint>& fps);
double chamfer(const std::vector<MolGraph>& a, const std::vector<MolGraph>& b);
double chamfer_fp(const std::vector<Fingerprint>& a,
                  const std::vector<Fingerprint>& b);
double membership(const std::vector<MolGraph>& mols, const MembershipPattern& p);

struct MolWeightStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};
MolWeightStats mol_weight_stats(const std::vector<MolGraph>& mols);

// Subprocess scorer: writes one SMILES per line to the child's stdin,
// reads one decimal score per line back, aggregates the mean.
struct ExternalScores {
  std::vector<double> scores;
  double mean = 0.0;
};
ExternalScores external_metric(const std::vector<std::string>& smiles,
                               const std::string& command,
                               int timeout_seconds = 300);

}  // namespace molgram
