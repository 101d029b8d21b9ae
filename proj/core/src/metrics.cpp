#include <algorithm>
#include <map>
#include <mutex>

#include "molgram/datasets.hpp"
#include "molgram/errors.hpp"
#include "molgram/metrics.hpp"

namespace molgram {

namespace {

// Minimal adjacency view so the same matcher serves molecules and rule
// fragments (fragment entries flagged `skip` are non-terminal placeholders).
struct TargetView {
  std::vector<Element> element;
  std::vector<bool> skip;
  std::vector<std::vector<std::pair<int, BondOrder>>> adj;

  static TargetView from(const MolGraph& g) {
    TargetView t;
    t.element.reserve(g.atom_count());
    t.skip.assign(g.atom_count(), false);
    t.adj.resize(g.atom_count());
    for (int i = 0; i < g.atom_count(); ++i) t.element.push_back(g.atom(i).element);
    for (const Bond& b : g.bonds()) {
      t.adj[b.a].emplace_back(b.b, b.order);
      t.adj[b.b].emplace_back(b.a, b.order);
    }
    return t;
  }

  static TargetView from(const FragmentGraph& f) {
    TargetView t;
    t.adj.resize(f.atoms.size());
    for (std::size_t i = 0; i < f.atoms.size(); ++i) {
      t.element.push_back(f.atoms[i].element);
      t.skip.push_back(f.nonterminal[i]);
    }
    for (const auto& [pair, order] : f.bonds) {
      t.adj[pair.first].emplace_back(pair.second, order);
      t.adj[pair.second].emplace_back(pair.first, order);
    }
    return t;
  }
};

bool match_from(const SubstructQuery& q, const TargetView& t,
                std::vector<int>& assign, std::size_t qi) {
  if (qi == q.atoms.size()) return true;
  for (int cand = 0; cand < static_cast<int>(t.element.size()); ++cand) {
    if (t.skip[cand] || t.element[cand] != q.atoms[qi]) continue;
    if (std::find(assign.begin(), assign.end(), cand) != assign.end()) continue;
    bool ok = true;
    for (const auto& [a, b, order] : q.bonds) {
      int other;
      if (a == static_cast<int>(qi)) other = b;
      else if (b == static_cast<int>(qi)) other = a;
      else continue;
      if (other >= static_cast<int>(qi)) continue;  // not assigned yet
      bool found = false;
      for (const auto& [nbr, bord] : t.adj[cand])
        if (nbr == assign[other] && bord == order) found = true;
      if (!found) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    assign.push_back(cand);
    if (match_from(q, t, assign, qi + 1)) return true;
    assign.pop_back();
  }
  return false;
}

bool contains(const TargetView& t, const SubstructQuery& q) {
  std::vector<int> assign;
  assign.reserve(q.atoms.size());
  return match_from(q, t, assign, 0);
}

const SubstructQuery& isocyanate_query() {
  static const SubstructQuery q{
      {Element::N, Element::C, Element::O},
      {{0, 1, BondOrder::Double}, {1, 2, BondOrder::Double}}};
  return q;
}

// Vinyl conjugated to an ester carbonyl: C=C-C(=O)-O.
const SubstructQuery& acrylate_query() {
  static const SubstructQuery q{
      {Element::C, Element::C, Element::C, Element::O, Element::O},
      {{0, 1, BondOrder::Double},
       {1, 2, BondOrder::Single},
       {2, 3, BondOrder::Double},
       {2, 4, BondOrder::Single}}};
  return q;
}

// Chain extenders carry exactly two reactive O-H / N-H groups: hydroxyl or
// amine hydrogens not sitting next to a carbonyl carbon (carboxyl, amide
// and urea hydrogens do not extend chains).
bool is_carbonyl_carbon(const TargetView& t, int i) {
  if (t.element[i] != Element::C) return false;
  for (const auto& [nbr, order] : t.adj[i])
    if (t.element[nbr] == Element::O && order == BondOrder::Double) return true;
  return false;
}

int count_reactive_groups(const TargetView& t, const std::vector<int>& hcount) {
  int groups = 0;
  for (int i = 0; i < static_cast<int>(t.element.size()); ++i) {
    if (t.skip[i]) continue;
    if (t.element[i] != Element::O && t.element[i] != Element::N) continue;
    if (hcount[i] < 1) continue;
    bool next_to_carbonyl = false;
    for (const auto& [nbr, order] : t.adj[i])
      if (!t.skip[nbr] && is_carbonyl_carbon(t, nbr)) next_to_carbonyl = true;
    if (!next_to_carbonyl) ++groups;
  }
  return groups;
}

std::vector<int> hydrogen_counts(const MolGraph& g) {
  std::vector<int> h(g.atom_count());
  for (int i = 0; i < g.atom_count(); ++i) h[i] = g.atom(i).total_h;
  return h;
}

}  // namespace

bool contains_substructure(const MolGraph& g, const SubstructQuery& q) {
  return contains(TargetView::from(g), q);
}

const MembershipPattern& MembershipPattern::builtin(const std::string& id) {
  static const std::map<std::string, MembershipPattern> patterns = [] {
    std::map<std::string, MembershipPattern> m;
    m.emplace("isocyanate", MembershipPattern("isocyanate"));
    m.emplace("acrylate", MembershipPattern("acrylate"));
    m.emplace("chain_extender", MembershipPattern("chain_extender"));
    return m;
  }();
  auto it = patterns.find(id);
  if (it == patterns.end()) {
    std::string known;
    for (const std::string& k : builtin_ids()) known += " " + k;
    throw UnknownPattern("unknown membership pattern '" + id +
                         "'; available:" + known);
  }

  // Sanity check at load: the pattern must recognize at least one molecule
  // of its own class dataset.
  static std::mutex mu;
  static std::set<std::string> validated;
  {
    std::lock_guard<std::mutex> lock(mu);
    if (!validated.count(id)) {
      validated.insert(id);
      const std::string dataset = id == "isocyanate" ? "isocyanates"
                                  : id == "acrylate" ? "acrylates"
                                                     : "chain_extenders";
      bool any = false;
      for (const DatasetEntry& e : builtin_dataset(dataset))
        if (it->second.matches(parse_smiles(e.smiles))) any = true;
      if (!any)
        throw UnknownPattern("membership pattern '" + id +
                             "' matches nothing in its own class dataset");
    }
  }
  return it->second;
}

std::vector<std::string> MembershipPattern::builtin_ids() {
  return {"isocyanate", "acrylate", "chain_extender"};
}

bool MembershipPattern::matches(const MolGraph& g) const {
  const TargetView t = TargetView::from(g);
  if (id_ == "isocyanate") return contains(t, isocyanate_query());
  if (id_ == "acrylate") return contains(t, acrylate_query());
  // chain extender
  if (contains(t, isocyanate_query()) || contains(t, acrylate_query()))
    return false;
  return count_reactive_groups(t, hydrogen_counts(g)) == 2;
}

bool MembershipPattern::fragment_has_motif(const FragmentGraph& f) const {
  const TargetView t = TargetView::from(f);
  if (id_ == "isocyanate") return contains(t, isocyanate_query());
  if (id_ == "acrylate") return contains(t, acrylate_query());
  std::vector<int> h(f.atoms.size(), 0);
  for (std::size_t i = 0; i < f.atoms.size(); ++i) h[i] = f.atoms[i].total_h;
  return count_reactive_groups(t, h) >= 1;
}

double validity(const std::vector<bool>& parse_ok) {
  if (parse_ok.empty()) throw EmptyBatch("validity of an empty batch is undefined");
  int valid = 0;
  for (bool ok : parse_ok) valid += ok ? 1 : 0;
  return static_cast<double>(valid) / static_cast<double>(parse_ok.size());
}

double uniqueness(const std::vector<MolGraph>& mols) {
  if (mols.empty()) throw EmptyBatch("uniqueness of an empty batch is undefined");
  std::set<std::string> keys;
  for (const MolGraph& m : mols) keys.insert(canonical_key(m));
  return static_cast<double>(keys.size()) / static_cast<double>(mols.size());
}

double novelty(const std::vector<MolGraph>& mols,
               const std::set<std::string>& train_keys) {
  if (mols.empty()) throw EmptyBatch("novelty of an empty batch is undefined");
  int novel = 0;
  for (const MolGraph& m : mols)
    if (!train_keys.count(canonical_key(m))) ++novel;
  return static_cast<double>(novel) / static_cast<double>(mols.size());
}

double diversity_fp(const std::vector<Fingerprint>& fps) {
  if (fps.size() < 2)
    throw TooFew("diversity needs at least two molecules");
  // Average Tanimoto distance over the full pair matrix (self-pairs
  // contribute zero), i.e. 1 - mean pairwise similarity.
  double sum = 0.0;
  for (std::size_t i = 0; i < fps.size(); ++i)
    for (std::size_t j = i + 1; j < fps.size(); ++j)
      sum += tanimoto_distance(fps[i], fps[j]);
  const double n = static_cast<double>(fps.size());
  return 2.0 * sum / (n * n);
}

double diversity(const std::vector<MolGraph>& mols) {
  std::vector<Fingerprint> fps;
  fps.reserve(mols.size());
  for (const MolGraph& m : mols) fps.push_back(morgan_fingerprint(m));
  return diversity_fp(fps);
}

double chamfer_fp(const std::vector<Fingerprint>& a,
                  const std::vector<Fingerprint>& b) {
  if (a.empty() || b.empty())
    throw EmptyBatch("chamfer distance needs two non-empty sets");
  auto side = [](const std::vector<Fingerprint>& from,
                 const std::vector<Fingerprint>& to) {
    double total = 0.0;
    for (const Fingerprint& f : from) {
      double best = 2.0;
      for (const Fingerprint& g : to)
        best = std::min(best, tanimoto_distance(f, g));
      total += best;
    }
    return total / static_cast<double>(from.size());
  };
  return side(a, b) + side(b, a);
}

double chamfer(const std::vector<MolGraph>& a, const std::vector<MolGraph>& b) {
  std::vector<Fingerprint> fa, fb;
  fa.reserve(a.size());
  fb.reserve(b.size());
  for (const MolGraph& m : a) fa.push_back(morgan_fingerprint(m));
  for (const MolGraph& m : b) fb.push_back(morgan_fingerprint(m));
  return chamfer_fp(fa, fb);
}

double membership(const std::vector<MolGraph>& mols, const MembershipPattern& p) {
  if (mols.empty()) throw EmptyBatch("membership of an empty batch is undefined");
  int hits = 0;
  for (const MolGraph& m : mols)
    if (p.matches(m)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(mols.size());
}

MolWeightStats mol_weight_stats(const std::vector<MolGraph>& mols) {
  if (mols.empty()) throw EmptyBatch("weight stats of an empty batch are undefined");
  MolWeightStats s;
  s.min = s.max = molecular_weight(mols[0]);
  double total = 0.0;
  for (const MolGraph& m : mols) {
    const double w = molecular_weight(m);
    total += w;
    s.min = std::min(s.min, w);
    s.max = std::max(s.max, w);
  }
  s.mean = total / static_cast<double>(mols.size());
  return s;
}

}  // namespace molgram
