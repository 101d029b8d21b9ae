#include <algorithm>
#include <bit>
#include <map>
#include <vector>

#include "molgram/errors.hpp"
#include "molgram/molgraph.hpp"

namespace molgram {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t combine(std::uint64_t h, std::uint64_t k) {
  return mix64(h ^ (k + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
}

std::uint64_t initial_invariant(const MolGraph& g, int i) {
  const Atom& a = g.atom(i);
  std::uint64_t h = 0x6d6f7267616e00ull;
  h = combine(h, static_cast<std::uint64_t>(a.element));
  h = combine(h, static_cast<std::uint64_t>(g.neighbors(i).size()));
  h = combine(h, static_cast<std::uint64_t>(a.formal_charge + 16));
  h = combine(h, a.total_h);
  h = combine(h, a.aromatic ? 1 : 0);
  h = combine(h, g.atom_in_ring(i) ? 1 : 0);
  return h;
}

}  // namespace

Fingerprint morgan_fingerprint(const MolGraph& g, int radius, int nbits) {
  if (radius < 0) throw DimensionMismatch("fingerprint radius must be >= 0");
  if (nbits <= 0 || (nbits & (nbits - 1)) != 0)
    throw DimensionMismatch("fingerprint width must be a power of two");

  const int n = g.atom_count();
  std::vector<std::uint64_t> env(n), next(n);
  for (int i = 0; i < n; ++i) env[i] = initial_invariant(g, i);

  // Bond set covered by each atom's environment, grown alongside the hash.
  std::vector<std::vector<int>> cover(n), next_cover(n);

  std::vector<std::uint64_t> all;
  all.insert(all.end(), env.begin(), env.end());

  // Environments at radius >= 1 that span the same bond set are folded into
  // one bit (the minimum hash, so the result is order-independent).
  std::map<std::vector<int>, std::uint64_t> by_cover;

  for (int r = 1; r <= radius; ++r) {
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<std::uint64_t, std::uint64_t>> nbrs;
      nbrs.reserve(g.neighbors(i).size());
      std::vector<int> bonds = cover[i];
      for (const auto& [u, bi] : g.neighbors(i)) {
        nbrs.emplace_back(static_cast<std::uint64_t>(g.bond(bi).order), env[u]);
        bonds.push_back(bi);
        bonds.insert(bonds.end(), cover[u].begin(), cover[u].end());
      }
      std::sort(nbrs.begin(), nbrs.end());
      std::sort(bonds.begin(), bonds.end());
      bonds.erase(std::unique(bonds.begin(), bonds.end()), bonds.end());
      std::uint64_t h = combine(0x45434650ull, static_cast<std::uint64_t>(r));
      h = combine(h, env[i]);
      for (const auto& [bc, eh] : nbrs) h = combine(combine(h, bc), eh);
      next[i] = h;
      next_cover[i] = std::move(bonds);

      auto it = by_cover.find(next_cover[i]);
      if (it == by_cover.end()) by_cover.emplace(next_cover[i], h);
      else it->second = std::min(it->second, h);
    }
    env.swap(next);
    cover.swap(next_cover);
  }
  for (const auto& [bonds, h] : by_cover) all.push_back(h);

  Fingerprint fp;
  fp.radius = radius;
  fp.nbits = nbits;
  fp.words.assign(static_cast<std::size_t>(nbits) / 64, 0);
  for (std::uint64_t h : all) {
    const std::uint64_t bit = h & static_cast<std::uint64_t>(nbits - 1);
    fp.words[bit >> 6] |= 1ull << (bit & 63);
  }
  return fp;
}

double tanimoto_distance(const Fingerprint& a, const Fingerprint& b) {
  if (a.nbits != b.nbits || a.radius != b.radius)
    throw DimensionMismatch("fingerprints have different width or radius");
  int isect = 0, uni = 0;
  for (std::size_t i = 0; i < a.words.size(); ++i) {
    isect += std::popcount(a.words[i] & b.words[i]);
    uni += std::popcount(a.words[i] | b.words[i]);
  }
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(isect) / static_cast<double>(uni);
}

}  // namespace molgram
