#include <benchmark/benchmark.h>

#include "molgram/datasets.hpp"
#include "molgram/grammar.hpp"
#include "molgram/learn.hpp"
#include "molgram/metrics.hpp"
#include "molgram/molgraph.hpp"

namespace {

using namespace molgram;

std::vector<MolGraph> dataset_mols(const std::string& id) {
  std::vector<MolGraph> mols;
  for (const DatasetEntry& e : builtin_dataset(id))
    mols.push_back(parse_smiles(e.smiles));
  return mols;
}

void BM_ParseSmiles(benchmark::State& state) {
  const auto& entries = builtin_dataset("acrylates");
  for (auto _ : state)
    for (const DatasetEntry& e : entries)
      benchmark::DoNotOptimize(parse_smiles(e.smiles));
}
BENCHMARK(BM_ParseSmiles);

void BM_CanonicalKey(benchmark::State& state) {
  const auto mols = dataset_mols("isocyanates");
  for (auto _ : state)
    for (const MolGraph& m : mols) benchmark::DoNotOptimize(canonical_key(m));
}
BENCHMARK(BM_CanonicalKey);

void BM_MorganFingerprint(benchmark::State& state) {
  const auto mols = dataset_mols("acrylates");
  for (auto _ : state)
    for (const MolGraph& m : mols)
      benchmark::DoNotOptimize(morgan_fingerprint(m));
}
BENCHMARK(BM_MorganFingerprint);

void BM_TrainSetDiversity(benchmark::State& state) {
  const auto mols = dataset_mols("acrylates");
  for (auto _ : state) benchmark::DoNotOptimize(diversity(mols));
}
BENCHMARK(BM_TrainSetDiversity);

void BM_SampleEpisode(benchmark::State& state) {
  const auto data = TrainingSet::from_molecules(dataset_mols("isocyanates"));
  const auto net = PotentialNet::initialized(kFeatureDim, 300, 128, 7);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_episode(net, data, ++seed));
}
BENCHMARK(BM_SampleEpisode);

void BM_Generate(benchmark::State& state) {
  const auto data = TrainingSet::from_molecules(dataset_mols("isocyanates"));
  const auto net = PotentialNet::initialized(kFeatureDim, 300, 128, 7);
  const auto [grammar, traj] = sample_episode(net, data, 11);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        generate_batch(grammar, 10, 0.5, 100, ++seed, 1));
}
BENCHMARK(BM_Generate);

}  // namespace

BENCHMARK_MAIN();
