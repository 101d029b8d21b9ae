#pragma once

#include <string>
#include <vector>

namespace molgram {

struct DatasetEntry {
  std::string name;
  std::string smiles;
};

// Embedded monomer datasets: "isocyanates" (11), "acrylates" (32),
// "chain_extenders" (11).
const std::vector<DatasetEntry>& builtin_dataset(const std::string& id);
std::vector<std::string> builtin_dataset_ids();

// One record per line: `[name TAB] SMILES`; '#' lines and blanks ignored.
std::vector<DatasetEntry> read_dataset_file(const std::string& path);

// Accepts either "builtin:<id>" or a file path.
std::vector<DatasetEntry> load_dataset(const std::string& spec);

}  // namespace molgram
