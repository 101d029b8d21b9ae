#include <fstream>
#include <string>

#include "molgram/datasets.hpp"
#include "molgram/errors.hpp"

namespace molgram {

namespace {

const std::vector<DatasetEntry> kIsocyanates = {
    {"MDI-2", "O=C=NC1=CC=CC(CC2=CC=C(C=C2N=C=O)CC3=CC=C(C=C3)N=C=O)=C1"},
    {"MDI-3",
     "O=C=NC1=CC(CC2=C(C=C(C=C2)CC3=CC=C(C=C3N=C=O)CC4=CC=C(C=C4)N=C=O)N=C=O)"
     "=CC=C1"},
    {"MDI-4",
     "O=C=NC1=CC=C(C=C1)CC2=CC=C(C=C2N=C=O)CC3=C(C=C(C=C3)CC4=CC=C(C=C4N=C=O)"
     "CC5=CC=C(C=C5)N=C=O)N=C=O"},
    {"HDI-6", "O=C=NCCCCCCN=C=O"},
    {"HDI-12", "O=C=NCCCCCCCCCCCCN=C=O"},
    {"HDI-18", "O=C=NCCCCCCCCCCCCCCCCCCN=C=O"},
    {"HDI-24", "O=C=NCCCCCCCCCCCCCCCCCCCCCCCCN=C=O"},
    {"IPDI", "CC1(CC(CC(CN=C=O)(C1)C)N=C=O)C"},
    {"TDI", "CC1=C(C=C(C=C1)CN=C=O)N=C=O"},
    {"HMDI", "O=C=NC1CCC(CC2CCC(CC2)N=C=O)CC1"},
    {"LDI", "CCOC(C(N=C=O)CCCCN=C=O)=O"},
};

const std::vector<DatasetEntry> kAcrylates = {
    {"benzyl-acrylate", "C=CC(=O)OCC1=CC=CC=C1"},
    {"phenyl-acrylate", "C=CC(=O)OC1=CC=CC=C1"},
    {"phenyl-methacrylate", "CC(=C)C(=O)OC1=CC=CC=C1"},
    {"2-phenylethyl-acrylate", "C=CC(=O)OCCC1=CC=CC=C1"},
    {"n-octyl-methacrylate", "CCCCCCCCOC(=O)C(=C)C"},
    {"sec-butyl-acrylate", "CCC(C)OC(=O)C=C"},
    {"benzyl-methacrylate", "CC(=C)C(=O)OCC1=CC=CC=C1"},
    {"pentafluorophenyl-acrylate", "C=CC(=O)OC1=C(C(=C(C(=C1F)F)F)F)F"},
    {"iso-butyl-methacrylate", "CC(C)COC(=O)C(=C)C"},
    {"n-dodecyl-methacrylate", "CCCCCCCCCCCCOC(=O)C(=C)C"},
    {"sec-butyl-methacrylate", "CCC(C)OC(=O)C(=C)C"},
    {"n-propyl-methacrylate", "CCCOC(=O)C(=C)C"},
    {"3,3,5-trimethylcyclohexyl-methacrylate", "CC1CC(CC(C1)(C)C)OC(=O)C(=C)C"},
    {"iso-decyl-acrylate", "CC(C)CCCCCCCOC(=O)C=C"},
    {"n-propyl-acrylate", "CCCOC(=O)C=C"},
    {"2-methoxyethyl-acrylate", "COCCOC(=O)C=C"},
    {"2-phenoxyethyl-methacrylate", "CC(=C)C(=O)OCCOC1=CC=CC=C1"},
    {"n-hexyl-acrylate", "CCCCCCOC(=O)C=C"},
    {"2-n-butoxyethyl-methacrylate", "CCCCOCCOC(=O)C(=C)C"},
    {"methyl-methacrylate", "CC(=C)C(=O)OC"},
    {"methyl-acrylate", "COC(=O)C=C"},
    {"butyl-acrylate", "CCCCOC(=O)C=C"},
    {"2-ethoxyethyl-methacrylate", "CCOCCOC(=O)C(=C)C"},
    {"isobornyl-methacrylate", "CC(=C)C(=O)OC1CC2CCC1(C2(C)C)C"},
    {"2-ethylhexyl-methacrylate", "CCCCC(CC)COC(=O)C(=C)C"},
    {"neopentyl-glycol-propoxylate-diacrylate",
     "CC(C)(COCCCOC(=O)C=C)COCCCOC(=O)C=C"},
    {"1,6-hexanediol-diacrylate", "C=CC(=O)OCCCCCCOC(=O)C=C"},
    {"pentaerythritol-triacrylate", "C=CC(=O)OCC(CO)(COC(=O)C=C)COC(=O)C=C"},
    {"trimethylolpropane-propoxylate-triacrylate",
     "CCC(COCCCOC(=O)C=C)(COCCCOC(=O)C=C)COCCCOC(=O)C=C"},
    {"di(trimethylolpropane)-tetraacrylate",
     "CCC(COCC(CC)(COC(=O)C=C)COC(=O)C=C)(COC(=O)C=C)COC(=O)C=C"},
    {"dipentaerythritol-pentaacrylate",
     "C=CC(=O)OCC(CO)(COCC(COC(=O)C=C)(COC(=O)C=C)COC(=O)C=C)COC(=O)C=C"},
    {"dipentaerythritol-hexaacrylate",
     "C=CC(=O)OCC(COCC(COC(=O)C=C)(COC(=O)C=C)COC(=O)C=C)(COC(=O)C=C)COC(=O)"
     "C=C"},
};

const std::vector<DatasetEntry> kChainExtenders = {
    {"EG", "OCCO"},
    {"1,3-BD", "OC(C)CCO"},
    {"BD", "OCCCCO"},
    {"AE-H-AE", "OCCNC(=O)NCCCCCCNC(=O)NCCO"},
    {"AE-L-AE", "OCCN1C(=O)NC(C1(=O))CCCCNC(=O)NCCO"},
    {"D-E-D", "Oc1ccc(cc1)CCC(=O)OCCOC(=O)CCc1ccc(cc1)O"},
    {"LYS", "OC(=O)C(N)CCCCN"},
    {"L-Orn", "OC(=O)C(N)CCCN"},
    {"Pip", "N1CCNCC1"},
    {"AFD", "Nc1ccc(cc1)SSc2ccc(cc2)N"},
    {"MDA", "Nc1ccc(cc1)Cc2ccc(cc2)N"},
};

}  // namespace

const std::vector<DatasetEntry>& builtin_dataset(const std::string& id) {
  if (id == "isocyanates") return kIsocyanates;
  if (id == "acrylates") return kAcrylates;
  if (id == "chain_extenders") return kChainExtenders;
  throw Error("unknown builtin dataset '" + id +
              "' (available: isocyanates, acrylates, chain_extenders)");
}

std::vector<std::string> builtin_dataset_ids() {
  return {"isocyanates", "acrylates", "chain_extenders"};
}

std::vector<DatasetEntry> read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file '" + path + "'");
  std::vector<DatasetEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    while (!trimmed.empty() && (trimmed.front() == ' ' || trimmed.front() == '\t'))
      trimmed.erase(trimmed.begin());
    if (trimmed.empty() || trimmed[0] == '#') continue;
    DatasetEntry e;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      e.smiles = trimmed;
    } else {
      e.name = line.substr(0, tab);
      e.smiles = line.substr(tab + 1);
      while (!e.smiles.empty() && (e.smiles.front() == ' ' || e.smiles.front() == '\t'))
        e.smiles.erase(e.smiles.begin());
    }
    while (!e.smiles.empty() && (e.smiles.back() == ' ' || e.smiles.back() == '\t'))
      e.smiles.pop_back();
    if (e.smiles.empty())
      throw Error("dataset line " + std::to_string(lineno) + " has no SMILES");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<DatasetEntry> load_dataset(const std::string& spec) {
  if (spec.rfind("builtin:", 0) == 0) return builtin_dataset(spec.substr(8));
  return read_dataset_file(spec);
}

}  // namespace molgram
