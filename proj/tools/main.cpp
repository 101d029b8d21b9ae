// Command-line front end: train a grammar on a molecule dataset, generate
// molecules from it, evaluate molecule sets, inspect rules and hypergraphs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "molgram/canon.hpp"
#include "molgram/datasets.hpp"
#include "molgram/errors.hpp"
#include "molgram/grammar.hpp"
#include "molgram/learn.hpp"
#include "molgram/metrics.hpp"
#include "molgram/molgraph.hpp"
#include "molgram/parallel.hpp"

namespace {

using Json = nlohmann::ordered_json;
using namespace molgram;

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << data;
  if (!out) throw Error("failed writing '" + path + "'");
}

// Same-string-for-isomorphic-molecules SMILES: atoms are reordered into
// canonical positions before writing.
std::string canonical_smiles(const MolGraph& g) {
  ColoredGraph cg(g.atom_count());
  for (int i = 0; i < g.atom_count(); ++i) {
    const Atom& a = g.atom(i);
    std::uint64_t c = static_cast<std::uint64_t>(a.element);
    c = (c << 6) | static_cast<std::uint64_t>(a.formal_charge + 16);
    c = (c << 1) | (a.aromatic ? 1u : 0u);
    c = (c << 5) | a.total_h;
    cg.set_color(i, c);
  }
  for (const Bond& b : g.bonds())
    cg.add_edge(b.a, b.b, static_cast<std::uint64_t>(b.order));
  const CanonResult canon = canonical_form(cg);

  std::vector<int> order(g.atom_count());
  for (int v = 0; v < g.atom_count(); ++v) order[canon.canon_pos[v]] = v;
  std::vector<Atom> atoms;
  std::vector<int> new_index(g.atom_count());
  for (int p = 0; p < g.atom_count(); ++p) {
    new_index[order[p]] = p;
    atoms.push_back(g.atom(order[p]));
  }
  std::vector<Bond> bonds;
  for (const Bond& b : g.bonds()) {
    Bond nb = b;
    nb.a = new_index[b.a];
    nb.b = new_index[b.b];
    if (nb.a > nb.b) std::swap(nb.a, nb.b);
    bonds.push_back(nb);
  }
  std::sort(bonds.begin(), bonds.end(), [](const Bond& x, const Bond& y) {
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });
  return write_smiles(MolGraph::from_parts(std::move(atoms), std::move(bonds)));
}

std::vector<MolGraph> parse_dataset(const std::vector<DatasetEntry>& entries) {
  std::vector<MolGraph> mols;
  mols.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    try {
      mols.push_back(parse_smiles(entries[i].smiles));
    } catch (const Error& e) {
      throw Error("molecule " + std::to_string(i + 1) +
                  (entries[i].name.empty() ? "" : " (" + entries[i].name + ")") +
                  ": " + e.what());
    }
  }
  return mols;
}

std::map<std::string, double> parse_metric_weights(const std::string& spec) {
  std::map<std::string, double> out;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    std::size_t comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    const std::string item = spec.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw Error("metric spec '" + item + "' is not name:weight");
    try {
      out[item.substr(0, colon)] = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error("metric weight in '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw Error("empty metric list");
  return out;
}

std::string default_pattern_for(const std::string& dataset_spec) {
  if (dataset_spec == "builtin:isocyanates") return "isocyanate";
  if (dataset_spec == "builtin:acrylates") return "acrylate";
  if (dataset_spec == "builtin:chain_extenders") return "chain_extender";
  return "";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

Json epoch_to_json(const EpochRecord& rec) {
  Json j;
  j["epoch"] = rec.epoch;
  Json metrics;
  for (const auto& [name, s] : rec.metrics) {
    Json m;
    m["mean"] = s.mean;
    m["min"] = s.min;
    m["max"] = s.max;
    metrics[name] = std::move(m);
  }
  j["metrics"] = std::move(metrics);
  j["grad_norm"] = rec.grad_norm;
  if (rec.wall_ms >= 0) j["wall_ms"] = rec.wall_ms;
  return j;
}

Json checkpoint_to_json(const PotentialNet& net) {
  Json j;
  j["version"] = 1;
  j["input_dim"] = net.input_dim();
  j["hidden"] = Json::array({net.hidden1(), net.hidden2()});
  j["params"] = net.params();
  return j;
}

int cmd_train(const std::string& dataset_spec, const std::string& metrics_spec,
              std::string membership_pattern,
              const std::vector<std::string>& external_specs, int epochs,
              int mc_samples, double lr, int gens, double alpha, int max_iter,
              std::uint64_t seed, int threads, const std::string& out_dir,
              bool timings) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.mc_samples = mc_samples;
  cfg.learning_rate = lr;
  cfg.eval_generations = gens;
  cfg.alpha = alpha;
  cfg.max_iterations = max_iter;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.measure_time = timings;
  cfg.lambda = parse_metric_weights(metrics_spec);
  for (const std::string& spec : external_specs) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw Error("--external expects name=command, got '" + spec + "'");
    cfg.external[spec.substr(0, eq)] = spec.substr(eq + 1);
  }
  if (membership_pattern.empty())
    membership_pattern = default_pattern_for(dataset_spec);
  cfg.membership_pattern = membership_pattern;
  if (cfg.lambda.count("membership") && cfg.membership_pattern.empty())
    throw Error("membership metric needs --membership-pattern for file datasets");

  const auto entries = load_dataset(dataset_spec);
  if (entries.empty()) throw EmptyDataset("dataset '" + dataset_spec + "' is empty");
  auto mols = parse_dataset(entries);

  std::cerr << "training on " << mols.size() << " molecules, " << cfg.epochs
            << " epochs, " << cfg.mc_samples << " episodes per step\n";
  const TrainResult result = train(std::move(mols), cfg);

  std::filesystem::create_directories(out_dir);
  const std::string grammar_path = out_dir + "/grammar.json";
  save_grammar(result.grammar, grammar_path);
  write_file(out_dir + "/checkpoint.json", checkpoint_to_json(result.net).dump(1) + "\n");
  std::string log_text;
  for (const EpochRecord& rec : result.log)
    log_text += epoch_to_json(rec).dump() + "\n";
  write_file(out_dir + "/train_log.jsonl", log_text);

  std::cout << "wrote " << grammar_path << " (" << result.grammar.rules.size()
            << " rules)\n";
  if (!result.log.empty()) {
    const EpochRecord& last = result.log.back();
    std::cout << "final epoch " << last.epoch << ":";
    for (const auto& [name, s] : last.metrics)
      std::cout << " " << name << "=" << fmt(s.mean);
    std::cout << " grad_norm=" << fmt(last.grad_norm) << "\n";
  }
  return 0;
}

int cmd_generate(const std::string& grammar_path, int count,
                 const std::string& out_path, double alpha, int max_iter,
                 std::uint64_t seed, int threads) {
  const Grammar g = load_grammar(grammar_path);
  long skipped = 0;
  const auto mols =
      generate_batch(g, count, alpha, max_iter, seed, threads, &skipped);
  std::string out;
  for (const MolGraph& m : mols) out += canonical_smiles(m) + "\n";
  if (out_path == "-") std::cout << out;
  else write_file(out_path, out);
  std::cerr << "generated " << mols.size() << " molecules, " << skipped
            << " discarded derivations\n";
  return 0;
}

int cmd_evaluate(const std::string& generated_spec, const std::string& train_spec,
                 const std::string& membership_pattern,
                 const std::vector<std::string>& external_specs,
                 const std::string& report_path, std::uint64_t seed) {
  const auto gen_entries = load_dataset(generated_spec);
  const auto train_entries = load_dataset(train_spec);
  if (gen_entries.empty()) throw EmptyBatch("no generated molecules to evaluate");
  if (train_entries.empty()) throw EmptyBatch("training set is empty");

  std::vector<bool> parse_ok;
  std::vector<MolGraph> gen;
  for (const DatasetEntry& e : gen_entries) {
    try {
      MolGraph m = parse_smiles(e.smiles);
      validate_valences(m);
      gen.push_back(std::move(m));
      parse_ok.push_back(true);
    } catch (const Error&) {
      parse_ok.push_back(false);
    }
  }
  const auto train_mols = parse_dataset(train_entries);
  std::set<std::string> train_keys;
  for (const MolGraph& m : train_mols) train_keys.insert(canonical_key(m));

  Json values;
  std::vector<std::pair<std::string, std::string>> table;
  auto put = [&](const std::string& name, double v) {
    values[name] = v;
    table.emplace_back(name, fmt(v));
  };

  put("validity", validity(parse_ok));
  if (!gen.empty()) {
    put("uniqueness", uniqueness(gen));
    put("novelty", novelty(gen, train_keys));
    if (gen.size() >= 2) put("diversity", diversity(gen));
    put("chamfer", chamfer(gen, train_mols));
    if (!membership_pattern.empty())
      put("membership",
          membership(gen, MembershipPattern::builtin(membership_pattern)));
    const MolWeightStats mw = mol_weight_stats(gen);
    put("mw_mean", mw.mean);
    put("mw_min", mw.min);
    put("mw_max", mw.max);
  }

  for (const std::string& spec : external_specs) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw Error("--external expects name=command, got '" + spec + "'");
    const std::string name = spec.substr(0, eq);
    std::vector<std::string> lines;
    for (const MolGraph& m : gen) lines.push_back(write_smiles(m));
    try {
      put(name, external_metric(lines, spec.substr(eq + 1)).mean);
    } catch (const Error& e) {
      std::cerr << "external metric '" << name << "' failed: " << e.what() << "\n";
      values[name] = "error";
      table.emplace_back(name, "error");
    }
  }

  std::size_t width = 0;
  for (const auto& [name, value] : table) width = std::max(width, name.size());
  for (const auto& [name, value] : table)
    std::cout << name << std::string(width - name.size() + 2, ' ') << value << "\n";

  Json report;
  Json prov;
  prov["generated"] = generated_spec;
  prov["train"] = train_spec;
  if (generated_spec.rfind("builtin:", 0) != 0)
    prov["generated_fnv64"] = fnv1a64(read_file(generated_spec));
  if (train_spec.rfind("builtin:", 0) != 0)
    prov["train_fnv64"] = fnv1a64(read_file(train_spec));
  prov["membership_pattern"] = membership_pattern;
  prov["seed"] = seed;
  report["provenance"] = std::move(prov);
  report["metrics"] = std::move(values);
  write_file(report_path, report.dump(1) + "\n");
  return 0;
}

int cmd_rules(const std::string& grammar_path, bool shared_only) {
  const Grammar g = load_grammar(grammar_path);
  if (g.rules.empty()) throw GrammarFormatError("grammar has no rules");
  const auto shared_vec = shared_rule_ids(g);
  const std::set<int> shared(shared_vec.begin(), shared_vec.end());
  for (std::size_t i = 0; i < g.rules.size(); ++i) {
    const bool is_shared = shared.count(static_cast<int>(i)) > 0;
    if (shared_only && !is_shared) continue;
    const ProductionRule& r = g.rules[i];
    std::cout << "#" << i << " count=" << r.count;
    if (r.is_initial) std::cout << " initial";
    if (is_shared) std::cout << " shared";
    std::cout << " " << render_rule(r) << "\n";
  }
  return 0;
}

int cmd_hgraph(const std::string& smiles) {
  const MolGraph g = parse_smiles(smiles);
  std::cout << dump(build_hypergraph(g));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Molecular graph grammar learning and generation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config");

  std::uint64_t seed = 20;
  int threads = 1;
  app.add_option("--seed", seed, "Global RNG seed")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Learn a grammar from a dataset");
  std::string dataset, metrics_spec = "diversity:1,membership:2";
  std::string membership_pattern, out_dir = ".";
  std::vector<std::string> externals;
  int epochs = 20, mc = 5, gens = 200, max_iter = 100;
  double lr = 0.01, alpha = 0.5;
  bool timings = false;
  train_cmd->add_option("--dataset", dataset,
                        "Dataset file or builtin:<isocyanates|acrylates|chain_extenders>")
      ->required();
  train_cmd->add_option("--metrics", metrics_spec, "name:weight,... reward mix")
      ->capture_default_str();
  train_cmd->add_option("--membership-pattern", membership_pattern,
                        "Membership pattern id (defaults from builtin datasets)");
  train_cmd->add_option("--external", externals, "External metric name=command");
  train_cmd->add_option("--epochs", epochs)->capture_default_str();
  train_cmd->add_option("--mc", mc, "Episodes per gradient step")
      ->capture_default_str();
  train_cmd->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--gens", gens, "Generations per episode evaluation")
      ->capture_default_str();
  train_cmd->add_option("--alpha", alpha)->capture_default_str();
  train_cmd->add_option("--max-iter", max_iter)->capture_default_str();
  train_cmd->add_option("--out", out_dir, "Output directory")
      ->capture_default_str();
  train_cmd->add_flag("--timings", timings, "Record wall_ms in the training log");

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Sample molecules from a grammar");
  std::string grammar_path, gen_out = "generated.smi";
  int count = 0;
  double gen_alpha = 0.5;
  int gen_max_iter = 100;
  gen_cmd->add_option("--grammar", grammar_path, "Grammar file")->required();
  gen_cmd->add_option("-n,--count", count, "Number of molecules")->required();
  gen_cmd->add_option("-o,--out", gen_out, "Output file ('-' for stdout)")
      ->capture_default_str();
  gen_cmd->add_option("--alpha", gen_alpha)->capture_default_str();
  gen_cmd->add_option("--max-iter", gen_max_iter)->capture_default_str();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a molecule set");
  std::string generated_spec, train_spec, eval_pattern, report_path = "report.json";
  std::vector<std::string> eval_externals;
  eval_cmd->add_option("--generated", generated_spec, "Generated set (file or builtin:)")
      ->required();
  eval_cmd->add_option("--train", train_spec, "Training set (file or builtin:)")
      ->required();
  eval_cmd->add_option("--membership", eval_pattern, "Membership pattern id");
  eval_cmd->add_option("--external", eval_externals, "External metric name=command");
  eval_cmd->add_option("--out", report_path, "Machine-readable report path")
      ->capture_default_str();

  // rules
  auto* rules_cmd = app.add_subcommand("rules", "Print production rules");
  std::string rules_grammar;
  bool shared_only = false;
  rules_cmd->add_option("--grammar", rules_grammar, "Grammar file")->required();
  rules_cmd->add_flag("--shared", shared_only,
                      "Only rules present in every molecule's derivation");

  // hgraph
  auto* hg_cmd = app.add_subcommand("hgraph", "Dump the hypergraph of a molecule");
  std::string smiles;
  hg_cmd->add_option("--smiles", smiles, "SMILES string")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd)
      return cmd_train(dataset, metrics_spec, membership_pattern, externals,
                       epochs, mc, lr, gens, alpha, max_iter, seed, threads,
                       out_dir, timings);
    if (*gen_cmd)
      return cmd_generate(grammar_path, count, gen_out, gen_alpha, gen_max_iter,
                          seed, threads);
    if (*eval_cmd)
      return cmd_evaluate(generated_spec, train_spec, eval_pattern,
                          eval_externals, report_path, seed);
    if (*rules_cmd) return cmd_rules(rules_grammar, shared_only);
    if (*hg_cmd) return cmd_hgraph(smiles);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
