#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <memory>
#include <optional>
#include <set>

#include "molgram/errors.hpp"
#include "molgram/learn.hpp"
#include "molgram/metrics.hpp"
#include "molgram/parallel.hpp"
#include "molgram/rng.hpp"

namespace molgram {

namespace {

double softplus(double x) {
  // log(1 + e^x), stable for large |x|.
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

int element_slot(Element e) { return static_cast<int>(e); }

}  // namespace

EdgeFeatures featurize(const MolHypergraph& h, int edge_id) {
  if (!h.has_edge(edge_id)) throw UnknownEdge("featurize: no such hyperedge");
  const Hyperedge& e = h.edge(edge_id);

  EdgeFeatures f;
  f.v.assign(kFeatureDim, 0.0);

  // Ring membership per node (member of any ring hyperedge).
  std::set<int> in_ring;
  for (int other : h.edge_ids())
    if (h.edge(other).is_ring)
      for (int n : h.edge(other).nodes) in_ring.insert(n);

  // Endpoint-aggregated node features (mean over the edge's nodes):
  // [0..11] element one-hot, [12] non-terminal, [13] degree, [14] aromatic,
  // [15] ring membership.
  const double inv = 1.0 / static_cast<double>(e.nodes.size());
  for (int n : e.nodes) {
    const HGNode& node = h.node(n);
    if (node.kind == NodeKind::NonTerminal) {
      f.v[12] += inv;
    } else {
      f.v[element_slot(node.atom.element)] += inv;
      if (node.atom.aromatic) f.v[14] += inv;
    }
    f.v[13] += inv * std::min<std::size_t>(h.incident_edges(n).size(), 8) / 4.0;
    if (in_ring.count(n)) f.v[15] += inv;
  }

  // Edge features: [16..19] bond order one-hot, [20] ring flag, [21] arity,
  // [22..27] ring size bucket (3,4,5,6,7,8+).
  if (!e.is_ring) {
    f.v[16 + static_cast<int>(e.order) - 1] = 1.0;
  } else {
    f.v[20] = 1.0;
    const int size = e.ring.arity();
    f.v[22 + std::min(size, 8) - 3] = 1.0;
  }
  f.v[21] = static_cast<double>(e.nodes.size()) / 6.0;

  // Radius-2 neighborhood element counts: nodes of the edge, then nodes
  // sharing an edge with those, then one hop further.
  std::set<int> frontier(e.nodes.begin(), e.nodes.end());
  std::set<int> seen = frontier;
  for (int hop = 0; hop < 2; ++hop) {
    std::set<int> next;
    for (int other : h.edge_ids()) {
      const auto& nodes = h.edge(other).nodes;
      bool touches = false;
      for (int n : nodes)
        if (frontier.count(n)) touches = true;
      if (!touches) continue;
      for (int n : nodes)
        if (!seen.count(n)) next.insert(n);
    }
    for (int n : next) seen.insert(n);
    frontier = std::move(next);
  }
  for (int n : seen) {
    const HGNode& node = h.node(n);
    const int slot = node.kind == NodeKind::NonTerminal
                         ? 40
                         : 28 + element_slot(node.atom.element);
    f.v[slot] = std::min(1.0, f.v[slot] + 0.125);
  }
  return f;
}

PotentialNet::PotentialNet(int input_dim, int hidden1, int hidden2)
    : in_(input_dim), h1_(hidden1), h2_(hidden2) {
  params_.assign(b3() + 1, 0.0);
}

PotentialNet PotentialNet::initialized(int input_dim, int hidden1, int hidden2,
                                       std::uint64_t seed) {
  PotentialNet net(input_dim, hidden1, hidden2);
  Rng rng(seed);
  auto fill = [&](std::size_t offset, std::size_t count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i)
      net.params_[offset + i] = (2.0 * rng.uniform() - 1.0) * bound;
  };
  fill(net.w1(), static_cast<std::size_t>(hidden1) * input_dim, input_dim);
  fill(net.w2(), static_cast<std::size_t>(hidden2) * hidden1, hidden1);
  fill(net.w3(), hidden2, hidden2);
  // Positive output-bias prior on the edge weight: selection starts sparse
  // (phi ~ 0.05), so early iterations contract small components and the
  // spanning-order semantics of the edge weights are meaningful from the
  // first epoch. A zero prior (phi = 0.5) collapses most molecules within
  // one or two iterations before training can shape anything, and the
  // saturated phi -> 1 region is absorbing for the score-function gradient.
  net.params_[net.b3()] = 3.0;
  return net;
}

double PotentialNet::forward(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != in_)
    throw DimensionMismatch("feature vector size does not match the net");
  std::vector<double> z1(h1_), z2(h2_);
  for (int i = 0; i < h1_; ++i) {
    double acc = params_[b1() + i];
    const double* row = &params_[w1() + static_cast<std::size_t>(i) * in_];
    for (int j = 0; j < in_; ++j) acc += row[j] * x[j];
    z1[i] = acc > 0 ? acc : 0.0;
  }
  for (int i = 0; i < h2_; ++i) {
    double acc = params_[b2() + i];
    const double* row = &params_[w2() + static_cast<std::size_t>(i) * h1_];
    for (int j = 0; j < h1_; ++j) acc += row[j] * z1[j];
    z2[i] = acc > 0 ? acc : 0.0;
  }
  double out = params_[b3()];
  for (int i = 0; i < h2_; ++i) out += params_[w3() + i] * z2[i];
  return out;
}

void PotentialNet::accumulate_gradient(const std::vector<double>& x,
                                       double upstream,
                                       std::vector<double>& grad) const {
  if (static_cast<int>(x.size()) != in_)
    throw DimensionMismatch("feature vector size does not match the net");
  if (grad.size() != params_.size())
    throw DimensionMismatch("gradient buffer size does not match the net");

  std::vector<double> a1(h1_), z1(h1_), a2(h2_), z2(h2_);
  for (int i = 0; i < h1_; ++i) {
    double acc = params_[b1() + i];
    const double* row = &params_[w1() + static_cast<std::size_t>(i) * in_];
    for (int j = 0; j < in_; ++j) acc += row[j] * x[j];
    a1[i] = acc;
    z1[i] = acc > 0 ? acc : 0.0;
  }
  for (int i = 0; i < h2_; ++i) {
    double acc = params_[b2() + i];
    const double* row = &params_[w2() + static_cast<std::size_t>(i) * h1_];
    for (int j = 0; j < h1_; ++j) acc += row[j] * z1[j];
    a2[i] = acc;
    z2[i] = acc > 0 ? acc : 0.0;
  }

  grad[b3()] += upstream;
  std::vector<double> d2(h2_);
  for (int i = 0; i < h2_; ++i) {
    grad[w3() + i] += upstream * z2[i];
    d2[i] = a2[i] > 0 ? upstream * params_[w3() + i] : 0.0;
  }
  std::vector<double> d1(h1_, 0.0);
  for (int i = 0; i < h2_; ++i) {
    if (d2[i] == 0.0) continue;
    grad[b2() + i] += d2[i];
    double* row = &grad[w2() + static_cast<std::size_t>(i) * h1_];
    const double* wrow = &params_[w2() + static_cast<std::size_t>(i) * h1_];
    for (int j = 0; j < h1_; ++j) {
      row[j] += d2[i] * z1[j];
      d1[j] += d2[i] * wrow[j];
    }
  }
  for (int i = 0; i < h1_; ++i) {
    if (a1[i] <= 0 || d1[i] == 0.0) continue;
    grad[b1() + i] += d1[i];
    double* row = &grad[w1() + static_cast<std::size_t>(i) * in_];
    for (int j = 0; j < in_; ++j) row[j] += d1[i] * x[j];
  }
}

double edge_probability(const PotentialNet& net, const EdgeFeatures& f) {
  const double F = net.forward(f.v);
  // sigmoid(-F), computed stably.
  if (F >= 0) {
    const double e = std::exp(-F);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(F));
}

double trajectory_log_prob(const Trajectory& t) {
  double lp = 0.0;
  for (const TrajectoryStep& s : t.steps) {
    if (s.forced) continue;
    // log phi = -softplus(F), log(1-phi) = -softplus(-F).
    lp += s.selected ? -softplus(s.potential) : -softplus(-s.potential);
  }
  return lp;
}

TrainingSet TrainingSet::from_molecules(std::vector<MolGraph> mols) {
  TrainingSet data;
  data.molecules = std::move(mols);
  for (std::size_t i = 0; i < data.molecules.size(); ++i) {
    data.hypergraphs.push_back(
        build_hypergraph(data.molecules[i], static_cast<int>(i)));
    data.keys.push_back(canonical_key(data.molecules[i]));
  }
  return data;
}

std::pair<Grammar, Trajectory> sample_episode(const PotentialNet& net,
                                              const TrainingSet& data,
                                              std::uint64_t seed) {
  if (data.hypergraphs.empty()) throw EmptyDataset("episode over empty dataset");
  Rng rng(seed);
  GrammarBuilder builder;
  Trajectory traj;

  std::vector<MolHypergraph> state = data.hypergraphs;
  std::vector<bool> done(state.size(), false);
  for (const std::string& key : data.keys) builder.start_molecule(key);

  long guard = 16;
  for (const MolHypergraph& h : state) guard += h.edge_count() + 2;

  for (int t = 0;; ++t) {
    bool all_done = true;
    for (bool d : done) all_done = all_done && d;
    if (all_done) break;
    if (t > guard)
      throw std::logic_error("episode failed to terminate within its bound");

    for (std::size_t m = 0; m < state.size(); ++m) {
      if (done[m]) continue;
      MolHypergraph& h = state[m];

      if (h.node_count() == 1 && h.edge_count() == 0) {
        // Single-atom molecule: its whole graph becomes one initial rule.
        const std::set<int> comp{h.node_ids()[0]};
        RuleInstance inst = make_rule(h, comp, {});
        int nt = -1;
        h = contract(h, comp, {}, &nt);
        builder.record(inst, static_cast<int>(m), nt);
        done[m] = true;
        continue;
      }

      const std::vector<int> edges = h.edge_ids();
      std::vector<EdgeFeatures> feats;
      std::vector<double> potential(edges.size()), phi(edges.size());
      feats.reserve(edges.size());
      for (std::size_t i = 0; i < edges.size(); ++i) {
        feats.push_back(featurize(h, edges[i]));
        potential[i] = net.forward(feats[i].v);
        phi[i] = potential[i] >= 0
                     ? std::exp(-potential[i]) / (1.0 + std::exp(-potential[i]))
                     : 1.0 / (1.0 + std::exp(potential[i]));
      }

      // Draw the iteration; empty selections are resampled a few times and
      // then the highest-probability edge is forced (excluded from the
      // likelihood so the estimator only sees genuine Bernoulli draws).
      std::vector<char> selected(edges.size(), 0);
      bool any = false;
      for (int attempt = 0; attempt < 10 && !any; ++attempt) {
        for (std::size_t i = 0; i < edges.size(); ++i) {
          selected[i] = rng.bernoulli(phi[i]) ? 1 : 0;
          any = any || selected[i];
        }
        if (!any && attempt + 1 < 10) std::fill(selected.begin(), selected.end(), 0);
      }
      if (any) {
        for (std::size_t i = 0; i < edges.size(); ++i) {
          TrajectoryStep s;
          s.iteration = t;
          s.molecule = static_cast<int>(m);
          s.edge = edges[i];
          s.features = feats[i].v;
          s.potential = potential[i];
          s.phi = phi[i];
          s.selected = selected[i] != 0;
          s.forced = false;
          traj.steps.push_back(std::move(s));
        }
      } else {
        std::size_t best = 0;
        for (std::size_t i = 1; i < edges.size(); ++i)
          if (phi[i] > phi[best]) best = i;
        selected[best] = 1;
        TrajectoryStep s;
        s.iteration = t;
        s.molecule = static_cast<int>(m);
        s.edge = edges[best];
        s.features = feats[best].v;
        s.potential = potential[best];
        s.phi = phi[best];
        s.selected = true;
        s.forced = true;
        traj.steps.push_back(std::move(s));
      }

      // Connected components of the selected edges.
      std::map<int, int> comp_of;  // node -> component root
      auto find = [&](int x) {
        while (comp_of[x] != x) x = comp_of[x] = comp_of[comp_of[x]];
        return x;
      };
      for (std::size_t i = 0; i < edges.size(); ++i) {
        if (!selected[i]) continue;
        const auto& nodes = h.edge(edges[i]).nodes;
        for (int n : nodes)
          if (!comp_of.count(n)) comp_of[n] = n;
        for (std::size_t j = 1; j < nodes.size(); ++j)
          comp_of[find(nodes[0])] = find(nodes[j]);
      }
      std::map<int, std::set<int>> components;  // root -> nodes
      for (const auto& [n, r] : comp_of) components[find(n)].insert(n);

      for (const auto& [root, comp] : components) {
        std::set<int> straddling;
        for (int e : h.edge_ids()) {
          const auto& nodes = h.edge(e).nodes;
          int inside = 0;
          for (int n : nodes) inside += comp.count(n) ? 1 : 0;
          if (inside > 0 && inside < static_cast<int>(nodes.size()))
            straddling.insert(e);
        }
        RuleInstance inst = make_rule(h, comp, straddling);
        int nt = -1;
        h = contract(h, comp, straddling, &nt);
        builder.record(inst, static_cast<int>(m), nt);
      }
      if (h.node_count() == 1 &&
          h.node(h.node_ids()[0]).kind == NodeKind::NonTerminal)
        done[m] = true;
    }
  }

  traj.log_prob = trajectory_log_prob(traj);
  return {builder.finish(), std::move(traj)};
}

AdamOptimizer::AdamOptimizer(std::size_t size, double lr, double beta1,
                             double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0),
      v_(size, 0.0) {}

void AdamOptimizer::step(std::vector<double>& params,
                         const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw DimensionMismatch("optimizer state does not match parameter count");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

StepReport reinforce_step(PotentialNet& net, AdamOptimizer& opt,
                          const TrainingSet& data,
                          const std::map<std::string, double>& lambda,
                          const MetricEvaluator& evaluate, int n_episodes,
                          std::uint64_t seed, int threads) {
  StepReport report;
  std::vector<EpisodeOutcome> slots(n_episodes);
  std::vector<char> ok(n_episodes, 0);

  parallel_for(n_episodes, threads, [&](int n) {
    EpisodeOutcome& out = slots[n];
    auto [grammar, trajectory] =
        sample_episode(net, data, Rng::mix(seed, 0xE7150DEull, n));
    out.grammar = std::move(grammar);
    out.trajectory = std::move(trajectory);
    try {
      out.metrics = evaluate(out.grammar, Rng::mix(seed, 0x3774Cull, n));
    } catch (const Error& e) {
      std::cerr << "warning: episode " << n << " dropped: " << e.what() << "\n";
      return;
    }
    for (const auto& [name, weight] : lambda) {
      auto it = out.metrics.find(name);
      if (it == out.metrics.end())
        throw MetricFailure("evaluator did not produce metric '" + name + "'");
      out.weighted_raw += weight * it->second;
    }
    ok[n] = 1;
  });

  for (int n = 0; n < n_episodes; ++n) {
    if (ok[n]) report.episodes.push_back(std::move(slots[n]));
    else ++report.dropped_episodes;
  }
  if (report.episodes.empty())
    throw MetricFailure("every episode in the batch failed evaluation");

  // Zero-mean reward normalization per metric across the batch.
  const std::size_t n_eff = report.episodes.size();
  report.normalized.resize(n_eff);
  for (const auto& [name, weight] : lambda) {
    double mean = 0.0;
    for (const EpisodeOutcome& e : report.episodes) mean += e.metrics.at(name);
    mean /= static_cast<double>(n_eff);
    for (std::size_t n = 0; n < n_eff; ++n)
      report.normalized[n][name] = report.episodes[n].metrics.at(name) - mean;
  }

  // Score-function gradient of the maximization objective.
  std::vector<double> ascent(net.params().size(), 0.0);
  for (std::size_t n = 0; n < n_eff; ++n) {
    double reward = 0.0;
    for (const auto& [name, weight] : lambda)
      reward += weight * report.normalized[n].at(name);
    if (reward == 0.0) continue;
    for (const TrajectoryStep& s : report.episodes[n].trajectory.steps) {
      if (s.forced) continue;
      // d log p / dF = phi - X.
      const double upstream = reward * (s.phi - (s.selected ? 1.0 : 0.0)) /
                              static_cast<double>(n_eff);
      net.accumulate_gradient(s.features, upstream, ascent);
    }
  }
  double norm = 0.0;
  for (double g : ascent) norm += g * g;
  report.grad_norm = std::sqrt(norm);

  // Gradient ascent implemented as descent on the negated estimator.
  std::vector<double> descent(ascent.size());
  for (std::size_t i = 0; i < ascent.size(); ++i) descent[i] = -ascent[i];
  opt.step(net.params(), descent);
  return report;
}

std::vector<MolGraph> generate_batch(const Grammar& g, int count, double alpha,
                                     int max_iterations, std::uint64_t seed,
                                     int threads, long* skipped) {
  std::vector<std::optional<MolGraph>> slots(std::max(count, 0));
  std::vector<long> skips(std::max(count, 0), 0);
  parallel_for(count, threads, [&](int i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 50)
        throw MetricFailure("generation failed 50 times in a row");
      GenerationConfig cfg;
      cfg.alpha = alpha;
      cfg.max_iterations = max_iterations;
      cfg.seed = Rng::mix(seed, static_cast<std::uint64_t>(i), attempt);
      try {
        slots[i] = generate(g, cfg);
        return;
      } catch (const BudgetExceeded&) {
        ++skips[i];
      } catch (const DeadEnd&) {
        ++skips[i];
      }
    }
  });
  std::vector<MolGraph> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  if (skipped) {
    *skipped = 0;
    for (long s : skips) *skipped += s;
  }
  return out;
}

MetricEvaluator make_metric_evaluator(const TrainingSet& data,
                                      const TrainConfig& cfg) {
  // Pre-compute training-set views shared by the metrics.
  auto train_fps = std::make_shared<std::vector<Fingerprint>>();
  for (const MolGraph& m : data.molecules)
    train_fps->push_back(morgan_fingerprint(m));
  auto train_keys = std::make_shared<std::set<std::string>>();
  for (const std::string& k : data.keys) train_keys->insert(k);

  const MembershipPattern* pattern = nullptr;
  if (cfg.lambda.count("membership")) {
    if (cfg.membership_pattern.empty())
      throw MetricFailure(
          "membership metric requested without a membership pattern");
    pattern = &MembershipPattern::builtin(cfg.membership_pattern);
  }
  for (const auto& [name, weight] : cfg.lambda) {
    static const std::set<std::string> builtin = {
        "diversity", "membership", "chamfer", "uniqueness", "novelty",
        "validity"};
    if (!builtin.count(name) && !cfg.external.count(name))
      throw MetricFailure("unknown reward metric '" + name + "'");
  }

  const TrainConfig config = cfg;
  return [&data, config, train_fps, train_keys, pattern](
             const Grammar& g, std::uint64_t seed) {
    std::vector<MolGraph> mols =
        generate_batch(g, config.eval_generations, config.alpha,
                       config.max_iterations, seed, 1);
    std::vector<Fingerprint> fps;
    fps.reserve(mols.size());
    for (const MolGraph& m : mols) fps.push_back(morgan_fingerprint(m));

    std::map<std::string, double> out;
    for (const auto& [name, weight] : config.lambda) {
      if (name == "diversity") {
        out[name] = diversity_fp(fps);
      } else if (name == "membership") {
        out[name] = membership(mols, *pattern);
      } else if (name == "chamfer") {
        out[name] = chamfer_fp(fps, *train_fps);
      } else if (name == "uniqueness") {
        out[name] = uniqueness(mols);
      } else if (name == "novelty") {
        out[name] = novelty(mols, *train_keys);
      } else if (name == "validity") {
        double valid = 0.0;
        for (const MolGraph& m : mols) {
          validate_valences(m);
          valid += 1.0;
        }
        out[name] = valid / static_cast<double>(mols.size());
      } else {
        std::vector<std::string> lines;
        lines.reserve(mols.size());
        for (const MolGraph& m : mols) lines.push_back(write_smiles(m));
        out[name] = external_metric(lines, config.external.at(name),
                                    config.external_timeout_seconds)
                        .mean;
      }
    }
    return out;
  };
}

TrainResult train(std::vector<MolGraph> molecules, const TrainConfig& cfg,
                  const EpisodeCallback& on_episode) {
  if (molecules.empty()) throw EmptyDataset("training set is empty");
  if (cfg.mc_samples < 1) throw MetricFailure("mc_samples must be >= 1");
  if (cfg.eval_generations < 2)
    throw MetricFailure("eval_generations must be >= 2 (diversity needs pairs)");

  TrainingSet data = TrainingSet::from_molecules(std::move(molecules));
  const MetricEvaluator evaluate = make_metric_evaluator(data, cfg);

  PotentialNet net =
      PotentialNet::initialized(kFeatureDim, 300, 128, Rng::mix(cfg.seed, 0x171ull));
  AdamOptimizer opt(net.params().size(), cfg.learning_rate);

  TrainResult result{Grammar{}, net, {}};

  if (cfg.epochs == 0) {
    // Untrained baseline: a single episode from the initial parameters.
    auto [grammar, traj] =
        sample_episode(net, data, Rng::mix(cfg.seed, 0xE7150DEull, 0));
    if (on_episode) {
      EpisodeOutcome out;
      out.grammar = grammar;
      out.trajectory = std::move(traj);
      on_episode(0, out);
    }
    result.grammar = std::move(grammar);
    result.net = std::move(net);
    return result;
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    StepReport report =
        reinforce_step(net, opt, data, cfg.lambda, evaluate, cfg.mc_samples,
                       Rng::mix(cfg.seed, 0xE90Cull, epoch), cfg.threads);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.grad_norm = report.grad_norm;
    for (const auto& [name, weight] : cfg.lambda) {
      MetricStats s;
      s.min = s.max = report.episodes[0].metrics.at(name);
      for (const EpisodeOutcome& e : report.episodes) {
        const double v = e.metrics.at(name);
        s.mean += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
      }
      s.mean /= static_cast<double>(report.episodes.size());
      rec.metrics[name] = s;
    }
    if (cfg.measure_time)
      rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - started)
                        .count();
    result.log.push_back(rec);

    if (on_episode)
      for (const EpisodeOutcome& e : report.episodes) on_episode(epoch, e);

    if (epoch + 1 == cfg.epochs) {
      std::size_t best = 0;
      for (std::size_t n = 1; n < report.episodes.size(); ++n)
        if (report.episodes[n].weighted_raw >
            report.episodes[best].weighted_raw)
          best = n;
      result.grammar = report.episodes[best].grammar;
    }
  }
  result.net = std::move(net);
  return result;
}

}  // namespace molgram
