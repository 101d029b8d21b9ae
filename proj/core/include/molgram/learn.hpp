#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "molgram/grammar.hpp"
#include "molgram/hypergraph.hpp"

namespace molgram {

inline constexpr int kFeatureDim = 64;

struct EdgeFeatures {
  std::vector<double> v;  // length kFeatureDim
};

// Deterministic hand-crafted hyperedge features: endpoint-aggregated atom
// features (element one-hot with a non-terminal slot, degree, aromaticity,
// ring membership), edge features (bond-order one-hot, ring flag, arity,
// ring-size bucket) and a radius-2 neighborhood element-count summary,
// zero-padded to kFeatureDim.
EdgeFeatures featurize(const MolHypergraph& h, int edge_id);

// Two hidden layers (rectifier) and a scalar head. Parameters live in one
// flat vector so the optimizer can treat them uniformly.
class PotentialNet {
 public:
  PotentialNet(int input_dim, int hidden1, int hidden2);
  static PotentialNet initialized(int input_dim, int hidden1, int hidden2,
                                  std::uint64_t seed);

  int input_dim() const { return in_; }
  int hidden1() const { return h1_; }
  int hidden2() const { return h2_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  double forward(const std::vector<double>& x) const;
  // Accumulates upstream * dF/dtheta at input x into grad.
  void accumulate_gradient(const std::vector<double>& x, double upstream,
                           std::vector<double>& grad) const;

 private:
  int in_, h1_, h2_;
  std::vector<double> params_;

  // Parameter layout offsets.
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return static_cast<std::size_t>(h1_) * in_; }
  std::size_t w2() const { return b1() + h1_; }
  std::size_t b2() const { return w2() + static_cast<std::size_t>(h2_) * h1_; }
  std::size_t w3() const { return b2() + h2_; }
  std::size_t b3() const { return w3() + h2_; }
};

// phi = sigmoid(-F(f)): heavier edges are selected less often.
double edge_probability(const PotentialNet& net, const EdgeFeatures& f);

struct TrajectoryStep {
  int iteration = 0;
  int molecule = 0;
  int edge = -1;
  std::vector<double> features;
  double potential = 0.0;  // F value; phi = sigmoid(-F)
  double phi = 0.5;
  bool selected = false;
  bool forced = false;  // excluded from log_prob
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double log_prob = 0.0;
};

// Recomputes sum(X log phi + (1-X) log(1-phi)) over non-forced steps.
double trajectory_log_prob(const Trajectory& t);

struct TrainingSet {
  std::vector<MolGraph> molecules;
  std::vector<MolHypergraph> hypergraphs;
  std::vector<std::string> keys;

  static TrainingSet from_molecules(std::vector<MolGraph> mols);
};

// One whole-dataset grammar construction episode: every remaining
// hyperedge of every molecule draws X ~ Bernoulli(phi) per iteration,
// selected components become rules and contract, until each molecule is a
// single node. Returns the deduplicated grammar with provenance plus the
// full trajectory.
std::pair<Grammar, Trajectory> sample_episode(const PotentialNet& net,
                                              const TrainingSet& data,
                                              std::uint64_t seed);

struct TrainConfig {
  int mc_samples = 5;
  int epochs = 20;
  double learning_rate = 0.01;
  std::map<std::string, double> lambda = {{"diversity", 1.0},
                                          {"membership", 2.0}};
  int eval_generations = 200;
  std::uint64_t seed = 20;
  int threads = 1;
  double alpha = 0.5;
  int max_iterations = 100;
  std::string membership_pattern;  // required when lambda names membership
  std::map<std::string, std::string> external;  // metric name -> command
  int external_timeout_seconds = 300;
  bool measure_time = false;
};

// Evaluates the reward metrics for one episode grammar (seed drives the
// evaluation generations). Throwing aborts the episode (MetricFailure).
using MetricEvaluator =
    std::function<std::map<std::string, double>(const Grammar&, std::uint64_t)>;

class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t size, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(std::vector<double>& params, const std::vector<double>& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

struct EpisodeOutcome {
  Grammar grammar;
  Trajectory trajectory;
  std::map<std::string, double> metrics;  // raw values
  double weighted_raw = 0.0;              // sum lambda_i * raw_i
};

struct StepReport {
  std::vector<EpisodeOutcome> episodes;
  std::vector<std::map<std::string, double>> normalized;  // per episode
  double grad_norm = 0.0;
  int dropped_episodes = 0;
};

// One REINFORCE ascent step: N fresh episodes, per-metric zero-mean reward
// normalization across the batch, score-function gradient, Adam update.
StepReport reinforce_step(PotentialNet& net, AdamOptimizer& opt,
                          const TrainingSet& data,
                          const std::map<std::string, double>& lambda,
                          const MetricEvaluator& evaluate, int n_episodes,
                          std::uint64_t seed, int threads);

struct MetricStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  std::map<std::string, MetricStats> metrics;
  double grad_norm = 0.0;
  long wall_ms = -1;  // -1 when timing is off
};

struct TrainResult {
  Grammar grammar;  // best episode of the final epoch by raw weighted score
  PotentialNet net;
  std::vector<EpochRecord> log;
};

using EpisodeCallback = std::function<void(int epoch, const EpisodeOutcome&)>;

// Builds the default evaluator for cfg (generation + builtin/external
// metrics against the training set).
MetricEvaluator make_metric_evaluator(const TrainingSet& data,
                                      const TrainConfig& cfg);

TrainResult train(std::vector<MolGraph> molecules, const TrainConfig& cfg,
                  const EpisodeCallback& on_episode = nullptr);

// Generation helper shared by training and the CLI: retries budget
// overruns and dead ends with derived seeds until `count` molecules
// succeed; *skipped counts the failed attempts.
std::vector<MolGraph> generate_batch(const Grammar& g, int count, double alpha,
                                     int max_iterations, std::uint64_t seed,
                                     int threads, long* skipped = nullptr);

}  // namespace molgram
