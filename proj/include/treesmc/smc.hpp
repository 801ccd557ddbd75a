#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "treesmc/proposal.hpp"
#include "treesmc/random.hpp"
#include "treesmc/resample.hpp"
#include "treesmc/tree.hpp"

namespace treesmc {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Expansion { node_wise, layer_wise };
enum class Priority { breadth_first, marginal_lik };

Expansion parse_expansion(std::string_view name);
Priority parse_priority(std::string_view name);
std::string_view to_string(Expansion e);
std::string_view to_string(Priority p);

struct SmcConfig {
  std::size_t num_particles = 100;
  std::size_t num_islands = 1;
  ProposalKind proposal = ProposalKind::prior;
  Expansion expansion = Expansion::node_wise;
  Priority priority = Priority::breadth_first;
  ResamplerKind resampler = ResamplerKind::multinomial;
  double ess_threshold_fraction = 0.1;
  std::size_t max_stages = 5000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // islands run on up to this many threads

  void validate() const;
};

// Candidate leaves expanded at the next stage, in processing order.
// node_wise returns one leaf: the oldest (breadth_first) or the one with the
// lowest block likelihood (marginal_lik), ties broken by path string.
// layer_wise returns every eligible leaf in path order.
std::vector<NodeIndex> select_candidates(const DecisionTree& tree, Expansion expansion,
                                         Priority priority);

struct StageDiagnostics {
  std::size_t stage = 0;
  double ess = 0.0;
  double log_normalizer = 0.0;  // log(W_i / M)
  std::size_t live_particles = 0;
  bool resampled = false;
};

// M weighted particles. Log-weights are unnormalized; their mean (in linear
// scale) is the running estimate of the marginal likelihood.
class ParticlePopulation {
 public:
  // Every particle starts as the root leaf with weight l(Y).
  ParticlePopulation(const Dataset& data, const Hyperparams& hyper, std::size_t num_particles);

  std::size_t size() const { return particles_.size(); }
  std::size_t stage() const { return stage_; }
  const std::vector<DecisionTree>& particles() const { return particles_; }
  const std::vector<double>& log_weights() const { return log_weights_; }

  double log_normalizer() const;
  double ess() const;
  std::size_t live_count() const;
  bool all_complete() const { return live_count() == 0; }

  // Proposes for the candidates of every live particle and updates weights.
  void advance(const SmcConfig& config, Rng& rng);

  // Draws ancestors and resets every log-weight to log(W / M).
  void resample(ResamplerKind kind, Rng& rng);

  // Weighted posterior predictive at x.
  std::vector<double> predict(std::span<const double> x) const;

 private:
  std::vector<DecisionTree> particles_;
  std::vector<double> log_weights_;
  std::size_t stage_ = 0;
};

struct SmcResult {
  std::vector<DecisionTree> particles;
  std::vector<double> log_weights;
  double log_marginal = 0.0;
  std::vector<StageDiagnostics> diagnostics;
  bool max_stages_reached = false;
  double seconds = 0.0;
  std::uint64_t seed = 0;

  std::vector<double> predict(std::span<const double> x) const;
};

// One particle filter with config.num_particles particles seeded by
// config.seed (num_islands is ignored). Deterministic given the seed.
SmcResult smc_run(const Dataset& data, const Hyperparams& hyper, const SmcConfig& config);

struct IslandsResult {
  std::vector<SmcResult> islands;
  double seconds = 0.0;

  // Unweighted mean of the islands' predictives.
  std::vector<double> predict(std::span<const double> x) const;
};

// Seed of island i: the master seed itself for a single island, otherwise
// derive_seed(master, i).
std::uint64_t island_seed(std::uint64_t master, std::size_t island, std::size_t num_islands);

// num_islands independent filters with num_particles / num_islands particles each.
IslandsResult islands_run(const Dataset& data, const Hyperparams& hyper, const SmcConfig& config);

}  // namespace treesmc
