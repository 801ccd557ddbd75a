#include "treesmc/smc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

namespace treesmc {

Expansion parse_expansion(std::string_view name) {
  if (name == "node" || name == "node_wise") return Expansion::node_wise;
  if (name == "layer" || name == "layer_wise") return Expansion::layer_wise;
  throw std::invalid_argument("unknown expansion '" + std::string(name) + "'");
}

Priority parse_priority(std::string_view name) {
  if (name == "breadth" || name == "breadth_first") return Priority::breadth_first;
  if (name == "marginal" || name == "marginal_lik") return Priority::marginal_lik;
  throw std::invalid_argument("unknown priority '" + std::string(name) + "'");
}

std::string_view to_string(Expansion e) { return e == Expansion::node_wise ? "node" : "layer"; }
std::string_view to_string(Priority p) {
  return p == Priority::breadth_first ? "breadth" : "marginal";
}

void SmcConfig::validate() const {
  if (num_particles < 1) throw ConfigError("number of particles must be at least 1");
  if (num_islands < 1) throw ConfigError("number of islands must be at least 1");
  if (num_particles % num_islands != 0) {
    throw ConfigError("number of islands (" + std::to_string(num_islands) +
                      ") must divide the number of particles (" + std::to_string(num_particles) + ")");
  }
  if (!(ess_threshold_fraction > 0.0 && ess_threshold_fraction <= 1.0)) {
    throw ConfigError("ESS threshold fraction must lie in (0, 1]");
  }
  if (max_stages < 1) throw ConfigError("max_stages must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

std::vector<NodeIndex> select_candidates(const DecisionTree& tree, Expansion expansion,
                                         Priority priority) {
  const auto& e = tree.eligible();
  if (e.empty()) throw ContractError("select_candidates: no eligible leaves");
  auto by_path = [&tree](NodeIndex a, NodeIndex b) { return tree.node(a).path < tree.node(b).path; };
  if (expansion == Expansion::layer_wise) {
    std::vector<NodeIndex> all(e.begin(), e.end());
    std::sort(all.begin(), all.end(), by_path);
    return all;
  }
  NodeIndex best = e.front();
  for (NodeIndex c : e) {
    const auto& cn = tree.node(c);
    const auto& bn = tree.node(best);
    bool better;
    if (priority == Priority::breadth_first) {
      better = cn.created_stage != bn.created_stage ? cn.created_stage < bn.created_stage
                                                    : cn.path < bn.path;
    } else {
      better = cn.log_lik != bn.log_lik ? cn.log_lik < bn.log_lik : cn.path < bn.path;
    }
    if (better) best = c;
  }
  return {best};
}

namespace {

std::vector<double> weighted_predictive(const std::vector<DecisionTree>& particles,
                                        std::span<const double> log_weights,
                                        std::span<const double> x) {
  const auto w = normalized_weights(log_weights);
  const std::size_t k = particles.front().dataset().num_classes();
  const double alpha = particles.front().hyper().alpha;
  std::vector<double> out(k, 0.0);
  for (std::size_t m = 0; m < particles.size(); ++m) {
    if (w[m] == 0.0) continue;
    const auto& tree = particles[m];
    const auto p = leaf_predictive(tree.class_counts(tree.route(x)), alpha);
    for (std::size_t c = 0; c < k; ++c) out[c] += w[m] * p[c];
  }
  return out;
}

}  // namespace

ParticlePopulation::ParticlePopulation(const Dataset& data, const Hyperparams& hyper,
                                       std::size_t num_particles) {
  if (num_particles < 1) throw ConfigError("number of particles must be at least 1");
  DecisionTree root(data, hyper);
  particles_.assign(num_particles, root);
  log_weights_.assign(num_particles, root.log_lik());
}

double ParticlePopulation::log_normalizer() const {
  return log_sum_exp(log_weights_) - std::log(static_cast<double>(size()));
}

double ParticlePopulation::ess() const { return treesmc::ess(log_weights_); }

std::size_t ParticlePopulation::live_count() const {
  return static_cast<std::size_t>(std::count_if(particles_.begin(), particles_.end(),
                                                [](const DecisionTree& t) { return !t.complete(); }));
}

void ParticlePopulation::advance(const SmcConfig& config, Rng& rng) {
  ++stage_;
  std::vector<ProposalOutcome> outcomes;
  for (std::size_t m = 0; m < particles_.size(); ++m) {
    DecisionTree& tree = particles_[m];
    if (tree.complete()) continue;
    outcomes.clear();
    double delta = 0.0;
    for (NodeIndex c : select_candidates(tree, config.expansion, config.priority)) {
      outcomes.push_back(propose(config.proposal, tree, c, rng));
      delta += apply_outcome(tree, outcomes.back(), stage_);
    }
    log_weights_[m] += weight_increment(outcomes, delta);
  }
}

void ParticlePopulation::resample(ResamplerKind kind, Rng& rng) {
  const double log_norm = log_normalizer();
  const auto w = normalized_weights(log_weights_);
  const auto ancestors = treesmc::resample(kind, w, size(), rng);
  std::vector<DecisionTree> next;
  next.reserve(size());
  for (std::size_t a : ancestors) next.push_back(particles_[a]);
  particles_ = std::move(next);
  std::fill(log_weights_.begin(), log_weights_.end(), log_norm);
}

std::vector<double> ParticlePopulation::predict(std::span<const double> x) const {
  return weighted_predictive(particles_, log_weights_, x);
}

std::vector<double> SmcResult::predict(std::span<const double> x) const {
  return weighted_predictive(particles, log_weights, x);
}

SmcResult smc_run(const Dataset& data, const Hyperparams& hyper, const SmcConfig& config) {
  config.validate();
  hyper.validate();
  const auto start = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  ParticlePopulation pop(data, hyper, config.num_particles);
  const double threshold = config.ess_threshold_fraction * static_cast<double>(pop.size());

  SmcResult result;
  result.seed = config.seed;
  for (std::size_t stage = 1; stage <= config.max_stages; ++stage) {
    pop.advance(config, rng);
    StageDiagnostics d;
    d.stage = pop.stage();
    d.ess = pop.ess();
    d.live_particles = pop.live_count();
    d.resampled = d.ess < threshold;
    if (d.resampled) pop.resample(config.resampler, rng);
    d.log_normalizer = pop.log_normalizer();
    result.diagnostics.push_back(d);
    if (d.live_particles == 0) break;
  }
  result.max_stages_reached = !pop.all_complete();
  result.log_marginal = pop.log_normalizer();
  result.particles = pop.particles();
  result.log_weights = pop.log_weights();
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<double> IslandsResult::predict(std::span<const double> x) const {
  std::vector<double> out;
  for (const auto& island : islands) {
    const auto p = island.predict(x);
    if (out.empty()) out.assign(p.size(), 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) out[k] += p[k];
  }
  for (double& v : out) v /= static_cast<double>(islands.size());
  return out;
}

std::uint64_t island_seed(std::uint64_t master, std::size_t island, std::size_t num_islands) {
  return num_islands == 1 ? master : derive_seed(master, island);
}

IslandsResult islands_run(const Dataset& data, const Hyperparams& hyper, const SmcConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  IslandsResult result;
  result.islands.resize(config.num_islands);

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(config.num_islands);
  auto worker = [&] {
    for (std::size_t i = next++; i < config.num_islands; i = next++) {
      try {
        SmcConfig c = config;
        c.num_particles = config.num_particles / config.num_islands;
        c.num_islands = 1;
        c.seed = island_seed(config.seed, i, config.num_islands);
        result.islands[i] = smc_run(data, hyper, c);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(config.threads, config.num_islands);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace treesmc
