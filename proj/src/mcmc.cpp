#include "treesmc/mcmc.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "treesmc/smc.hpp"

namespace treesmc {

std::string_view to_string(MoveKind kind) {
  switch (kind) {
    case MoveKind::grow:
      return "grow";
    case MoveKind::prune:
      return "prune";
    case MoveKind::change:
      return "change";
    case MoveKind::swap:
      return "swap";
  }
  return "?";
}

void McmcConfig::validate() const {
  double total = 0.0;
  for (double p : move_probs) {
    if (!(p > 0.0)) throw ConfigError("move probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("move probabilities must sum to 1");
  if (burn_in > iterations) throw ConfigError("burn-in exceeds the number of iterations");
}

double McmcResult::acceptance_rate() const {
  if (trace.empty()) return 0.0;
  std::size_t accepted = 0;
  for (const auto& t : trace) accepted += t.accepted ? 1 : 0;
  return static_cast<double>(accepted) / static_cast<double>(trace.size());
}

namespace {

std::vector<NodeIndex> growable(const DecisionTree& tree) {
  std::vector<NodeIndex> out;
  for (NodeIndex i : tree.leaves()) {
    if (tree.node(i).num_valid_dims > 0) out.push_back(i);
  }
  return out;
}

std::vector<std::pair<NodeIndex, NodeIndex>> swappable(const DecisionTree& tree) {
  std::vector<std::pair<NodeIndex, NodeIndex>> out;
  for (NodeIndex i : tree.internal_nodes()) {
    const auto& n = tree.node(i);
    if (!tree.node(n.left).is_leaf()) out.emplace_back(i, n.left);
    if (!tree.node(n.right).is_leaf()) out.emplace_back(i, n.right);
  }
  return out;
}

double log_cut_density(const DecisionTree& tree, NodeIndex p, std::size_t dim) {
  const auto& stats = tree.block(p).stats();
  return -std::log(static_cast<double>(stats.valid_dims.size())) -
         std::log(stats.extents[dim].length());
}

Cut draw_cut(const BlockStats& stats, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, stats.valid_dims.size() - 1);
  Cut c;
  c.dim = stats.valid_dims[pick(rng)];
  const Extent e = stats.extents[c.dim];
  std::uniform_real_distribution<double> loc(e.lo, e.hi);
  do {
    c.loc = loc(rng);
  } while (c.loc >= e.hi);
  return c;
}

template <typename T>
const T& pick_uniform(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  return v[pick(rng)];
}

MoveProposal rejected(MoveKind kind) {
  MoveProposal m;
  m.kind = kind;
  return m;
}

}  // namespace

DecisionTree mcmc_initial_tree(const Dataset& data, const Hyperparams& hyper) {
  DecisionTree tree(data, hyper, true);
  tree.stop(DecisionTree::root());
  return tree;
}

double log_move_density(const DecisionTree& from, const DecisionTree& to, MoveKind kind,
                        NodeIndex node, const McmcConfig& config) {
  const double move = std::log(config.prob(kind));
  switch (kind) {
    case MoveKind::grow:
      return move - std::log(static_cast<double>(growable(from).size())) +
             log_cut_density(from, node, to.node(node).cut.dim);
    case MoveKind::prune:
      return move - std::log(static_cast<double>(from.prunable().size()));
    case MoveKind::change:
      return move - std::log(static_cast<double>(from.internal_nodes().size())) +
             log_cut_density(from, node, to.node(node).cut.dim);
    case MoveKind::swap:
      return move - std::log(static_cast<double>(swappable(from).size()));
  }
  throw std::invalid_argument("unknown move");
}

MoveProposal propose_grow_at(const DecisionTree& tree, NodeIndex leaf, Cut cut,
                             const McmcConfig& config) {
  MoveProposal m = rejected(MoveKind::grow);
  DecisionTree next = tree;
  next.split(leaf, cut, 0, NodeState::stopped);
  const double fwd = log_move_density(tree, next, MoveKind::grow, leaf, config);
  const double rev = std::log(config.prob(MoveKind::prune)) -
                     std::log(static_cast<double>(next.prunable().size()));
  m.log_ratio = next.log_posterior() - tree.log_posterior() + rev - fwd;
  m.proposed = std::move(next);
  return m;
}

MoveProposal propose_prune_at(const DecisionTree& tree, NodeIndex node, const McmcConfig& config) {
  MoveProposal m = rejected(MoveKind::prune);
  DecisionTree next = tree;
  next.prune(node);
  const double fwd = log_move_density(tree, next, MoveKind::prune, node, config);
  // Reverse: grow the collapsed node back with the removed cut.
  const auto& n = tree.node(node);
  const double rev = std::log(config.prob(MoveKind::grow)) -
                     std::log(static_cast<double>(growable(next).size())) -
                     std::log(static_cast<double>(n.num_valid_dims)) - std::log(n.cut_extent);
  m.log_ratio = next.log_posterior() - tree.log_posterior() + rev - fwd;
  m.proposed = std::move(next);
  return m;
}

MoveProposal propose_change_at(const DecisionTree& tree, NodeIndex node, Cut cut,
                               const McmcConfig& config) {
  MoveProposal m = rejected(MoveKind::change);
  DecisionTree next = tree;
  if (!next.set_cut(node, cut)) return m;
  const double fwd = log_move_density(tree, next, MoveKind::change, node, config);
  const double rev = log_move_density(next, tree, MoveKind::change, node, config);
  m.log_ratio = next.log_posterior() - tree.log_posterior() + rev - fwd;
  m.proposed = std::move(next);
  return m;
}

MoveProposal propose_swap_at(const DecisionTree& tree, NodeIndex parent, NodeIndex child,
                             const McmcConfig& /*config*/) {
  MoveProposal m = rejected(MoveKind::swap);
  DecisionTree next = tree;
  if (!next.swap_cuts(parent, child)) return m;
  // The set of internal parent/child pairs is unchanged, so the proposal is symmetric.
  m.log_ratio = next.log_posterior() - tree.log_posterior();
  m.proposed = std::move(next);
  return m;
}

MoveProposal move_grow(const DecisionTree& tree, const McmcConfig& config, Rng& rng) {
  const auto g = growable(tree);
  if (g.empty()) return rejected(MoveKind::grow);
  const NodeIndex leaf = pick_uniform(g, rng);
  const Cut cut = draw_cut(tree.block(leaf).stats(), rng);
  return propose_grow_at(tree, leaf, cut, config);
}

MoveProposal move_prune(const DecisionTree& tree, const McmcConfig& config, Rng& rng) {
  const auto p = tree.prunable();
  if (p.empty()) return rejected(MoveKind::prune);
  return propose_prune_at(tree, pick_uniform(p, rng), config);
}

MoveProposal move_change(const DecisionTree& tree, const McmcConfig& config, Rng& rng) {
  const auto internal = tree.internal_nodes();
  if (internal.empty()) return rejected(MoveKind::change);
  const NodeIndex node = pick_uniform(internal, rng);
  const Cut cut = draw_cut(tree.block(node).stats(), rng);
  return propose_change_at(tree, node, cut, config);
}

MoveProposal move_swap(const DecisionTree& tree, const McmcConfig& config, Rng& rng) {
  const auto pairs = swappable(tree);
  if (pairs.empty()) return rejected(MoveKind::swap);
  const auto [p, c] = pick_uniform(pairs, rng);
  return propose_swap_at(tree, p, c, config);
}

McmcResult mcmc_run(const Dataset& train, const Hyperparams& hyper, const McmcConfig& config,
                    const Dataset* test, const StateVisitor& visit) {
  config.validate();
  hyper.validate();
  if (test && test->num_features() != train.num_features()) {
    throw DataError("test set has a different number of features than the training set");
  }
  const auto start = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  std::discrete_distribution<int> pick_move(config.move_probs.begin(), config.move_probs.end());
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  McmcResult result;
  DecisionTree state = mcmc_initial_tree(train, hyper);
  const std::size_t k = train.num_classes();
  if (test) result.predictive.assign(test->size(), std::vector<double>(k, 0.0));

  std::size_t seen = 0;
  auto retain = [&](const DecisionTree& t) {
    if (seen++ < config.burn_in) return;
    ++result.retained;
    if (visit) visit(t);
    if (!test) return;
    for (std::size_t n = 0; n < test->size(); ++n) {
      const auto p = leaf_predictive(t.class_counts(t.route(test->row(n))), hyper.alpha);
      for (std::size_t c = 0; c < k; ++c) result.predictive[n][c] += p[c];
    }
  };

  retain(state);
  result.trace.reserve(config.iterations);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    const auto kind = static_cast<MoveKind>(pick_move(rng));
    MoveProposal m;
    switch (kind) {
      case MoveKind::grow:
        m = move_grow(state, config, rng);
        break;
      case MoveKind::prune:
        m = move_prune(state, config, rng);
        break;
      case MoveKind::change:
        m = move_change(state, config, rng);
        break;
      case MoveKind::swap:
        m = move_swap(state, config, rng);
        break;
    }
    bool accepted = false;
    if (m.proposed) {
      accepted = m.log_ratio >= 0.0 || std::log(u01(rng)) < m.log_ratio;
      if (accepted) state = std::move(*m.proposed);
    }
    result.trace.push_back({it, kind, accepted, state.log_posterior(), state.size(), state.depth()});
    retain(state);
  }

  for (auto& row : result.predictive) {
    for (double& v : row) v /= static_cast<double>(result.retained);
  }
  result.final_tree = std::move(state);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace treesmc
