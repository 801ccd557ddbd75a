#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "treesmc/random.hpp"
#include "treesmc/tree.hpp"

namespace treesmc {

enum class MoveKind { grow = 0, prune = 1, change = 2, swap = 3 };

std::string_view to_string(MoveKind kind);

struct McmcConfig {
  std::size_t iterations = 1000;
  std::array<double, 4> move_probs{0.25, 0.25, 0.25, 0.25};  // indexed by MoveKind
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;  // retained states skipped before prediction averaging

  void validate() const;
  double prob(MoveKind k) const { return move_probs[static_cast<std::size_t>(k)]; }
};

// A proposed state and its log Metropolis-Hastings ratio. `proposed` is empty
// and log_ratio is -inf when the move is impossible from the current state or
// leaves the prior's support.
struct MoveProposal {
  MoveKind kind = MoveKind::grow;
  std::optional<DecisionTree> proposed;
  double log_ratio = -std::numeric_limits<double>::infinity();
};

// Complete root-only tree that keeps its blocks, the chain's starting state.
DecisionTree mcmc_initial_tree(const Dataset& data, const Hyperparams& hyper);

// Grow: split a uniformly chosen leaf that has a varying dimension, with the
// cut drawn from the prior at that leaf.
MoveProposal move_grow(const DecisionTree& tree, const McmcConfig& config, Rng& rng);
// Prune: collapse a uniformly chosen internal node whose children are leaves.
MoveProposal move_prune(const DecisionTree& tree, const McmcConfig& config, Rng& rng);
// Change: redraw the cut of a uniformly chosen internal node from the prior.
MoveProposal move_change(const DecisionTree& tree, const McmcConfig& config, Rng& rng);
// Swap: exchange the cuts of a uniformly chosen internal parent/child pair.
MoveProposal move_swap(const DecisionTree& tree, const McmcConfig& config, Rng& rng);

// Deterministic forms of the moves for a given node and cut.
MoveProposal propose_grow_at(const DecisionTree& tree, NodeIndex leaf, Cut cut,
                             const McmcConfig& config);
MoveProposal propose_prune_at(const DecisionTree& tree, NodeIndex node, const McmcConfig& config);
MoveProposal propose_change_at(const DecisionTree& tree, NodeIndex node, Cut cut,
                               const McmcConfig& config);
MoveProposal propose_swap_at(const DecisionTree& tree, NodeIndex parent, NodeIndex child,
                             const McmcConfig& config);

// Log density of proposing `to` from `from` with the given move, including the
// move-type and node-selection probabilities. Used to check detailed balance.
double log_move_density(const DecisionTree& from, const DecisionTree& to, MoveKind kind,
                        NodeIndex node, const McmcConfig& config);

struct McmcIteration {
  std::size_t iteration = 0;
  MoveKind move = MoveKind::grow;
  bool accepted = false;
  double log_posterior = 0.0;
  std::size_t num_nodes = 0;
  std::size_t depth = 0;
};

struct McmcResult {
  std::vector<McmcIteration> trace;
  std::optional<DecisionTree> final_tree;
  // Running mean of the leaf predictive over retained states, one row per
  // test point (empty when no test set was given).
  std::vector<std::vector<double>> predictive;
  std::size_t retained = 0;
  double seconds = 0.0;

  double acceptance_rate() const;
};

// Called with every retained state: the initial tree, then the state after
// each iteration, minus the first burn_in of those.
using StateVisitor = std::function<void(const DecisionTree&)>;

McmcResult mcmc_run(const Dataset& train, const Hyperparams& hyper, const McmcConfig& config,
                    const Dataset* test = nullptr, const StateVisitor& visit = {});

}  // namespace treesmc
