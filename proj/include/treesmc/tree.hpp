#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "treesmc/block.hpp"
#include "treesmc/dataset.hpp"
#include "treesmc/likelihood.hpp"
#include "treesmc/random.hpp"

namespace treesmc {

class InvalidStateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using NodeIndex = std::int32_t;
inline constexpr NodeIndex kNoNode = -1;

enum class NodeState : std::uint8_t { eligible, stopped, internal };

// Left child takes x[dim] <= loc, right child x[dim] > loc.
struct Cut {
  std::size_t dim = 0;
  double loc = 0.0;
};

struct TreeNode {
  std::string path;  // "" is the root; '0' appends a left child, '1' a right child
  NodeIndex parent = kNoNode;
  NodeIndex left = kNoNode;
  NodeIndex right = kNoNode;
  NodeState state = NodeState::eligible;
  std::size_t created_stage = 0;
  std::size_t decided_stage = 0;  // stage at which the node was stopped or split

  Cut cut;
  double cut_extent = 0.0;  // |I_kappa| of the block along cut.dim
  std::size_t num_valid_dims = 0;
  std::size_t num_points = 0;

  double log_lik = 0.0;         // Dirichlet-Multinomial term of this block
  double log_prior_term = 0.0;  // prior factor of the decision taken here (0 while eligible)

  std::shared_ptr<const Block> block;  // released once decided unless blocks are kept

  std::size_t depth() const { return path.size(); }
  bool is_leaf() const { return state != NodeState::internal; }
};

// A (possibly partial) decision tree over a fixed training set, with per-node
// cached statistics. log_prior() is the running sum of the per-decision prior
// factors and log_lik() the running sum of leaf likelihoods; both are updated
// incrementally by every mutation.
//
// The tree keeps a pointer to its Dataset, which must outlive it.
class DecisionTree {
 public:
  // Root-only tree with the root eligible. With keep_blocks the block of every
  // node is retained after its decision, which MCMC moves need.
  DecisionTree(const Dataset& data, const Hyperparams& hyper, bool keep_blocks = false);

  const Dataset& dataset() const { return *data_; }
  const Hyperparams& hyper() const { return hyper_; }
  bool keeps_blocks() const { return keep_blocks_; }

  std::size_t size() const { return nodes_.size(); }
  static constexpr NodeIndex root() { return 0; }
  const TreeNode& node(NodeIndex i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::span<const std::int64_t> class_counts(NodeIndex i) const;
  const Block& block(NodeIndex i) const;

  const std::vector<NodeIndex>& eligible() const { return eligible_; }
  bool complete() const { return eligible_.empty(); }

  double log_prior() const { return log_prior_; }
  double log_lik() const { return log_lik_; }
  double log_posterior() const { return log_prior_ + log_lik_; }

  std::size_t depth() const;
  std::size_t num_leaves() const;
  std::vector<NodeIndex> leaves() const;
  // Internal nodes whose children are both leaves.
  std::vector<NodeIndex> prunable() const;
  std::vector<NodeIndex> internal_nodes() const;

  // Marks a leaf as stopped. Stopping an already stopped leaf is an error.
  void stop(NodeIndex p, std::size_t stage = 0);

  // Splits an eligible or stopped leaf. Throws InvalidStateError if the cut
  // dimension does not vary in the block or a child would be empty.
  std::pair<NodeIndex, NodeIndex> split(NodeIndex p, Cut cut, std::size_t stage = 0,
                                        NodeState child_state = NodeState::eligible);

  // Removes the two leaf children of p, turning p into a stopped leaf.
  void prune(NodeIndex p);

  // Replaces the cut at internal node p and repartitions the subtree. Returns
  // false, leaving the tree unusable, if some block below p becomes empty;
  // callers work on a copy. Requires keep_blocks.
  bool set_cut(NodeIndex p, Cut cut);

  // Exchanges the cuts of internal node p and its internal child c, then
  // repartitions as set_cut does.
  bool swap_cuts(NodeIndex p, NodeIndex c);

  NodeIndex route(std::span<const double> x) const;

 private:
  NodeIndex add_node(std::string path, NodeIndex parent, std::shared_ptr<const Block> block,
                     NodeState state, std::size_t stage);
  void set_leaf_state(NodeIndex p, NodeState state);
  double stop_term(const TreeNode& n) const;
  double split_term(const TreeNode& n, const Block& b, std::size_t dim) const;
  bool rebuild_subtree(NodeIndex p);
  void erase_node(NodeIndex i);
  void release_block(NodeIndex i);

  const Dataset* data_;
  Hyperparams hyper_;
  bool keep_blocks_;
  std::vector<TreeNode> nodes_;
  std::vector<std::int64_t> counts_;  // size() * K, node-major
  std::vector<NodeIndex> eligible_;
  double log_prior_ = 0.0;
  double log_lik_ = 0.0;
};

// Log prior density of the decisions recorded in the tree, recomputed from
// scratch by repartitioning the data from the root. Eligible leaves contribute
// nothing (truncated prior). Throws InvalidStateError if a cut dimension does
// not vary in its block or a cut leaves a child empty.
double prior_log_density(const DecisionTree& tree);

// Sum of leaf Dirichlet-Multinomial terms, recomputed from scratch.
double log_lik_from_scratch(const DecisionTree& tree);

// Serialized form: one object per node with path, state, cut and stages.
nlohmann::json tree_to_json(const DecisionTree& tree);

// Rebuilds a tree by applying the serialized decisions in stage order.
DecisionTree tree_from_json(const Dataset& data, const Hyperparams& hyper,
                            const nlohmann::json& j, bool keep_blocks = false);

struct PriorDraw {
  bool split = false;
  Cut cut;
};

// One decision of the generative chain at a block of the given depth: stop
// with probability 1 - split_prob (always, if nothing varies), otherwise a cut
// dimension uniform over the varying dims and a location uniform on its extent.
PriorDraw draw_prior_decision(const BlockStats& stats, std::size_t depth, const Hyperparams& hyper,
                              Rng& rng);

// Draws a complete tree from the prior by running the generative chain
// breadth-first.
DecisionTree sample_prior_tree(const Dataset& data, const Hyperparams& hyper, Rng& rng);

}  // namespace treesmc
