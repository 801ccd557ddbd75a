#include "treesmc/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace treesmc {

namespace {

const char* state_name(NodeState s) {
  switch (s) {
    case NodeState::eligible:
      return "eligible";
    case NodeState::stopped:
      return "stopped";
    case NodeState::internal:
      return "internal";
  }
  return "?";
}

NodeState parse_state(const std::string& s) {
  if (s == "eligible") return NodeState::eligible;
  if (s == "stopped") return NodeState::stopped;
  if (s == "internal") return NodeState::internal;
  throw InvalidStateError("unknown node state '" + s + "'");
}

}  // namespace

DecisionTree::DecisionTree(const Dataset& data, const Hyperparams& hyper, bool keep_blocks)
    : data_(&data), hyper_(hyper), keep_blocks_(keep_blocks) {
  hyper_.validate();
  std::vector<std::uint32_t> all(data.size());
  std::iota(all.begin(), all.end(), 0u);
  auto root_block = std::shared_ptr<const Block>(new Block(data, std::move(all)));
  add_node("", kNoNode, std::move(root_block), NodeState::eligible, 0);
}

std::span<const std::int64_t> DecisionTree::class_counts(NodeIndex i) const {
  const std::size_t k = data_->num_classes();
  return {counts_.data() + static_cast<std::size_t>(i) * k, k};
}

const Block& DecisionTree::block(NodeIndex i) const {
  const auto& b = node(i).block;
  if (!b) throw InvalidStateError("block of node '" + node(i).path + "' has been released");
  return *b;
}

NodeIndex DecisionTree::add_node(std::string path, NodeIndex parent,
                                 std::shared_ptr<const Block> block, NodeState state,
                                 std::size_t stage) {
  TreeNode n;
  n.path = std::move(path);
  n.parent = parent;
  n.state = state;
  n.created_stage = stage;
  const auto& stats = block->stats();
  n.num_valid_dims = stats.valid_dims.size();
  n.num_points = stats.indices.size();
  n.log_lik = dm_log_lik(stats.class_counts, hyper_.alpha);
  counts_.insert(counts_.end(), stats.class_counts.begin(), stats.class_counts.end());
  n.block = std::move(block);

  const auto idx = static_cast<NodeIndex>(nodes_.size());
  log_lik_ += n.log_lik;
  if (state == NodeState::stopped) {
    n.log_prior_term = stop_term(n);
    log_prior_ += n.log_prior_term;
    n.decided_stage = stage;
    if (!keep_blocks_) n.block.reset();
  } else if (state == NodeState::eligible) {
    eligible_.push_back(idx);
  } else {
    throw InvalidStateError("new nodes must be leaves");
  }
  nodes_.push_back(std::move(n));
  return idx;
}

double DecisionTree::stop_term(const TreeNode& n) const {
  if (n.num_valid_dims == 0) return 0.0;
  return std::log1p(-split_prob(n.depth(), hyper_));
}

double DecisionTree::split_term(const TreeNode& n, const Block& b, std::size_t dim) const {
  return std::log(split_prob(n.depth(), hyper_)) -
         std::log(static_cast<double>(n.num_valid_dims)) -
         std::log(b.stats().extents[dim].length());
}

void DecisionTree::set_leaf_state(NodeIndex p, NodeState state) {
  auto& n = nodes_[static_cast<std::size_t>(p)];
  if (n.state == NodeState::eligible && state != NodeState::eligible) {
    eligible_.erase(std::find(eligible_.begin(), eligible_.end(), p));
  }
  n.state = state;
}

void DecisionTree::release_block(NodeIndex i) {
  if (!keep_blocks_) nodes_[static_cast<std::size_t>(i)].block.reset();
}

void DecisionTree::stop(NodeIndex p, std::size_t stage) {
  auto& n = nodes_.at(static_cast<std::size_t>(p));
  if (n.state != NodeState::eligible) {
    throw InvalidStateError("stop: node '" + n.path + "' is not an eligible leaf");
  }
  n.log_prior_term = stop_term(n);
  n.decided_stage = stage;
  log_prior_ += n.log_prior_term;
  set_leaf_state(p, NodeState::stopped);
  release_block(p);
}

std::pair<NodeIndex, NodeIndex> DecisionTree::split(NodeIndex p, Cut cut, std::size_t stage,
                                                    NodeState child_state) {
  auto& n = nodes_.at(static_cast<std::size_t>(p));
  if (n.state == NodeState::internal) {
    throw InvalidStateError("split: node '" + n.path + "' is already internal");
  }
  const Block& b = block(p);
  if (cut.dim >= data_->num_features() || !(b.stats().extents[cut.dim].length() > 0.0)) {
    throw InvalidStateError("split: dimension " + std::to_string(cut.dim) +
                            " does not vary in block '" + n.path + "'");
  }
  auto [lb, rb] = b.children(*data_, cut.dim, cut.loc);
  if (!lb) throw InvalidStateError("split: cut leaves a child of '" + n.path + "' empty");

  log_prior_ -= n.log_prior_term;
  n.log_prior_term = split_term(n, b, cut.dim);
  log_prior_ += n.log_prior_term;
  n.cut = cut;
  n.cut_extent = b.stats().extents[cut.dim].length();
  n.decided_stage = stage;
  log_lik_ -= n.log_lik;
  set_leaf_state(p, NodeState::internal);
  release_block(p);

  const std::string path = n.path;  // add_node may reallocate nodes_
  const NodeIndex l = add_node(path + '0', p, std::move(lb), child_state, stage);
  const NodeIndex r = add_node(path + '1', p, std::move(rb), child_state, stage);
  nodes_[static_cast<std::size_t>(p)].left = l;
  nodes_[static_cast<std::size_t>(p)].right = r;
  return {l, r};
}

void DecisionTree::erase_node(NodeIndex i) {
  const auto last = static_cast<NodeIndex>(nodes_.size() - 1);
  const std::size_t k = data_->num_classes();
  std::erase(eligible_, i);
  if (i != last) {
    auto& moved = nodes_[static_cast<std::size_t>(last)];
    if (moved.parent != kNoNode) {
      auto& par = nodes_[static_cast<std::size_t>(moved.parent)];
      (par.left == last ? par.left : par.right) = i;
    }
    if (moved.left != kNoNode) nodes_[static_cast<std::size_t>(moved.left)].parent = i;
    if (moved.right != kNoNode) nodes_[static_cast<std::size_t>(moved.right)].parent = i;
    std::replace(eligible_.begin(), eligible_.end(), last, i);
    nodes_[static_cast<std::size_t>(i)] = std::move(moved);
    std::copy_n(counts_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(last) * k), k,
                counts_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * k));
  }
  nodes_.pop_back();
  counts_.resize(nodes_.size() * k);
}

void DecisionTree::prune(NodeIndex p) {
  auto& n = nodes_.at(static_cast<std::size_t>(p));
  if (n.state != NodeState::internal) {
    throw InvalidStateError("prune: node '" + n.path + "' is not internal");
  }
  const NodeIndex l = n.left;
  const NodeIndex r = n.right;
  const auto& ln = node(l);
  const auto& rn = node(r);
  if (!ln.is_leaf() || !rn.is_leaf()) {
    throw InvalidStateError("prune: children of '" + n.path + "' are not both leaves");
  }
  log_prior_ -= ln.log_prior_term + rn.log_prior_term + n.log_prior_term;
  log_lik_ -= ln.log_lik + rn.log_lik;
  n.state = NodeState::stopped;
  n.left = n.right = kNoNode;
  n.log_prior_term = stop_term(n);
  log_prior_ += n.log_prior_term;
  log_lik_ += n.log_lik;
  erase_node(std::max(l, r));
  erase_node(std::min(l, r));
}

bool DecisionTree::rebuild_subtree(NodeIndex p) {
  auto& n = nodes_[static_cast<std::size_t>(p)];
  const Block& b = block(p);
  const std::size_t dim = n.cut.dim;
  if (dim >= data_->num_features() || !(b.stats().extents[dim].length() > 0.0)) return false;
  auto [lb, rb] = b.children(*data_, dim, n.cut.loc);
  if (!lb) return false;

  log_prior_ -= n.log_prior_term;
  n.log_prior_term = split_term(n, b, dim);
  n.cut_extent = b.stats().extents[dim].length();
  log_prior_ += n.log_prior_term;

  const std::size_t k = data_->num_classes();
  const NodeIndex kids[2] = {n.left, n.right};
  std::shared_ptr<const Block> blocks[2] = {std::move(lb), std::move(rb)};
  for (int side = 0; side < 2; ++side) {
    auto& c = nodes_[static_cast<std::size_t>(kids[side])];
    const auto& stats = blocks[side]->stats();
    if (c.is_leaf()) {
      log_lik_ -= c.log_lik;
      log_prior_ -= c.log_prior_term;
    }
    c.num_valid_dims = stats.valid_dims.size();
    c.num_points = stats.indices.size();
    c.log_lik = dm_log_lik(stats.class_counts, hyper_.alpha);
    std::copy(stats.class_counts.begin(), stats.class_counts.end(),
              counts_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(kids[side]) * k));
    c.block = std::move(blocks[side]);
    if (c.is_leaf()) {
      c.log_prior_term = c.state == NodeState::stopped ? stop_term(c) : 0.0;
      log_lik_ += c.log_lik;
      log_prior_ += c.log_prior_term;
    } else if (!rebuild_subtree(kids[side])) {
      return false;
    }
  }
  return true;
}

bool DecisionTree::set_cut(NodeIndex p, Cut cut) {
  if (!keep_blocks_) throw InvalidStateError("set_cut requires a tree that keeps its blocks");
  auto& n = nodes_.at(static_cast<std::size_t>(p));
  if (n.state != NodeState::internal) {
    throw InvalidStateError("set_cut: node '" + n.path + "' is not internal");
  }
  n.cut = cut;
  return rebuild_subtree(p);
}

bool DecisionTree::swap_cuts(NodeIndex p, NodeIndex c) {
  if (!keep_blocks_) throw InvalidStateError("swap_cuts requires a tree that keeps its blocks");
  auto& pn = nodes_.at(static_cast<std::size_t>(p));
  auto& cn = nodes_.at(static_cast<std::size_t>(c));
  if (pn.state != NodeState::internal || cn.state != NodeState::internal || cn.parent != p) {
    throw InvalidStateError("swap_cuts: needs an internal node and its internal child");
  }
  std::swap(pn.cut, cn.cut);
  return rebuild_subtree(p);
}

NodeIndex DecisionTree::route(std::span<const double> x) const {
  NodeIndex i = root();
  while (node(i).state == NodeState::internal) {
    const auto& n = node(i);
    i = x[n.cut.dim] <= n.cut.loc ? n.left : n.right;
  }
  return i;
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth());
  return d;
}

std::size_t DecisionTree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::vector<NodeIndex> DecisionTree::leaves() const {
  std::vector<NodeIndex> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf()) out.push_back(static_cast<NodeIndex>(i));
  }
  return out;
}

std::vector<NodeIndex> DecisionTree::internal_nodes() const {
  std::vector<NodeIndex> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].is_leaf()) out.push_back(static_cast<NodeIndex>(i));
  }
  return out;
}

std::vector<NodeIndex> DecisionTree::prunable() const {
  std::vector<NodeIndex> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (!n.is_leaf() && node(n.left).is_leaf() && node(n.right).is_leaf()) {
      out.push_back(static_cast<NodeIndex>(i));
    }
  }
  return out;
}

namespace {

struct ScratchTotals {
  double log_prior = 0.0;
  double log_lik = 0.0;
};

void scratch_walk(const DecisionTree& tree, NodeIndex i, std::vector<std::uint32_t> indices,
                  ScratchTotals& out) {
  const Dataset& data = tree.dataset();
  const auto& n = tree.node(i);
  const BlockStats stats = block_stats(data, std::move(indices));
  if (n.is_leaf()) {
    out.log_lik += dm_log_lik(stats.class_counts, tree.hyper().alpha);
    if (n.state == NodeState::stopped && !stats.valid_dims.empty()) {
      out.log_prior += std::log1p(-split_prob(n.depth(), tree.hyper()));
    }
    return;
  }
  const std::size_t dim = n.cut.dim;
  if (!std::binary_search(stats.valid_dims.begin(), stats.valid_dims.end(), dim)) {
    throw InvalidStateError("node '" + n.path + "' cuts dimension " + std::to_string(dim) +
                            " which does not vary in its block");
  }
  std::vector<std::uint32_t> li, ri;
  for (std::uint32_t idx : stats.indices) (data.feature(idx, dim) <= n.cut.loc ? li : ri).push_back(idx);
  if (li.empty() || ri.empty()) {
    throw InvalidStateError("node '" + n.path + "' has a cut outside its block's support");
  }
  out.log_prior += std::log(split_prob(n.depth(), tree.hyper())) -
                   std::log(static_cast<double>(stats.valid_dims.size())) -
                   std::log(stats.extents[dim].length());
  scratch_walk(tree, n.left, std::move(li), out);
  scratch_walk(tree, n.right, std::move(ri), out);
}

ScratchTotals scratch_totals(const DecisionTree& tree) {
  std::vector<std::uint32_t> all(tree.dataset().size());
  std::iota(all.begin(), all.end(), 0u);
  ScratchTotals t;
  scratch_walk(tree, DecisionTree::root(), std::move(all), t);
  return t;
}

}  // namespace

double prior_log_density(const DecisionTree& tree) { return scratch_totals(tree).log_prior; }

double log_lik_from_scratch(const DecisionTree& tree) { return scratch_totals(tree).log_lik; }

nlohmann::json tree_to_json(const DecisionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& n = tree.node(static_cast<NodeIndex>(i));
    nlohmann::json j{{"path", n.path},
                     {"state", state_name(n.state)},
                     {"created_stage", n.created_stage},
                     {"decided_stage", n.decided_stage}};
    if (n.state == NodeState::internal) {
      j["dim"] = n.cut.dim;
      j["loc"] = n.cut.loc;
    }
    nodes.push_back(std::move(j));
  }
  return {{"nodes", std::move(nodes)}, {"log_prior", tree.log_prior()}, {"log_lik", tree.log_lik()}};
}

DecisionTree tree_from_json(const Dataset& data, const Hyperparams& hyper, const nlohmann::json& j,
                            bool keep_blocks) {
  struct Decision {
    std::string path;
    NodeState state;
    std::size_t stage;
    Cut cut;
  };
  std::vector<Decision> decisions;
  for (const auto& n : j.at("nodes")) {
    const NodeState s = parse_state(n.at("state").get<std::string>());
    if (s == NodeState::eligible) continue;
    Decision d{n.at("path").get<std::string>(), s, n.at("decided_stage").get<std::size_t>(), {}};
    if (s == NodeState::internal) d.cut = {n.at("dim").get<std::size_t>(), n.at("loc").get<double>()};
    decisions.push_back(std::move(d));
  }
  std::sort(decisions.begin(), decisions.end(), [](const Decision& a, const Decision& b) {
    if (a.stage != b.stage) return a.stage < b.stage;
    if (a.path.size() != b.path.size()) return a.path.size() < b.path.size();
    return a.path < b.path;
  });

  DecisionTree tree(data, hyper, keep_blocks);
  auto find = [&tree](const std::string& path) {
    for (std::size_t i = 0; i < tree.size(); ++i) {
      if (tree.node(static_cast<NodeIndex>(i)).path == path) return static_cast<NodeIndex>(i);
    }
    throw InvalidStateError("serialized decision for unknown node '" + path + "'");
  };
  for (const auto& d : decisions) {
    const NodeIndex i = find(d.path);
    if (d.state == NodeState::internal) {
      tree.split(i, d.cut, d.stage);
    } else {
      tree.stop(i, d.stage);
    }
  }
  return tree;
}

}  // namespace treesmc
