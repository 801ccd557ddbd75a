#include "treesmc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "treesmc/block.hpp"

namespace treesmc {

namespace {

struct Partition {
  std::vector<std::uint32_t> left, right;
};

Partition partition(const Dataset& data, std::span<const std::uint32_t> indices, std::size_t dim,
                    double threshold) {
  Partition p;
  for (std::uint32_t n : indices) (data.feature(n, dim) <= threshold ? p.left : p.right).push_back(n);
  return p;
}

std::vector<std::uint32_t> all_rows(const Dataset& data) {
  std::vector<std::uint32_t> v(data.size());
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

class TreeCounter {
 public:
  TreeCounter(const Dataset& data, std::size_t cap) : data_(data), cap_(cap) {}

  std::size_t count(std::vector<std::uint32_t> indices) {
    std::sort(indices.begin(), indices.end());
    if (auto it = memo_.find(indices); it != memo_.end()) return it->second;
    const BlockStats stats = block_stats(data_, indices);
    std::size_t total = 1;
    for (std::size_t d : stats.valid_dims) {
      const auto vals = distinct_values(data_, stats.indices, d);
      for (std::size_t g = 0; g + 1 < vals.size() && total <= cap_; ++g) {
        auto parts = partition(data_, stats.indices, d, vals[g]);
        const std::size_t l = count(std::move(parts.left));
        const std::size_t r = l > cap_ ? 1 : count(std::move(parts.right));
        total += (l > cap_ || r > cap_ || l > cap_ / r) ? cap_ + 1 : l * r;
      }
      if (total > cap_) break;
    }
    total = std::min(total, cap_ + 1);
    memo_.emplace(std::move(indices), total);
    return total;
  }

 private:
  const Dataset& data_;
  std::size_t cap_;
  std::map<std::vector<std::uint32_t>, std::size_t> memo_;
};

std::vector<EnumeratedTree> enumerate_block(const Dataset& data, const Hyperparams& hyper,
                                            std::vector<std::uint32_t> indices, std::size_t depth) {
  const BlockStats stats = block_stats(data, std::move(indices));
  std::vector<EnumeratedTree> out;

  EnumeratedTree leaf;
  leaf.key = "L";
  leaf.log_prior_mass = stats.valid_dims.empty() ? 0.0 : std::log1p(-split_prob(depth, hyper));
  leaf.log_lik = dm_log_lik(stats.class_counts, hyper.alpha);
  leaf.num_nodes = 1;
  out.push_back(std::move(leaf));
  if (stats.valid_dims.empty()) return out;

  const double log_choice =
      std::log(split_prob(depth, hyper)) - std::log(static_cast<double>(stats.valid_dims.size()));
  for (std::size_t d : stats.valid_dims) {
    const auto vals = distinct_values(data, stats.indices, d);
    const double extent = vals.back() - vals.front();
    for (std::size_t g = 0; g + 1 < vals.size(); ++g) {
      auto parts = partition(data, stats.indices, d, vals[g]);
      const auto lefts = enumerate_block(data, hyper, std::move(parts.left), depth + 1);
      const auto rights = enumerate_block(data, hyper, std::move(parts.right), depth + 1);
      const double log_cut = log_choice + std::log((vals[g + 1] - vals[g]) / extent);
      const std::string prefix = "d" + std::to_string(d) + "g" + std::to_string(g) + "(";
      for (const auto& l : lefts) {
        for (const auto& r : rights) {
          EnumeratedTree t;
          t.key = prefix + l.key + "," + r.key + ")";
          t.log_prior_mass = log_cut + l.log_prior_mass + r.log_prior_mass;
          t.log_lik = l.log_lik + r.log_lik;
          t.num_nodes = 1 + l.num_nodes + r.num_nodes;
          t.depth = 1 + std::max(l.depth, r.depth);
          out.push_back(std::move(t));
        }
      }
    }
  }
  return out;
}

std::string key_of(const DecisionTree& tree, NodeIndex i, std::vector<std::uint32_t> indices) {
  const auto& n = tree.node(i);
  if (n.is_leaf()) return "L";
  const Dataset& data = tree.dataset();
  const auto vals = distinct_values(data, indices, n.cut.dim);
  const auto below = std::upper_bound(vals.begin(), vals.end(), n.cut.loc) - vals.begin();
  if (below == 0 || below == static_cast<std::ptrdiff_t>(vals.size())) {
    throw InvalidStateError("node '" + n.path + "' has a cut outside its block");
  }
  auto parts = partition(data, indices, n.cut.dim, n.cut.loc);
  return "d" + std::to_string(n.cut.dim) + "g" + std::to_string(below - 1) + "(" +
         key_of(tree, n.left, std::move(parts.left)) + "," +
         key_of(tree, n.right, std::move(parts.right)) + ")";
}

}  // namespace

std::size_t count_trees(const Dataset& data, std::size_t cap) {
  return TreeCounter(data, cap).count(all_rows(data));
}

EnumeratedPosterior enumerate_posterior(const Dataset& data, const Hyperparams& hyper,
                                        std::size_t max_trees) {
  hyper.validate();
  const std::size_t n = count_trees(data, max_trees);
  if (n > max_trees) {
    throw InstanceTooLargeError("instance supports more than " + std::to_string(max_trees) +
                                " trees; exact enumeration refused");
  }
  EnumeratedPosterior post;
  post.trees = enumerate_block(data, hyper, all_rows(data), 0);
  std::vector<double> joint;
  joint.reserve(post.trees.size());
  for (const auto& t : post.trees) joint.push_back(t.log_prior_mass + t.log_lik);
  post.log_marginal = log_sum_exp(joint);
  return post;
}

std::string structure_key(const DecisionTree& tree) {
  return key_of(tree, DecisionTree::root(), all_rows(tree.dataset()));
}

}  // namespace treesmc
