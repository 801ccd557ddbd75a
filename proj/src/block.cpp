#include "treesmc/block.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace treesmc {

BlockStats block_stats(const Dataset& data, std::vector<std::uint32_t> indices) {
  if (indices.empty()) throw ContractError("block_stats: empty index set");
  const std::size_t dims = data.num_features();
  BlockStats s;
  s.class_counts.assign(data.num_classes(), 0);
  s.extents.resize(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    s.extents[d].lo = std::numeric_limits<double>::infinity();
    s.extents[d].hi = -std::numeric_limits<double>::infinity();
  }
  for (std::uint32_t n : indices) {
    if (n >= data.size()) {
      throw ContractError("block_stats: index " + std::to_string(n) + " out of range");
    }
    ++s.class_counts[data.label(n)];
    auto x = data.row(n);
    for (std::size_t d = 0; d < dims; ++d) {
      s.extents[d].lo = std::min(s.extents[d].lo, x[d]);
      s.extents[d].hi = std::max(s.extents[d].hi, x[d]);
    }
  }
  for (std::size_t d = 0; d < dims; ++d) {
    if (s.extents[d].hi > s.extents[d].lo) s.valid_dims.push_back(d);
  }
  s.indices = std::move(indices);
  return s;
}

std::vector<double> distinct_values(const Dataset& data, std::span<const std::uint32_t> indices,
                                    std::size_t dim) {
  std::vector<double> v;
  v.reserve(indices.size());
  for (std::uint32_t n : indices) v.push_back(data.feature(n, dim));
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

SplitTable build_split_table(const Dataset& data, const BlockStats& stats, const Hyperparams& hyper,
                             std::size_t depth) {
  const std::size_t num_classes = data.num_classes();
  const double alpha = hyper.alpha;
  const double a = alpha / static_cast<double>(num_classes);
  const double block_ll = dm_log_lik(stats.class_counts, alpha);

  SplitTable t;
  if (stats.valid_dims.empty()) {
    t.log_stop_weight = block_ll;
  } else {
    const double sp = split_prob(depth, hyper);
    t.log_stop_weight = std::log1p(-sp) + block_ll;
    const double base = std::log(sp) - std::log(static_cast<double>(stats.valid_dims.size()));

    const std::size_t n = stats.indices.size();
    std::vector<std::pair<double, std::uint32_t>> sorted(n);
    std::vector<std::int64_t> counts(num_classes);
    std::vector<double> left_ll;   // log-lik of groups [0, j]
    std::vector<double> right_ll;  // log-lik of groups [j, u)
    std::vector<std::size_t> group_end;

    for (std::size_t d : stats.valid_dims) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t idx = stats.indices[i];
        sorted[i] = {data.feature(idx, d), data.label(idx)};
      }
      std::sort(sorted.begin(), sorted.end());

      group_end.clear();
      for (std::size_t i = 1; i < n; ++i) {
        if (sorted[i].first != sorted[i - 1].first) group_end.push_back(i);
      }
      group_end.push_back(n);
      const std::size_t groups = group_end.size();

      // The Dirichlet-Multinomial likelihood telescopes into a product of
      // sequential predictive probabilities, so prefix and suffix terms are
      // accumulated one point at a time.
      left_ll.assign(groups, 0.0);
      std::fill(counts.begin(), counts.end(), 0);
      double ll = 0.0;
      std::size_t i = 0;
      for (std::size_t g = 0; g < groups; ++g) {
        for (; i < group_end[g]; ++i) {
          const auto k = sorted[i].second;
          ll += std::log(static_cast<double>(counts[k]) + a) - std::log(static_cast<double>(i) + alpha);
          ++counts[k];
        }
        left_ll[g] = ll;
      }
      right_ll.assign(groups, 0.0);
      std::fill(counts.begin(), counts.end(), 0);
      ll = 0.0;
      std::size_t taken = 0;
      std::size_t j = n;
      for (std::size_t g = groups; g-- > 0;) {
        const std::size_t begin = g == 0 ? 0 : group_end[g - 1];
        for (; j > begin; --j, ++taken) {
          const auto k = sorted[j - 1].second;
          ll += std::log(static_cast<double>(counts[k]) + a) - std::log(static_cast<double>(taken) + alpha);
          ++counts[k];
        }
        right_ll[g] = ll;
      }

      const double log_extent = std::log(stats.extents[d].length());
      for (std::size_t g = 0; g + 1 < groups; ++g) {
        SplitCandidate c;
        c.dim = static_cast<std::uint32_t>(d);
        c.left_count = static_cast<std::uint32_t>(group_end[g]);
        c.lo = sorted[group_end[g] - 1].first;
        c.hi = sorted[group_end[g]].first;
        c.log_weight = base - log_extent + std::log(c.hi - c.lo) + left_ll[g] + right_ll[g + 1];
        t.splits.push_back(c);
      }
    }
  }

  std::vector<double> logs;
  logs.reserve(t.splits.size() + 1);
  logs.push_back(t.log_stop_weight);
  for (const auto& c : t.splits) logs.push_back(c.log_weight);
  t.log_normalizer = log_sum_exp(logs);
  if (!std::isfinite(t.log_normalizer)) {
    throw std::range_error("split table normalizer is not finite");
  }
  t.cumulative.resize(logs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    acc += std::exp(logs[i] - t.log_normalizer);
    t.cumulative[i] = acc;
  }
  return t;
}

Block::Block(const Dataset& data, std::vector<std::uint32_t> indices)
    : stats_(block_stats(data, std::move(indices))) {}

std::pair<std::shared_ptr<const Block>, std::shared_ptr<const Block>> Block::children(
    const Dataset& data, std::size_t dim, double loc) const {
  std::uint32_t left_count = 0;
  for (std::uint32_t n : stats_.indices) left_count += data.feature(n, dim) <= loc ? 1 : 0;
  if (left_count == 0 || left_count == stats_.indices.size()) return {};

  const std::uint64_t key = (static_cast<std::uint64_t>(dim) << 32) | left_count;
  auto& entry = children_[key];
  auto left = entry.left.lock();
  auto right = entry.right.lock();
  if (left && right) return {left, right};

  std::vector<std::uint32_t> li, ri;
  li.reserve(left_count);
  ri.reserve(stats_.indices.size() - left_count);
  for (std::uint32_t n : stats_.indices) (data.feature(n, dim) <= loc ? li : ri).push_back(n);
  // Not make_shared: the cache holds weak references, and the storage of a
  // released child should not outlive it.
  left = std::shared_ptr<const Block>(new Block(data, std::move(li)));
  right = std::shared_ptr<const Block>(new Block(data, std::move(ri)));
  entry.left = left;
  entry.right = right;
  return {left, right};
}

const SplitTable& Block::split_table(const Dataset& data, const Hyperparams& hyper,
                                     std::size_t depth) const {
  const TableKey key{hyper.alpha, hyper.alpha_split, hyper.beta_split, depth};
  if (!table_ || !(table_->first == key)) {
    table_.emplace(key, build_split_table(data, stats_, hyper, depth));
  }
  return table_->second;
}

}  // namespace treesmc
