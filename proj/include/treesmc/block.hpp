#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "treesmc/dataset.hpp"
#include "treesmc/likelihood.hpp"

namespace treesmc {

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Extent {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

// Sufficient statistics of the data points that fall in one node's block.
struct BlockStats {
  std::vector<std::uint32_t> indices;
  std::vector<std::size_t> valid_dims;  // dims with extent length > 0, ascending
  std::vector<Extent> extents;          // one per feature dimension
  std::vector<std::int64_t> class_counts;
};

// Throws ContractError for an empty index set or an out-of-range index.
BlockStats block_stats(const Dataset& data, std::vector<std::uint32_t> indices);

// Strictly increasing distinct values of feature `dim` over `indices`.
std::vector<double> distinct_values(const Dataset& data, std::span<const std::uint32_t> indices,
                                    std::size_t dim);

struct SplitCandidate {
  std::uint32_t dim = 0;
  std::uint32_t left_count = 0;  // points with x[dim] <= lo
  double lo = 0.0;               // adjacent distinct values bounding the interval
  double hi = 0.0;
  double log_weight = 0.0;
};

// Unnormalized one-step posterior weights of every stop/split choice at a
// block. A split weight covers the whole open interval (lo, hi), so it already
// includes the interval length.
struct SplitTable {
  double log_stop_weight = 0.0;
  std::vector<SplitCandidate> splits;
  double log_normalizer = 0.0;
  std::vector<double> cumulative;  // cumulative probabilities: stop first, then splits
};

SplitTable build_split_table(const Dataset& data, const BlockStats& stats,
                             const Hyperparams& hyper, std::size_t depth);

// A block with cached derived quantities, shared between the trees (particles)
// that contain it. Caches are filled lazily and are not synchronized: a block
// must only be used from one thread at a time. Islands never share blocks.
class Block {
 public:
  Block(const Dataset& data, std::vector<std::uint32_t> indices);

  const BlockStats& stats() const { return stats_; }
  std::size_t size() const { return stats_.indices.size(); }

  // Partition at x[dim] <= loc. Returns nulls if either side would be empty.
  // Children produced by an identical partition are shared while alive.
  std::pair<std::shared_ptr<const Block>, std::shared_ptr<const Block>> children(
      const Dataset& data, std::size_t dim, double loc) const;

  const SplitTable& split_table(const Dataset& data, const Hyperparams& hyper,
                                std::size_t depth) const;

 private:
  struct TableKey {
    double alpha, alpha_split, beta_split;
    std::size_t depth;
    bool operator==(const TableKey&) const = default;
  };
  struct ChildPair {
    std::weak_ptr<const Block> left, right;
  };

  BlockStats stats_;
  mutable std::optional<std::pair<TableKey, SplitTable>> table_;
  mutable std::unordered_map<std::uint64_t, ChildPair> children_;
};

}  // namespace treesmc
