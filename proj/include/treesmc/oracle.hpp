#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "treesmc/dataset.hpp"
#include "treesmc/likelihood.hpp"
#include "treesmc/tree.hpp"

namespace treesmc {

class InstanceTooLargeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One tree skeleton of the exact posterior. Internal nodes carry a cut
// dimension and the index of the gap between adjacent distinct block values
// the cut falls in; the likelihood is constant over that gap, so its prior
// mass integrates to (gap length / extent).
struct EnumeratedTree {
  std::string key;  // see structure_key()
  double log_prior_mass = 0.0;
  double log_lik = 0.0;
  std::size_t num_nodes = 0;
  std::size_t depth = 0;
};

struct EnumeratedPosterior {
  std::vector<EnumeratedTree> trees;
  double log_marginal = 0.0;  // log sum(prior mass * likelihood)

  double log_posterior(std::size_t i) const {
    return trees[i].log_prior_mass + trees[i].log_lik - log_marginal;
  }
};

// Enumerates every complete tree the prior supports. Throws
// InstanceTooLargeError before enumerating if there would be more than
// max_trees of them.
EnumeratedPosterior enumerate_posterior(const Dataset& data, const Hyperparams& hyper,
                                        std::size_t max_trees = 1'000'000);

// Number of supported tree skeletons, saturating at `cap + 1`.
std::size_t count_trees(const Dataset& data, std::size_t cap);

// Canonical skeleton of a tree: "L" for a leaf, "d<dim>g<gap>(<left>,<right>)"
// for an internal node, where gap indexes the interval of the block's distinct
// values along dim that contains the cut.
std::string structure_key(const DecisionTree& tree);

}  // namespace treesmc
