#include <random>

#include "treesmc/tree.hpp"

namespace treesmc {

PriorDraw draw_prior_decision(const BlockStats& stats, std::size_t depth, const Hyperparams& hyper,
                              Rng& rng) {
  PriorDraw out;
  if (stats.valid_dims.empty()) return out;
  std::bernoulli_distribution split(split_prob(depth, hyper));
  if (!split(rng)) return out;
  std::uniform_int_distribution<std::size_t> pick(0, stats.valid_dims.size() - 1);
  out.split = true;
  out.cut.dim = stats.valid_dims[pick(rng)];
  const Extent e = stats.extents[out.cut.dim];
  std::uniform_real_distribution<double> loc(e.lo, e.hi);
  do {
    out.cut.loc = loc(rng);
  } while (out.cut.loc >= e.hi);
  return out;
}

DecisionTree sample_prior_tree(const Dataset& data, const Hyperparams& hyper, Rng& rng) {
  DecisionTree tree(data, hyper);
  std::size_t stage = 0;
  while (!tree.complete()) {
    ++stage;
    // eligible() is kept in creation order, so its front is the oldest leaf.
    const NodeIndex p = tree.eligible().front();
    const PriorDraw d = draw_prior_decision(tree.block(p).stats(), tree.node(p).depth(), hyper, rng);
    if (d.split) {
      tree.split(p, d.cut, stage);
    } else {
      tree.stop(p, stage);
    }
  }
  return tree;
}

}  // namespace treesmc
