#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace treesmc {

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Model hyperparameters: symmetric Dirichlet concentration over the K classes
// of a leaf, and the depth-dependent split probability alpha_split / (1 + depth)^beta_split.
struct Hyperparams {
  double alpha = 5.0;
  double alpha_split = 0.95;
  double beta_split = 0.5;

  void validate() const;
};

// Log Dirichlet-Multinomial marginal likelihood of a leaf's class counts,
// with per-class concentration alpha / K (K = counts.size()):
//
//   Gamma(alpha) / Gamma(alpha/K)^K * prod_k Gamma(m_k + alpha/K) / Gamma(n + alpha)
//
// Exactly 0 for an empty leaf.
double dm_log_lik(std::span<const std::int64_t> counts, double alpha);

// Probability that a node at `depth` is split under the tree prior.
double split_prob(std::size_t depth, double alpha_split, double beta_split);
inline double split_prob(std::size_t depth, const Hyperparams& h) {
  return split_prob(depth, h.alpha_split, h.beta_split);
}

// Posterior predictive class distribution of a leaf: (m_k + alpha/K) / (n + alpha).
std::vector<double> leaf_predictive(std::span<const std::int64_t> counts, double alpha);

// log(sum(exp(v))). Returns -inf for an empty span or all -inf entries.
double log_sum_exp(std::span<const double> values);

}  // namespace treesmc
