#pragma once

#include <limits>
#include <span>
#include <string_view>

#include "treesmc/random.hpp"
#include "treesmc/tree.hpp"

namespace treesmc {

enum class ProposalKind { prior, empirical, optimal };

ProposalKind parse_proposal(std::string_view name);
std::string_view to_string(ProposalKind kind);

// Stop/split decision sampled for one candidate node, with the log densities
// the weight update needs. For a split, densities are with respect to the cut
// location (Lebesgue) times counting measure on the dimension.
struct ProposalOutcome {
  NodeIndex node = kNoNode;
  bool split = false;
  Cut cut;
  double log_proposal = 0.0;
  double log_prior = 0.0;
  // log Z_p of the optimal kernel; NaN for the other kernels.
  double log_normalizer = std::numeric_limits<double>::quiet_NaN();
};

// Samples from the generative prior. Proposal and prior densities coincide.
ProposalOutcome propose_prior(const DecisionTree& tree, NodeIndex candidate, Rng& rng);

// Prior stop/split and dimension, but the location is drawn by picking one of
// the gaps between adjacent distinct block values uniformly, then uniformly
// inside that gap.
ProposalOutcome propose_empirical(const DecisionTree& tree, NodeIndex candidate, Rng& rng);

// One-step optimal kernel: the stop/split decision, dimension and interval are
// drawn in proportion to prior mass times the resulting leaf likelihoods, then
// the location uniformly inside the interval.
ProposalOutcome propose_optimal(const DecisionTree& tree, NodeIndex candidate, Rng& rng);

ProposalOutcome propose(ProposalKind kind, const DecisionTree& tree, NodeIndex candidate, Rng& rng);

// Applies the decision to the tree and returns the change in its leaf
// log-likelihood.
double apply_outcome(DecisionTree& tree, const ProposalOutcome& outcome, std::size_t stage);

// Increment of the log importance weight for one stage:
//   sum(log prior - log proposal) + log-likelihood change.
double weight_increment(std::span<const ProposalOutcome> outcomes, double log_lik_delta);

// Same increment for the optimal kernel, where it reduces to
//   sum(log Z_p - log l(Y_p)) over the candidates' pre-decision leaf terms.
double optimal_weight_increment(std::span<const ProposalOutcome> outcomes,
                                std::span<const double> candidate_log_liks);

}  // namespace treesmc
