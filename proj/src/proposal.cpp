#include "treesmc/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace treesmc {

ProposalKind parse_proposal(std::string_view name) {
  if (name == "prior") return ProposalKind::prior;
  if (name == "empirical") return ProposalKind::empirical;
  if (name == "optimal") return ProposalKind::optimal;
  throw std::invalid_argument("unknown proposal '" + std::string(name) + "'");
}

std::string_view to_string(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::prior:
      return "prior";
    case ProposalKind::empirical:
      return "empirical";
    case ProposalKind::optimal:
      return "optimal";
  }
  return "?";
}

namespace {

double log_stop_prior(const BlockStats& stats, std::size_t depth, const Hyperparams& h) {
  return stats.valid_dims.empty() ? 0.0 : std::log1p(-split_prob(depth, h));
}

double log_split_prior(const BlockStats& stats, std::size_t depth, const Hyperparams& h,
                       std::size_t dim) {
  return std::log(split_prob(depth, h)) - std::log(static_cast<double>(stats.valid_dims.size())) -
         std::log(stats.extents[dim].length());
}

// Uniform on [lo, hi); hi itself would put every point on the left.
double uniform_in(double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  double x;
  do {
    x = u(rng);
  } while (x >= hi);
  return x;
}

}  // namespace

ProposalOutcome propose_prior(const DecisionTree& tree, NodeIndex candidate, Rng& rng) {
  const auto& stats = tree.block(candidate).stats();
  const std::size_t depth = tree.node(candidate).depth();
  const PriorDraw d = draw_prior_decision(stats, depth, tree.hyper(), rng);
  ProposalOutcome out;
  out.node = candidate;
  out.split = d.split;
  out.cut = d.cut;
  out.log_prior = d.split ? log_split_prior(stats, depth, tree.hyper(), d.cut.dim)
                          : log_stop_prior(stats, depth, tree.hyper());
  out.log_proposal = out.log_prior;
  return out;
}

ProposalOutcome propose_empirical(const DecisionTree& tree, NodeIndex candidate, Rng& rng) {
  const auto& stats = tree.block(candidate).stats();
  const std::size_t depth = tree.node(candidate).depth();
  const Hyperparams& h = tree.hyper();
  ProposalOutcome out;
  out.node = candidate;
  if (!stats.valid_dims.empty()) {
    std::bernoulli_distribution split(split_prob(depth, h));
    out.split = split(rng);
  }
  if (!out.split) {
    out.log_prior = out.log_proposal = log_stop_prior(stats, depth, h);
    return out;
  }
  std::uniform_int_distribution<std::size_t> pick_dim(0, stats.valid_dims.size() - 1);
  const std::size_t dim = stats.valid_dims[pick_dim(rng)];
  const auto values = distinct_values(tree.dataset(), stats.indices, dim);
  const std::size_t gaps = values.size() - 1;
  std::uniform_int_distribution<std::size_t> pick_gap(0, gaps - 1);
  const std::size_t g = pick_gap(rng);
  out.cut = {dim, uniform_in(values[g], values[g + 1], rng)};
  out.log_prior = log_split_prior(stats, depth, h, dim);
  out.log_proposal = std::log(split_prob(depth, h)) -
                     std::log(static_cast<double>(stats.valid_dims.size())) -
                     std::log(static_cast<double>(gaps)) - std::log(values[g + 1] - values[g]);
  return out;
}

ProposalOutcome propose_optimal(const DecisionTree& tree, NodeIndex candidate, Rng& rng) {
  const Block& block = tree.block(candidate);
  const auto& stats = block.stats();
  const std::size_t depth = tree.node(candidate).depth();
  const SplitTable& table = block.split_table(tree.dataset(), tree.hyper(), depth);

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  auto it = std::upper_bound(table.cumulative.begin(), table.cumulative.end(), u);
  std::size_t choice = static_cast<std::size_t>(it - table.cumulative.begin());
  choice = std::min(choice, table.cumulative.size() - 1);

  ProposalOutcome out;
  out.node = candidate;
  out.log_normalizer = table.log_normalizer;
  if (choice == 0) {
    out.log_prior = log_stop_prior(stats, depth, tree.hyper());
    out.log_proposal = table.log_stop_weight - table.log_normalizer;
    return out;
  }
  const SplitCandidate& c = table.splits[choice - 1];
  out.split = true;
  out.cut = {c.dim, uniform_in(c.lo, c.hi, rng)};
  out.log_prior = log_split_prior(stats, depth, tree.hyper(), c.dim);
  out.log_proposal = c.log_weight - table.log_normalizer - std::log(c.hi - c.lo);
  return out;
}

ProposalOutcome propose(ProposalKind kind, const DecisionTree& tree, NodeIndex candidate, Rng& rng) {
  switch (kind) {
    case ProposalKind::prior:
      return propose_prior(tree, candidate, rng);
    case ProposalKind::empirical:
      return propose_empirical(tree, candidate, rng);
    case ProposalKind::optimal:
      return propose_optimal(tree, candidate, rng);
  }
  throw std::invalid_argument("unknown proposal kind");
}

double apply_outcome(DecisionTree& tree, const ProposalOutcome& outcome, std::size_t stage) {
  if (!outcome.split) {
    tree.stop(outcome.node, stage);
    return 0.0;
  }
  const double before = tree.node(outcome.node).log_lik;
  const auto [l, r] = tree.split(outcome.node, outcome.cut, stage);
  return tree.node(l).log_lik + tree.node(r).log_lik - before;
}

double weight_increment(std::span<const ProposalOutcome> outcomes, double log_lik_delta) {
  double inc = log_lik_delta;
  for (const auto& o : outcomes) inc += o.log_prior - o.log_proposal;
  return inc;
}

double optimal_weight_increment(std::span<const ProposalOutcome> outcomes,
                                std::span<const double> candidate_log_liks) {
  if (outcomes.size() != candidate_log_liks.size()) {
    throw std::invalid_argument("optimal_weight_increment: size mismatch");
  }
  double inc = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    inc += outcomes[i].log_normalizer - candidate_log_liks[i];
  }
  return inc;
}

}  // namespace treesmc
