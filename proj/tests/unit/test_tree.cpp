#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "helpers.hpp"
#include "treesmc/tree.hpp"

using namespace treesmc;

namespace {

// Independent prior density: partitions the data by walking node paths and
// recomputes every stop/split factor from raw feature values.
double replay_prior(const DecisionTree& t) {
  const Dataset& d = t.dataset();
  const Hyperparams& h = t.hyper();
  double total = 0.0;
  for (NodeIndex i = 0; i < static_cast<NodeIndex>(t.size()); ++i) {
    const TreeNode& n = t.node(i);
    if (n.state == NodeState::eligible) continue;
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < d.size(); ++r) {
      NodeIndex cur = t.root();
      bool inside = true;
      for (char step : n.path) {
        const TreeNode& c = t.node(cur);
        const bool left = d.feature(r, c.cut.dim) <= c.cut.loc;
        if (left != (step == '0')) {
          inside = false;
          break;
        }
        cur = left ? c.left : c.right;
      }
      if (inside) rows.push_back(r);
    }
    std::size_t varying = 0;
    std::vector<double> lo(d.num_features(), INFINITY), hi(d.num_features(), -INFINITY);
    for (std::size_t dim = 0; dim < d.num_features(); ++dim) {
      for (auto r : rows) {
        lo[dim] = std::min(lo[dim], d.feature(r, dim));
        hi[dim] = std::max(hi[dim], d.feature(r, dim));
      }
      if (hi[dim] > lo[dim]) ++varying;
    }
    const double sp = h.alpha_split / std::pow(1.0 + double(n.path.size()), h.beta_split);
    if (n.state == NodeState::stopped) {
      if (varying > 0) total += std::log(1.0 - sp);
    } else {
      total += std::log(sp) - std::log(double(varying)) - std::log(hi[n.cut.dim] - lo[n.cut.dim]);
    }
  }
  return total;
}

double leaf_lik_sum(const DecisionTree& t) {
  const Dataset& d = t.dataset();
  std::map<NodeIndex, std::vector<std::int64_t>> counts;
  for (std::size_t r = 0; r < d.size(); ++r) {
    auto& c = counts[t.route(d.row(r))];
    c.resize(d.num_classes());
    ++c[d.label(r)];
  }
  double total = 0.0;
  for (auto& [_, c] : counts) total += testing_util::dm_rising(c, t.hyper().alpha);
  return total;
}

}  // namespace

TEST(DecisionTree, RootOnly) {
  auto d = testing_util::make_dataset(1, {0.1, 0.5}, {0, 1});
  DecisionTree t(d, Hyperparams{2.0, 0.95, 0.0});
  EXPECT_EQ(t.size(), 1u);
  EXPECT_FALSE(t.complete());
  EXPECT_EQ(t.eligible(), std::vector<NodeIndex>{0});
  EXPECT_NEAR(std::exp(t.log_lik()), 1.0 / 6.0, 1e-12);
  EXPECT_EQ(t.log_prior(), 0.0);
}

TEST(DecisionTree, HandEnumeratedTermsOfTwoPointInstance) {
  auto d = testing_util::make_dataset(1, {0.1, 0.5}, {0, 1});
  const Hyperparams h{2.0, 0.95, 0.0};
  DecisionTree stopped(d, h);
  stopped.stop(0);
  EXPECT_NEAR(std::exp(stopped.log_posterior()), 0.05 / 6.0, 1e-12);

  DecisionTree split(d, h);
  auto [l, r] = split.split(0, {0, 0.3});
  split.stop(l);
  split.stop(r);
  EXPECT_TRUE(split.complete());
  // Density over tau on an extent of 0.4; one-point children cannot split.
  EXPECT_NEAR(std::exp(split.log_prior()), 0.95 / 0.4, 1e-12);
  EXPECT_NEAR(std::exp(split.log_lik()), 0.25, 1e-12);
}

TEST(DecisionTree, SplitRejectsInvalidCuts) {
  auto d = testing_util::make_dataset(2, {0.1, 1.0, 0.5, 1.0}, {0, 1});
  DecisionTree t(d, Hyperparams{});
  EXPECT_THROW(t.split(0, {1, 1.0}), InvalidStateError);
  EXPECT_THROW(t.split(0, {0, 0.9}), InvalidStateError);
  EXPECT_THROW(t.split(0, {0, 0.05}), InvalidStateError);
  t.stop(0);
  EXPECT_THROW(t.stop(0), InvalidStateError);
}

TEST(DecisionTree, RouteIsExhaustiveAndConsistentWithBlocks) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto d = testing_util::random_dataset(60, 3, 3, seed);
    Rng rng(seed);
    DecisionTree t = sample_prior_tree(d, Hyperparams{5.0, 0.95, 0.2}, rng);
    ASSERT_TRUE(t.complete());
    std::size_t covered = 0;
    for (NodeIndex leaf : t.leaves()) covered += t.node(leaf).num_points;
    EXPECT_EQ(covered, d.size());
    for (std::size_t r = 0; r < d.size(); ++r) {
      NodeIndex leaf = t.route(d.row(r));
      ASSERT_NE(leaf, kNoNode);
      EXPECT_TRUE(t.node(leaf).is_leaf());
    }
    std::map<NodeIndex, std::int64_t> routed;
    for (std::size_t r = 0; r < d.size(); ++r) ++routed[t.route(d.row(r))];
    for (NodeIndex leaf : t.leaves()) {
      auto c = t.class_counts(leaf);
      EXPECT_EQ(std::accumulate(c.begin(), c.end(), std::int64_t{0}), routed[leaf]);
    }
  }
}

TEST(DecisionTree, IncrementalPriorMatchesReplay) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto d = testing_util::random_dataset(50, 2, 2, seed);
    const Hyperparams h{3.0, 0.95, 0.3};
    Rng rng(seed + 100);
    DecisionTree t = sample_prior_tree(d, h, rng);
    EXPECT_NEAR(t.log_prior(), prior_log_density(t), 1e-9);
    EXPECT_NEAR(t.log_prior(), replay_prior(t), 1e-9);
    EXPECT_NEAR(t.log_lik(), log_lik_from_scratch(t), 1e-9);
    EXPECT_NEAR(t.log_lik(), leaf_lik_sum(t), 1e-9);
  }
}

TEST(DecisionTree, LikelihoodPiecewiseConstantInCutLocation) {
  auto d = testing_util::make_dataset(1, {0.1, 0.3, 0.6, 0.9}, {0, 0, 1, 1});
  auto lik_at = [&](double tau) {
    DecisionTree t(d, Hyperparams{});
    t.split(0, {0, tau});
    return t.log_lik();
  };
  for (double tau : {0.31, 0.4, 0.5, 0.599}) EXPECT_EQ(lik_at(tau), lik_at(0.3));
  EXPECT_EQ(lik_at(0.1), lik_at(0.29));
  EXPECT_NE(lik_at(0.29), lik_at(0.3));
  EXPECT_EQ(lik_at(0.6), lik_at(0.85));
}

TEST(DecisionTree, PruneRestoresParentState) {
  auto d = testing_util::random_dataset(30, 2, 2, 4);
  const Hyperparams h{};
  DecisionTree t(d, h, true);
  t.stop(0);
  const double before_prior = t.log_prior();
  const double before_lik = t.log_lik();
  auto [l, r] = t.split(0, {0, 0.45}, 0, NodeState::stopped);
  t.split(l, {1, 0.5}, 0, NodeState::stopped);
  (void)r;
  t.prune(l);
  t.prune(0);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_NEAR(t.log_prior(), before_prior, 1e-12);
  EXPECT_NEAR(t.log_lik(), before_lik, 1e-12);
}

TEST(DecisionTree, JsonRoundTrip) {
  auto d = testing_util::random_dataset(40, 3, 3, 8);
  Rng rng(3);
  DecisionTree t = sample_prior_tree(d, Hyperparams{}, rng);
  auto j = tree_to_json(t);
  DecisionTree u = tree_from_json(d, Hyperparams{}, j);
  EXPECT_EQ(u.size(), t.size());
  EXPECT_EQ(u.log_prior(), t.log_prior());
  EXPECT_EQ(u.log_lik(), t.log_lik());
  EXPECT_EQ(tree_to_json(u), j);
}

TEST(PriorSampler, TwoPointInstanceSplitFrequency) {
  auto d = testing_util::make_dataset(1, {0.1, 0.5}, {0, 1});
  const Hyperparams h{2.0, 0.7, 0.0};
  Rng rng(1);
  const int n = 20000;
  int splits = 0;
  for (int i = 0; i < n; ++i) splits += sample_prior_tree(d, h, rng).size() == 3;
  const double se = std::sqrt(0.7 * 0.3 / n);
  EXPECT_NEAR(splits / double(n), 0.7, 4 * se);
}

TEST(PriorSampler, DeterministicGivenSeed) {
  auto d = testing_util::random_dataset(40, 2, 2, 1);
  Rng a(99), b(99);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(tree_to_json(sample_prior_tree(d, Hyperparams{}, a)),
              tree_to_json(sample_prior_tree(d, Hyperparams{}, b)));
  }
}
