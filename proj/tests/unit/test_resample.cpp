#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "helpers.hpp"
#include "treesmc/resample.hpp"
#include "treesmc/smc.hpp"

using namespace treesmc;

TEST(Resample, NormalizedWeights) {
  const std::vector<double> lw{std::log(1.0), std::log(3.0), -INFINITY};
  auto w = normalized_weights(lw);
  EXPECT_NEAR(w[0], 0.25, 1e-15);
  EXPECT_NEAR(w[1], 0.75, 1e-15);
  EXPECT_EQ(w[2], 0.0);
  EXPECT_THROW(normalized_weights(std::vector<double>{-INFINITY, -INFINITY}),
               DegeneratePopulationError);
  EXPECT_THROW(normalized_weights(std::vector<double>{0.0, NAN}), DegeneratePopulationError);
}

TEST(Resample, EssBounds) {
  EXPECT_NEAR(ess(std::vector<double>(10, -3.0)), 10.0, 1e-12);
  EXPECT_NEAR(ess(std::vector<double>{0.0, -INFINITY, -INFINITY}), 1.0, 1e-12);
  Rng rng(2);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> lw(1 + t % 50);
    for (double& v : lw) v = z(rng);
    const double e = ess(lw);
    EXPECT_GE(e, 1.0);
    EXPECT_LE(e, static_cast<double>(lw.size()) + 1e-9);
  }
}

TEST(Resample, SystematicPositions) {
  const std::vector<double> w{0.1, 0.4, 0.5};
  EXPECT_EQ(resample_systematic(w, 4, 0.0), (std::vector<std::size_t>{0, 1, 2, 2}));
  EXPECT_EQ(resample_systematic(w, 4, 0.5), (std::vector<std::size_t>{1, 1, 2, 2}));
  EXPECT_EQ(resample_systematic(std::vector<double>{0.0, 1.0, 0.0}, 3, 0.999),
            (std::vector<std::size_t>{1, 1, 1}));
}

TEST(Resample, SystematicCountsWithinOne) {
  const std::vector<double> w{0.05, 0.3, 0.15, 0.5};
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    auto a = resample_systematic(w, 100, rng);
    std::vector<int> counts(4, 0);
    for (auto i : a) ++counts[i];
    for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(std::abs(counts[i] - 100 * w[i]), 1.0 + 1e-9);
  }
}

TEST(Resample, MultinomialChiSquare) {
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  Rng rng(8);
  const std::size_t n = 100000;
  auto a = resample_multinomial(w, n, rng);
  std::vector<double> counts(4, 0.0);
  for (auto i : a) ++counts[i];
  double chi2 = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double e = n * w[i];
    chi2 += (counts[i] - e) * (counts[i] - e) / e;
  }
  boost::math::chi_squared dist(3);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.001) << chi2;
}

TEST(Resample, NeverPicksZeroWeight) {
  const std::vector<double> w{0.0, 0.5, 0.0, 0.5, 0.0};
  Rng rng(1);
  for (auto kind : {ResamplerKind::multinomial, ResamplerKind::systematic}) {
    for (auto i : resample(kind, w, 1000, rng)) EXPECT_TRUE(i == 1 || i == 3);
  }
}

TEST(Resample, PopulationPreservesNormalizer) {
  auto d = testing_util::random_dataset(30, 2, 2, 3);
  for (auto kind : {ResamplerKind::multinomial, ResamplerKind::systematic}) {
    ParticlePopulation pop(d, Hyperparams{}, 64);
    SmcConfig config;
    config.proposal = ProposalKind::empirical;
    Rng rng(11);
    for (int s = 0; s < 4; ++s) pop.advance(config, rng);
    const double before = pop.log_normalizer();
    pop.resample(kind, rng);
    EXPECT_NEAR(pop.log_normalizer(), before, 1e-9);
    EXPECT_NEAR(pop.ess(), 64.0, 1e-9);
    for (double lw : pop.log_weights()) EXPECT_NEAR(lw, before, 1e-12);
  }
}

TEST(Resample, ParseNames) {
  EXPECT_EQ(parse_resampler("systematic"), ResamplerKind::systematic);
  EXPECT_EQ(parse_resampler("multinomial"), ResamplerKind::multinomial);
  EXPECT_THROW(parse_resampler("stratified"), std::invalid_argument);
}
