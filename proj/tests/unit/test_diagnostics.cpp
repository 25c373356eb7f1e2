#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mixts/diagnostics.hpp"
#include "mixts/errors.hpp"
#include "mixts/mixture_core.hpp"

namespace {

using namespace mixts;

TEST(Diagnostics, OverEstimationIsARunningSum) {
  auto diag = bandit_diagnostics(3, 100.0, 2);
  for (double inc : {0.1, -0.2, 0.3}) diag = record_bandit_round(std::move(diag), 1, inc, 0.0, 0.0);
  EXPECT_NEAR(diag.over_estimation[1], 0.2, 1e-15);
  EXPECT_EQ(diag.visits[1], 3u);
  EXPECT_EQ(diag.over_estimation[0], 0.0);
  EXPECT_EQ(diag.rounds(), 3u);
}

TEST(Diagnostics, BanditEtaAndWidthTerm) {
  const double n = 1000.0;
  auto diag = bandit_diagnostics(1, n, 10);
  EXPECT_NEAR(diag.eta, std::sqrt(2.0 * std::log(n) / std::log(10.0 * n)), 1e-15);
  diag = record_bandit_round(std::move(diag), 0, 0.5, 0.25, 0.1);
  EXPECT_NEAR(diag.over_estimation[0], 0.5 - diag.eta * 0.25 - 0.1, 1e-15);
}

TEST(Diagnostics, MatchesBatchReplay) {
  RngStream rng(1, 1);
  const std::size_t L = 4;
  auto diag = bandit_diagnostics(L, 500.0, 5);
  std::vector<double> mu, w, y;
  std::vector<std::size_t> who;
  for (int t = 0; t < 300; ++t) {
    who.push_back(rng.uniform_index(L));
    mu.push_back(rng.normal());
    w.push_back(rng.uniform());
    y.push_back(rng.normal());
    diag = record_bandit_round(std::move(diag), who.back(), mu.back(), w.back(), y.back());
  }
  for (std::size_t s = 0; s < L; ++s) {
    double g = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < who.size(); ++t) {
      if (who[t] != s) continue;
      g += mu[t] - diag.eta * w[t] - y[t];
      ++count;
    }
    EXPECT_NEAR(diag.over_estimation[s], g, 1e-12);
    EXPECT_EQ(diag.visits[s], count);
  }
}

TEST(Diagnostics, MdpUsesRootTwoTimesHorizon) {
  auto diag = mdp_diagnostics(2, 50.0);
  EXPECT_DOUBLE_EQ(diag.eta, std::sqrt(2.0));
  diag = record_mdp_episode(std::move(diag), 0, 3.0, 0.5, 1.0, 4);
  EXPECT_NEAR(diag.over_estimation[0], 3.0 - 4.0 * std::sqrt(2.0) * 0.5 - 1.0, 1e-15);
}

TEST(ConfidenceSet, AllZeroKeepsEveryone) {
  const auto diag = bandit_diagnostics(5, 100.0, 3);
  EXPECT_EQ(confidence_set(diag, Setting::kBandit, 0.1), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(confidence_set(diag, Setting::kMdp, 10.0).size(), 5u);
}

TEST(ConfidenceSet, LargeOverEstimationExcluded) {
  auto diag = bandit_diagnostics(3, 100.0, 3);
  diag = record_bandit_round(std::move(diag), 2, 1e6, 0.0, 0.0);
  EXPECT_EQ(confidence_set(diag, Setting::kBandit, 0.1), (std::vector<std::size_t>{0, 1}));
  EXPECT_FALSE(in_confidence_set(diag, Setting::kBandit, 0.1, 2));
}

TEST(ConfidenceSet, BoundaryIsInclusive) {
  const double n = 64.0;
  auto bandit = bandit_diagnostics(1, n, 2);
  bandit.over_estimation[0] = 2.0 * 0.5 * std::sqrt(4.0 * std::log(n));
  bandit.visits[0] = 4;
  EXPECT_TRUE(in_confidence_set(bandit, Setting::kBandit, 0.5, 0));
  bandit.over_estimation[0] = std::nextafter(bandit.over_estimation[0], 1e9);
  EXPECT_FALSE(in_confidence_set(bandit, Setting::kBandit, 0.5, 0));

  auto mdp = mdp_diagnostics(1, n);
  mdp.over_estimation[0] = std::sqrt(5.0 * 3.0 * std::log(n));
  mdp.visits[0] = 3;
  EXPECT_TRUE(in_confidence_set(mdp, Setting::kMdp, 5.0, 0));
}

TEST(Diagnostics, RejectsBadInput) {
  auto diag = mdp_diagnostics(2, 10.0);
  EXPECT_THROW(record_mdp_episode(diag, 2, 0.0, 0.0, 0.0, 1), InputError);
  EXPECT_THROW(record_mdp_episode(diag, 0, std::nan(""), 0.0, 0.0, 1), InputError);
  EXPECT_THROW(mdp_diagnostics(2, 1.0), DomainError);
  EXPECT_THROW(bandit_diagnostics(2, 1.0, 4), DomainError);
}

}  // namespace
