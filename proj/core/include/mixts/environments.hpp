#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "mixts/feature_table.hpp"
#include "mixts/linalg.hpp"
#include "mixts/linear_bandit.hpp"
#include "mixts/mixture_core.hpp"
#include "mixts/tabular_mdp.hpp"

namespace mixts {

struct BanditRound {
  ActionSet actions;
  Vector true_means;  // expected reward of each action under the true model
};

// A linear-bandit environment with a fixed (hidden) model.
//
// Each round makes exactly the same sequence of draws from the round
// stream whatever the agent does, so agents run against copies of one
// environment see the same action sets and reward noise.
class LinearEnvironment {
 public:
  virtual ~LinearEnvironment() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t true_latent() const = 0;
  virtual BanditRound begin_round(RngStream& rng) = 0;
  // Reward for playing `chosen` in the current round.
  virtual double reward(std::size_t chosen, RngStream& rng) = 0;
};

// Mixture prior with component s mean 0.9 e_s + 0.1 (1 - e_s), covariance
// sigma0^2 I, uniform latent prior and noise sd `sigma`. ConfigError when
// L > d or sigma0 < 0.
GaussianMixturePrior synthetic_linear_prior(std::size_t d, std::size_t num_latent,
                                            double sigma0, double sigma);

// Single Gaussian with the mixture's mean and covariance (law of total
// covariance).
GaussianMixturePrior moment_matched_prior(const GaussianMixturePrior& prior);

// Indicator actions e_1..e_d, Gaussian rewards N(a^T theta, sigma^2) with
// (S, theta) drawn from `prior`.
class SyntheticLinearEnv final : public LinearEnvironment {
 public:
  SyntheticLinearEnv(const GaussianMixturePrior& prior, RngStream& rng);

  std::size_t dim() const override { return static_cast<std::size_t>(theta_.size()); }
  std::size_t true_latent() const override { return latent_; }
  const Vector& true_theta() const { return theta_; }

  BanditRound begin_round(RngStream& rng) override;
  double reward(std::size_t chosen, RngStream& rng) override;

 private:
  std::size_t latent_;
  Vector theta_;
  double sigma_;
  ActionSet actions_;
};

struct SyntheticLinearInstance {
  GaussianMixturePrior prior;
  std::unique_ptr<SyntheticLinearEnv> env;
  std::size_t true_latent;
  Vector true_theta;
};

SyntheticLinearInstance synthetic_linear_env(std::size_t d, std::size_t num_latent,
                                             double sigma0, double sigma, RngStream& rng);

struct FeatureEnvOptions {
  double reward_hi = 0.9;
  double reward_lo = 0.1;
  std::size_t k_actions = 10;
};

// Classification bandit over a feature table. The latent state is a class
// drawn uniformly; each round shows k_actions rows, one of which is forced
// to come from that class, and rewards are Bernoulli(reward_hi) for rows of
// that class and Bernoulli(reward_lo) otherwise. ConfigError when some
// class has no rows or k_actions is 0.
class FeatureFileEnv final : public LinearEnvironment {
 public:
  FeatureFileEnv(std::shared_ptr<const FeatureTable> table, FeatureEnvOptions options,
                 RngStream& rng);

  std::size_t dim() const override { return table_->dim(); }
  std::size_t true_latent() const override { return latent_; }

  BanditRound begin_round(RngStream& rng) override;
  double reward(std::size_t chosen, RngStream& rng) override;

 private:
  std::shared_ptr<const FeatureTable> table_;
  FeatureEnvOptions options_;
  std::vector<std::vector<std::size_t>> by_class_;
  std::size_t latent_;
  Vector current_means_;
};

std::unique_ptr<FeatureFileEnv> feature_file_env(const std::filesystem::path& path,
                                                 FeatureEnvOptions options, RngStream& rng);

// An episodic tabular environment: the true MDP drawn from component S of
// a mixture prior.
class TabularEnvironment {
 public:
  TabularEnvironment(const MDPMixturePrior& prior, RngStream& rng);
  TabularEnvironment(TabularMDP mdp, std::size_t latent);

  const TabularMDP& mdp() const { return mdp_; }
  std::size_t true_latent() const { return latent_; }
  const Policy& optimal_policy() const { return optimal_; }
  double optimal_value() const { return optimal_value_; }

  struct Step {
    std::size_t x;
    std::size_t a;
    int r;
    std::size_t x_next;
  };
  // Rolls `policy` out for one episode.
  std::vector<Step> run_episode(const Policy& policy, RngStream& rng) const;

 private:
  TabularMDP mdp_;
  std::size_t latent_;
  Policy optimal_;
  double optimal_value_;
};

}  // namespace mixts
