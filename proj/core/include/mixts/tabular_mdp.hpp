#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mixts/mixture_core.hpp"

namespace mixts {

// Finite-horizon tabular MDP with mean rewards in [0, 1].
//
// Storage is flat and row-major: reward[x * nA + a],
// transition[(x * nA + a) * nX + x'].
struct TabularMDP {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  std::vector<double> reward;
  std::vector<double> transition;
  std::vector<double> initial;

  TabularMDP() = default;
  TabularMDP(std::size_t nX, std::size_t nA, std::size_t h);

  std::size_t pair(std::size_t x, std::size_t a) const { return x * num_actions + a; }
  double mean_reward(std::size_t x, std::size_t a) const { return reward[pair(x, a)]; }
  double& mean_reward(std::size_t x, std::size_t a) { return reward[pair(x, a)]; }
  std::span<const double> next_state_probs(std::size_t x, std::size_t a) const {
    return {transition.data() + pair(x, a) * num_states, num_states};
  }
  std::span<double> next_state_probs(std::size_t x, std::size_t a) {
    return {transition.data() + pair(x, a) * num_states, num_states};
  }
};

// Throws InputError unless rows of T and rho are distributions (1e-9) and
// rewards lie in [0, 1].
void validate(const TabularMDP& mdp);

// Nonstationary deterministic policy: one state->action map per step.
class Policy {
 public:
  Policy(std::size_t horizon, std::size_t num_states, std::size_t fill = 0);

  std::size_t horizon() const { return horizon_; }
  std::size_t num_states() const { return num_states_; }
  std::size_t action(std::size_t step, std::size_t x) const {
    return actions_[step * num_states_ + x];
  }
  void set_action(std::size_t step, std::size_t x, std::size_t a) {
    actions_[step * num_states_ + x] = a;
  }

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::size_t horizon_;
  std::size_t num_states_;
  std::vector<std::size_t> actions_;
};

// Beta/Dirichlet mixture prior over tabular MDPs sharing structure
// (state/action counts, horizon, initial distribution).
//
// alpha_reward[s][pair * 2 + r] with r = 1 the reward-one pseudo-count;
// alpha_transition[s][pair * nX + x'].
struct MDPMixturePrior {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  std::vector<double> initial;
  MixtureWeights latent_prior = MixtureWeights::uniform(1);
  std::vector<std::vector<double>> alpha_reward;
  std::vector<std::vector<double>> alpha_transition;

  std::size_t num_components() const { return alpha_reward.size(); }
};

void validate(const MDPMixturePrior& prior);

// Single-component prior with Beta(1, 1) rewards and Dirichlet(1, ..., 1)
// transitions.
MDPMixturePrior uniform_mdp_prior(std::size_t nX, std::size_t nA,
                                  std::size_t horizon,
                                  std::vector<double> initial);

// Mixture posterior over tabular MDPs. Observation counts are shared by all
// components; only the prior pseudo-counts differ between them.
class MDPMixturePosterior {
 public:
  explicit MDPMixturePosterior(const MDPMixturePrior& prior);

  const MDPMixturePrior& prior() const { return *prior_; }
  const MixtureWeights& weights() const { return weights_; }
  std::size_t steps() const { return steps_; }
  std::size_t num_components() const { return prior_->num_components(); }

  std::span<const double> reward_counts() const { return reward_count_; }
  std::span<const double> transition_counts() const { return transition_count_; }

  // Effective posterior counts for component s at (x, a).
  std::array<double, 2> reward_alpha(std::size_t s, std::size_t x, std::size_t a) const;
  std::vector<double> transition_alpha(std::size_t s, std::size_t x, std::size_t a) const;
  double reward_alpha_total(std::size_t s, std::size_t x, std::size_t a) const;
  double transition_alpha_total(std::size_t s, std::size_t x, std::size_t a) const;

 private:
  friend MDPMixturePosterior posterior_update_step(MDPMixturePosterior,
                                                   std::size_t, std::size_t,
                                                   int, std::size_t);

  std::shared_ptr<const MDPMixturePrior> prior_;
  std::vector<double> reward_count_;
  std::vector<double> transition_count_;
  MixtureWeights weights_;
  std::size_t steps_ = 0;
};

// log BetaPred(r) + log DirPred(x_next) under component s's current counts.
double step_predictive_loglik(const MDPMixturePosterior& post, std::size_t s,
                              std::size_t x, std::size_t a, int r,
                              std::size_t x_next);

// Absorbs one transition (x, a, r, x_next) with r in {0, 1}.
MDPMixturePosterior posterior_update_step(MDPMixturePosterior post,
                                          std::size_t x, std::size_t a, int r,
                                          std::size_t x_next);

// Draws an MDP from component s of the posterior: Beta mean rewards and
// Dirichlet transition rows, independently per (x, a).
TabularMDP sample_mdp(const MDPMixturePosterior& post, std::size_t s,
                      RngStream& rng);

// Posterior-mean MDP of component s: mean rewards alpha_1 / |alpha| and
// transition rows alpha / |alpha|.
TabularMDP posterior_mean_mdp(const MDPMixturePosterior& post, std::size_t s);

// Backward induction; ties go to the lowest action index.
Policy plan(const TabularMDP& mdp);

// Exact expected h-step return from the initial distribution.
double policy_value(const TabularMDP& mdp, const Policy& policy);

struct ConfidenceWidths {
  std::vector<double> reward;      // c(x, a), indexed by pair
  std::vector<double> transition;  // phi(x, a), indexed by pair
};

ConfidenceWidths mdp_confidence_widths(const MDPMixturePosterior& post,
                                       std::size_t s, double horizon_n);

// Two-component RiverSwim prior (current flows left / right) and the
// prior-mean MDP for each direction.
struct RiverSwim {
  MDPMixturePrior prior;
  std::array<TabularMDP, 2> mean_models;
};

inline constexpr std::size_t kSwimLeft = 0;
inline constexpr std::size_t kSwimRight = 1;
inline constexpr std::size_t kCurrentLeft = 0;
inline constexpr std::size_t kCurrentRight = 1;

// Pseudo-counts are concentration * mean, with entries whose mean is zero
// floored at kRiverSwimCountFloor * concentration.
inline constexpr double kRiverSwimCountFloor = 1e-3;

RiverSwim riverswim_prior(std::size_t num_states, double concentration,
                          std::size_t horizon = 20);

// Interface for episodic tabular agents.
class MDPAgent {
 public:
  virtual ~MDPAgent() = default;
  virtual std::string_view name() const = 0;
  virtual Policy begin_episode(RngStream& rng) = 0;
  virtual void observe(std::size_t x, std::size_t a, int r, std::size_t x_next) = 0;
};

// Posterior sampling with a Beta/Dirichlet mixture prior: one latent state
// and one MDP per episode, planned once.
class MixTSMDPAgent final : public MDPAgent {
 public:
  explicit MixTSMDPAgent(const MDPMixturePrior& prior, std::string name = "mixts");

  std::string_view name() const override { return name_; }
  Policy begin_episode(RngStream& rng) override;
  void observe(std::size_t x, std::size_t a, int r, std::size_t x_next) override;

  const MDPMixturePosterior& posterior() const { return post_; }
  std::size_t last_latent() const { return last_latent_; }
  // Posterior snapshot taken at the start of the current episode.
  const MDPMixturePosterior& episode_start_posterior() const { return episode_post_; }

 private:
  std::string name_;
  MDPMixturePosterior post_;
  MDPMixturePosterior episode_post_;
  std::size_t last_latent_ = 0;
};

}  // namespace mixts
