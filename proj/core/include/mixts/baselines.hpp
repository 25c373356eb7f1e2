#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mixts/linear_bandit.hpp"
#include "mixts/mixture_core.hpp"
#include "mixts/tabular_mdp.hpp"

namespace mixts {

struct Exp4Params {
  double learning_rate;
  double exploration;  // gamma in [0, 1)
};

// learning_rate = sqrt(2 ln L / (n K)), exploration = min(0.5, sqrt(L ln L / n)).
Exp4Params default_exp4_params(std::size_t num_experts, std::size_t horizon,
                               std::size_t max_actions);

// Exponential weights over L experts that each recommend one action.
struct Exp4State {
  MixtureWeights expert_weights;
  Exp4Params params;

  static Exp4State uniform(std::size_t num_experts, Exp4Params params);
};

// p(a) = (1 - gamma) * sum_s w_s 1{expert s picks a} + gamma / K.
std::vector<double> exp4_action_distribution(const Exp4State& state,
                                             std::span<const std::size_t> expert_actions,
                                             std::size_t num_actions);

// Importance-weighted update after playing `chosen_action` and receiving
// `chosen_reward` (clamped to [0, 1]; the first clamp in the process logs a warning): every expert that
// recommended the played action gets log-weight += eta * y / p(action).
Exp4State exp4_step(const Exp4State& state,
                    std::span<const std::size_t> expert_actions,
                    std::size_t num_actions, double chosen_reward,
                    std::size_t chosen_action);

// Thompson sampling with a single Gaussian prior N(mean, cov).
std::unique_ptr<MixTSAgent> unimodal_ts_agent(Vector mean, Matrix cov, double sigma,
                                              std::string name = "ts");

// Exp4 with fixed experts: expert s plays argmax a^T theta_s.
class Exp4Agent final : public LinearAgent {
 public:
  Exp4Agent(std::vector<Vector> expert_params, Exp4Params params,
            std::string name = "exp4");

  std::string_view name() const override { return name_; }
  std::size_t select(const ActionSet& actions, RngStream& rng) override;
  void observe(const ActionSet& actions, std::size_t chosen, double reward) override;

  const Exp4State& state() const { return state_; }

 private:
  std::string name_;
  std::vector<Vector> experts_;
  Exp4State state_;
  std::vector<std::size_t> last_expert_actions_;
};

// Exp4 master over adapting experts: expert s plays argmax a^T mean_{t,s},
// where mean_{t,s} is component s's conjugate posterior mean, updated with
// every observation.
class CorralExp4Agent final : public LinearAgent {
 public:
  CorralExp4Agent(const GaussianMixturePrior& prior, Exp4Params params,
                  std::string name = "corral");

  std::string_view name() const override { return name_; }
  std::size_t select(const ActionSet& actions, RngStream& rng) override;
  void observe(const ActionSet& actions, std::size_t chosen, double reward) override;

  const Exp4State& state() const { return state_; }
  const LinearMixturePosterior& posterior() const { return post_; }

 private:
  std::string name_;
  LinearMixturePosterior post_;
  Exp4State state_;
  std::vector<std::size_t> last_expert_actions_;
};

// Posterior sampling for RL with Beta(1, 1) rewards and uniform Dirichlet
// transitions (MixTS with a single uninformative component).
std::unique_ptr<MixTSMDPAgent> psrl_agent(std::size_t nX, std::size_t nA,
                                          std::size_t horizon,
                                          std::vector<double> initial,
                                          std::string name = "psrl");

}  // namespace mixts
