#include "mixts/baselines.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "mixts/errors.hpp"
#include "mixts/logging.hpp"

namespace mixts {

namespace {

std::size_t sample_from(const std::vector<double>& p, RngStream& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_supported = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    last_supported = i;
    cumulative += p[i];
    if (u < cumulative) return i;
  }
  return last_supported;
}

std::atomic<bool> g_clamp_reported{false};

// Reported once per process; Gaussian environments clamp on most runs.
double clamp_reward(double y, std::string_view agent) {
  if (y >= 0.0 && y <= 1.0) return y;
  if (!g_clamp_reported.exchange(true)) {
    std::ostringstream msg;
    msg << agent << ": reward " << y
        << " outside [0, 1] clamped; further clamps are not reported";
    warn(msg.str());
  }
  return std::clamp(y, 0.0, 1.0);
}

}  // namespace

Exp4Params default_exp4_params(std::size_t num_experts, std::size_t horizon,
                               std::size_t max_actions) {
  const double L = static_cast<double>(num_experts);
  const double n = static_cast<double>(std::max<std::size_t>(horizon, 1));
  const double K = static_cast<double>(std::max<std::size_t>(max_actions, 1));
  const double log_L = std::log(std::max(L, 1.0));
  return Exp4Params{std::sqrt(2.0 * log_L / (n * K)),
                    std::min(0.5, std::sqrt(L * log_L / n))};
}

Exp4State Exp4State::uniform(std::size_t num_experts, Exp4Params params) {
  if (!(params.exploration >= 0.0 && params.exploration < 1.0)) {
    throw InputError("exp4: exploration must lie in [0, 1)");
  }
  if (!(params.learning_rate >= 0.0)) throw InputError("exp4: learning rate must be >= 0");
  return Exp4State{MixtureWeights::uniform(num_experts), params};
}

std::vector<double> exp4_action_distribution(const Exp4State& state,
                                             std::span<const std::size_t> expert_actions,
                                             std::size_t num_actions) {
  if (expert_actions.size() != state.expert_weights.size()) {
    throw InputError("exp4: one recommendation per expert required");
  }
  if (num_actions == 0) throw InputError("exp4: empty action set");
  const double gamma = state.params.exploration;
  std::vector<double> p(num_actions, gamma / static_cast<double>(num_actions));
  for (std::size_t s = 0; s < expert_actions.size(); ++s) {
    if (expert_actions[s] >= num_actions) throw InputError("exp4: expert action out of range");
    p[expert_actions[s]] += (1.0 - gamma) * state.expert_weights.probability(s);
  }
  return p;
}

Exp4State exp4_step(const Exp4State& state,
                    std::span<const std::size_t> expert_actions,
                    std::size_t num_actions, double chosen_reward,
                    std::size_t chosen_action) {
  if (chosen_action >= num_actions) throw InputError("exp4: chosen action out of range");
  const double y = clamp_reward(chosen_reward, "exp4");
  const auto p = exp4_action_distribution(state, expert_actions, num_actions);
  const double p_chosen = p[chosen_action];
  if (!(p_chosen > 0.0)) {
    throw NumericalError("exp4: played an action with zero probability");
  }
  std::vector<double> gain(expert_actions.size(), 0.0);
  for (std::size_t s = 0; s < gain.size(); ++s) {
    if (expert_actions[s] == chosen_action) gain[s] = state.params.learning_rate * y / p_chosen;
  }
  return Exp4State{state.expert_weights.updated(gain), state.params};
}

std::unique_ptr<MixTSAgent> unimodal_ts_agent(Vector mean, Matrix cov, double sigma,
                                              std::string name) {
  return std::make_unique<MixTSAgent>(
      unimodal_prior(std::move(mean), std::move(cov), sigma), std::move(name));
}

Exp4Agent::Exp4Agent(std::vector<Vector> expert_params, Exp4Params params,
                     std::string name)
    : name_(std::move(name)),
      experts_(std::move(expert_params)),
      state_(Exp4State::uniform(experts_.size(), params)) {
  if (experts_.empty()) throw InputError("exp4: at least one expert required");
}

std::size_t Exp4Agent::select(const ActionSet& actions, RngStream& rng) {
  last_expert_actions_.resize(experts_.size());
  for (std::size_t s = 0; s < experts_.size(); ++s) {
    last_expert_actions_[s] = select_action(experts_[s], actions);
  }
  return sample_from(exp4_action_distribution(state_, last_expert_actions_, actions.size()), rng);
}

void Exp4Agent::observe(const ActionSet& actions, std::size_t chosen, double reward) {
  const double y = clamp_reward(reward, name_);
  state_ = exp4_step(state_, last_expert_actions_, actions.size(), y, chosen);
}

CorralExp4Agent::CorralExp4Agent(const GaussianMixturePrior& prior, Exp4Params params,
                                 std::string name)
    : name_(std::move(name)),
      post_(posterior_init(prior)),
      state_(Exp4State::uniform(prior.num_components(), params)) {}

std::size_t CorralExp4Agent::select(const ActionSet& actions, RngStream& rng) {
  last_expert_actions_.resize(post_.num_components());
  for (std::size_t s = 0; s < post_.num_components(); ++s) {
    last_expert_actions_[s] = select_action(post_.mean(s), actions);
  }
  return sample_from(exp4_action_distribution(state_, last_expert_actions_, actions.size()), rng);
}

void CorralExp4Agent::observe(const ActionSet& actions, std::size_t chosen, double reward) {
  const double y = clamp_reward(reward, name_);
  state_ = exp4_step(state_, last_expert_actions_, actions.size(), y, chosen);
  // Base learners see the raw reward; only the master needs bounded gains.
  post_ = posterior_update(std::move(post_), actions.action(chosen), reward);
}

std::unique_ptr<MixTSMDPAgent> psrl_agent(std::size_t nX, std::size_t nA,
                                          std::size_t horizon,
                                          std::vector<double> initial,
                                          std::string name) {
  return std::make_unique<MixTSMDPAgent>(
      uniform_mdp_prior(nX, nA, horizon, std::move(initial)), std::move(name));
}

}  // namespace mixts
