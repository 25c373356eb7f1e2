#include "mixts/tabular_mdp.hpp"

#include <cmath>
#include <numeric>

#include "mixts/errors.hpp"

namespace mixts {

namespace {

void check_distribution(std::span<const double> p, const std::string& what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError(what + ": negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError(what + ": does not sum to 1");
}

void check_index(std::size_t i, std::size_t n, const char* what) {
  if (i >= n) throw InputError(std::string(what) + " index out of range");
}

}  // namespace

TabularMDP::TabularMDP(std::size_t nX, std::size_t nA, std::size_t h)
    : num_states(nX),
      num_actions(nA),
      horizon(h),
      reward(nX * nA, 0.0),
      transition(nX * nA * nX, 0.0),
      initial(nX, 0.0) {}

void validate(const TabularMDP& mdp) {
  const std::size_t nX = mdp.num_states;
  const std::size_t nA = mdp.num_actions;
  if (nX == 0 || nA == 0 || mdp.horizon == 0) throw InputError("mdp: empty state/action space or horizon");
  if (mdp.reward.size() != nX * nA || mdp.transition.size() != nX * nA * nX ||
      mdp.initial.size() != nX) {
    throw InputError("mdp: table sizes do not match (nX, nA)");
  }
  for (double r : mdp.reward) {
    if (!(r >= 0.0 && r <= 1.0)) throw InputError("mdp: mean reward outside [0, 1]");
  }
  for (std::size_t x = 0; x < nX; ++x) {
    for (std::size_t a = 0; a < nA; ++a) {
      check_distribution(mdp.next_state_probs(x, a), "mdp: transition row");
    }
  }
  check_distribution(mdp.initial, "mdp: initial distribution");
}

Policy::Policy(std::size_t horizon, std::size_t num_states, std::size_t fill)
    : horizon_(horizon), num_states_(num_states), actions_(horizon * num_states, fill) {}

void validate(const MDPMixturePrior& prior) {
  const std::size_t nX = prior.num_states;
  const std::size_t nA = prior.num_actions;
  const std::size_t L = prior.num_components();
  if (nX == 0 || nA == 0 || prior.horizon == 0) throw InputError("mdp prior: empty sizes");
  if (L == 0 || prior.alpha_transition.size() != L || prior.latent_prior.size() != L) {
    throw InputError("mdp prior: component counts disagree");
  }
  check_distribution(prior.initial, "mdp prior: initial distribution");
  if (prior.initial.size() != nX) throw InputError("mdp prior: initial distribution size");
  for (std::size_t s = 0; s < L; ++s) {
    if (prior.alpha_reward[s].size() != nX * nA * 2 ||
        prior.alpha_transition[s].size() != nX * nA * nX) {
      throw InputError("mdp prior: pseudo-count table size mismatch");
    }
    for (double v : prior.alpha_reward[s]) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InputError("mdp prior: pseudo-counts must be positive");
    }
    for (double v : prior.alpha_transition[s]) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InputError("mdp prior: pseudo-counts must be positive");
    }
  }
}

MDPMixturePrior uniform_mdp_prior(std::size_t nX, std::size_t nA,
                                  std::size_t horizon,
                                  std::vector<double> initial) {
  MDPMixturePrior prior;
  prior.num_states = nX;
  prior.num_actions = nA;
  prior.horizon = horizon;
  prior.initial = std::move(initial);
  prior.latent_prior = MixtureWeights::uniform(1);
  prior.alpha_reward.assign(1, std::vector<double>(nX * nA * 2, 1.0));
  prior.alpha_transition.assign(1, std::vector<double>(nX * nA * nX, 1.0));
  validate(prior);
  return prior;
}

MDPMixturePosterior::MDPMixturePosterior(const MDPMixturePrior& prior)
    : prior_((validate(prior), std::make_shared<const MDPMixturePrior>(prior))),
      reward_count_(prior.num_states * prior.num_actions * 2, 0.0),
      transition_count_(prior.num_states * prior.num_actions * prior.num_states, 0.0),
      weights_(prior.latent_prior) {}

std::array<double, 2> MDPMixturePosterior::reward_alpha(std::size_t s, std::size_t x,
                                                        std::size_t a) const {
  const std::size_t base = (x * prior_->num_actions + a) * 2;
  const auto& alpha = prior_->alpha_reward.at(s);
  return {alpha[base] + reward_count_[base], alpha[base + 1] + reward_count_[base + 1]};
}

std::vector<double> MDPMixturePosterior::transition_alpha(std::size_t s, std::size_t x,
                                                          std::size_t a) const {
  const std::size_t nX = prior_->num_states;
  const std::size_t base = (x * prior_->num_actions + a) * nX;
  const auto& alpha = prior_->alpha_transition.at(s);
  std::vector<double> out(nX);
  for (std::size_t j = 0; j < nX; ++j) out[j] = alpha[base + j] + transition_count_[base + j];
  return out;
}

double MDPMixturePosterior::reward_alpha_total(std::size_t s, std::size_t x,
                                               std::size_t a) const {
  const auto alpha = reward_alpha(s, x, a);
  return alpha[0] + alpha[1];
}

double MDPMixturePosterior::transition_alpha_total(std::size_t s, std::size_t x,
                                                   std::size_t a) const {
  const auto alpha = transition_alpha(s, x, a);
  return std::accumulate(alpha.begin(), alpha.end(), 0.0);
}

double step_predictive_loglik(const MDPMixturePosterior& post, std::size_t s,
                              std::size_t x, std::size_t a, int r,
                              std::size_t x_next) {
  const auto& prior = post.prior();
  check_index(s, post.num_components(), "latent");
  check_index(x, prior.num_states, "state");
  check_index(a, prior.num_actions, "action");
  check_index(x_next, prior.num_states, "next state");
  if (r != 0 && r != 1) throw InputError("reward must be 0 or 1");
  const auto ra = post.reward_alpha(s, x, a);
  const auto ta = post.transition_alpha(s, x, a);
  const double ta_total = std::accumulate(ta.begin(), ta.end(), 0.0);
  return std::log(ra[static_cast<std::size_t>(r)] / (ra[0] + ra[1])) +
         std::log(ta[x_next] / ta_total);
}

MDPMixturePosterior posterior_update_step(MDPMixturePosterior post,
                                          std::size_t x, std::size_t a, int r,
                                          std::size_t x_next) {
  const std::size_t L = post.num_components();
  std::vector<double> loglik(L);
  for (std::size_t s = 0; s < L; ++s) {
    loglik[s] = step_predictive_loglik(post, s, x, a, r, x_next);
  }
  post.weights_ = post.weights_.updated(loglik);
  const std::size_t p = x * post.prior_->num_actions + a;
  post.reward_count_[p * 2 + static_cast<std::size_t>(r)] += 1.0;
  post.transition_count_[p * post.prior_->num_states + x_next] += 1.0;
  ++post.steps_;
  return post;
}

TabularMDP sample_mdp(const MDPMixturePosterior& post, std::size_t s,
                      RngStream& rng) {
  const auto& prior = post.prior();
  check_index(s, post.num_components(), "latent");
  const std::size_t nX = prior.num_states;
  const std::size_t nA = prior.num_actions;
  TabularMDP mdp(nX, nA, prior.horizon);
  mdp.initial = prior.initial;
  std::vector<double> log_draws(nX);
  for (std::size_t x = 0; x < nX; ++x) {
    for (std::size_t a = 0; a < nA; ++a) {
      const auto ra = post.reward_alpha(s, x, a);
      mdp.mean_reward(x, a) = rng.beta(ra[1], ra[0]);

      const auto ta = post.transition_alpha(s, x, a);
      for (std::size_t j = 0; j < nX; ++j) log_draws[j] = rng.log_gamma(ta[j]);
      const double log_total = log_sum_exp(log_draws);
      auto row = mdp.next_state_probs(x, a);
      for (std::size_t j = 0; j < nX; ++j) row[j] = std::exp(log_draws[j] - log_total);
    }
  }
  return mdp;
}

TabularMDP posterior_mean_mdp(const MDPMixturePosterior& post, std::size_t s) {
  const auto& prior = post.prior();
  check_index(s, post.num_components(), "latent");
  TabularMDP mdp(prior.num_states, prior.num_actions, prior.horizon);
  mdp.initial = prior.initial;
  for (std::size_t x = 0; x < prior.num_states; ++x) {
    for (std::size_t a = 0; a < prior.num_actions; ++a) {
      const auto ra = post.reward_alpha(s, x, a);
      mdp.mean_reward(x, a) = ra[1] / (ra[0] + ra[1]);
      const auto ta = post.transition_alpha(s, x, a);
      const double total = post.transition_alpha_total(s, x, a);
      auto row = mdp.next_state_probs(x, a);
      for (std::size_t j = 0; j < prior.num_states; ++j) row[j] = ta[j] / total;
    }
  }
  return mdp;
}

Policy plan(const TabularMDP& mdp) {
  const std::size_t nX = mdp.num_states;
  const std::size_t nA = mdp.num_actions;
  Policy policy(mdp.horizon, nX);
  std::vector<double> value(nX, 0.0);
  std::vector<double> next_value(nX, 0.0);
  for (std::size_t step = mdp.horizon; step-- > 0;) {
    for (std::size_t x = 0; x < nX; ++x) {
      double best_q = 0.0;
      std::size_t best_a = 0;
      for (std::size_t a = 0; a < nA; ++a) {
        const auto row = mdp.next_state_probs(x, a);
        double q = mdp.mean_reward(x, a);
        for (std::size_t j = 0; j < nX; ++j) q += row[j] * next_value[j];
        if (a == 0 || q > best_q) {
          best_q = q;
          best_a = a;
        }
      }
      value[x] = best_q;
      policy.set_action(step, x, best_a);
    }
    std::swap(value, next_value);
  }
  return policy;
}

double policy_value(const TabularMDP& mdp, const Policy& policy) {
  if (policy.horizon() != mdp.horizon || policy.num_states() != mdp.num_states) {
    throw InputError("policy_value: policy shape does not match the MDP");
  }
  const std::size_t nX = mdp.num_states;
  std::vector<double> dist = mdp.initial;
  std::vector<double> next(nX);
  double total = 0.0;
  for (std::size_t step = 0; step < mdp.horizon; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < nX; ++x) {
      if (dist[x] == 0.0) continue;
      const std::size_t a = policy.action(step, x);
      if (a >= mdp.num_actions) throw InputError("policy_value: invalid action in policy");
      total += dist[x] * mdp.mean_reward(x, a);
      const auto row = mdp.next_state_probs(x, a);
      for (std::size_t j = 0; j < nX; ++j) next[j] += dist[x] * row[j];
    }
    std::swap(dist, next);
  }
  return total;
}

ConfidenceWidths mdp_confidence_widths(const MDPMixturePosterior& post,
                                       std::size_t s, double horizon_n) {
  if (!(horizon_n >= 1.0)) throw DomainError("mdp_confidence_widths: n must be >= 1");
  const auto& prior = post.prior();
  const double nX = static_cast<double>(prior.num_states);
  const double nA = static_cast<double>(prior.num_actions);
  const double reward_log = 2.0 * std::log(2.0 * nX * nA * horizon_n);
  const double transition_log = 4.0 * nX * std::log(4.0 * nX * nA * horizon_n);
  ConfidenceWidths widths;
  for (std::size_t x = 0; x < prior.num_states; ++x) {
    for (std::size_t a = 0; a < prior.num_actions; ++a) {
      widths.reward.push_back(std::sqrt(reward_log / (post.reward_alpha_total(s, x, a) + 1.0)));
      widths.transition.push_back(
          std::sqrt(transition_log / (post.transition_alpha_total(s, x, a) + 1.0)));
    }
  }
  return widths;
}

namespace {

// Prior-mean RiverSwim with the current flowing towards state 0.
TabularMDP riverswim_current_left(std::size_t nX, std::size_t horizon) {
  TabularMDP mdp(nX, 2, horizon);
  const std::size_t last = nX - 1;
  for (std::size_t x = 0; x < nX; ++x) {
    // Swimming with the current always succeeds.
    mdp.next_state_probs(x, kSwimLeft)[x == 0 ? 0 : x - 1] = 1.0;

    auto against = mdp.next_state_probs(x, kSwimRight);
    against[x] = 0.6;
    if (x == 0) {
      against[1] = 0.4;
    } else if (x == last) {
      against[x - 1] = 0.4;
    } else {
      against[x - 1] = 0.05;
      against[x + 1] = 0.35;
    }
  }
  mdp.mean_reward(0, kSwimLeft) = 0.005;
  mdp.mean_reward(last, kSwimRight) = 0.9;
  if (nX % 2 == 1) {
    mdp.initial[nX / 2] = 1.0;
  } else {
    mdp.initial[nX / 2 - 1] = 0.5;
    mdp.initial[nX / 2] = 0.5;
  }
  return mdp;
}

TabularMDP mirrored(const TabularMDP& mdp) {
  const std::size_t nX = mdp.num_states;
  TabularMDP out(nX, mdp.num_actions, mdp.horizon);
  const auto m = [nX](std::size_t x) { return nX - 1 - x; };
  const auto flip = [&mdp](std::size_t a) { return mdp.num_actions - 1 - a; };
  for (std::size_t x = 0; x < nX; ++x) {
    out.initial[x] = mdp.initial[m(x)];
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      out.mean_reward(x, a) = mdp.mean_reward(m(x), flip(a));
      const auto src = mdp.next_state_probs(m(x), flip(a));
      auto dst = out.next_state_probs(x, a);
      for (std::size_t j = 0; j < nX; ++j) dst[j] = src[m(j)];
    }
  }
  return out;
}

}  // namespace

RiverSwim riverswim_prior(std::size_t num_states, double concentration,
                          std::size_t horizon) {
  if (num_states < 3) throw InputError("riverswim: need at least 3 states");
  if (!(concentration > 0.0 && concentration <= 10.0)) {
    throw InputError("riverswim: concentration must lie in (0, 10]");
  }
  if (horizon == 0) throw InputError("riverswim: horizon must be >= 1");

  const TabularMDP left = riverswim_current_left(num_states, horizon);
  RiverSwim river{MDPMixturePrior{}, {left, mirrored(left)}};
  auto& prior = river.prior;
  prior.num_states = num_states;
  prior.num_actions = 2;
  prior.horizon = horizon;
  prior.initial = left.initial;
  prior.latent_prior = MixtureWeights::uniform(2);

  const double floor = kRiverSwimCountFloor * concentration;
  const auto pseudo = [&](double mean) {
    return mean > 0.0 ? concentration * mean : floor;
  };
  for (const TabularMDP& model : river.mean_models) {
    std::vector<double> alpha_r;
    std::vector<double> alpha_t;
    for (std::size_t x = 0; x < num_states; ++x) {
      for (std::size_t a = 0; a < 2; ++a) {
        const double r = model.mean_reward(x, a);
        alpha_r.push_back(pseudo(1.0 - r));
        alpha_r.push_back(pseudo(r));
        for (double p : model.next_state_probs(x, a)) alpha_t.push_back(pseudo(p));
      }
    }
    prior.alpha_reward.push_back(std::move(alpha_r));
    prior.alpha_transition.push_back(std::move(alpha_t));
  }
  validate(prior);
  return river;
}

MixTSMDPAgent::MixTSMDPAgent(const MDPMixturePrior& prior, std::string name)
    : name_(std::move(name)), post_(prior), episode_post_(post_) {}

Policy MixTSMDPAgent::begin_episode(RngStream& rng) {
  episode_post_ = post_;
  last_latent_ = sample_categorical(post_.weights(), rng);
  return plan(sample_mdp(post_, last_latent_, rng));
}

void MixTSMDPAgent::observe(std::size_t x, std::size_t a, int r, std::size_t x_next) {
  post_ = posterior_update_step(std::move(post_), x, a, r, x_next);
}

}  // namespace mixts
