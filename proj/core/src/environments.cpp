#include "mixts/environments.hpp"

#include <cmath>
#include <string>

#include "mixts/errors.hpp"

namespace mixts {

GaussianMixturePrior synthetic_linear_prior(std::size_t d, std::size_t num_latent,
                                            double sigma0, double sigma) {
  if (d == 0 || num_latent == 0) throw ConfigError("synthetic env: d and L must be >= 1");
  if (num_latent > d) {
    throw ConfigError("synthetic env: L = " + std::to_string(num_latent) +
                      " exceeds d = " + std::to_string(d));
  }
  if (!(sigma0 >= 0.0) || !std::isfinite(sigma0)) {
    throw ConfigError("synthetic env: sigma0 must be finite and >= 0");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("synthetic env: sigma must be > 0");
  const auto di = static_cast<Eigen::Index>(d);
  std::vector<GaussianComponent> comps;
  for (std::size_t s = 0; s < num_latent; ++s) {
    Vector mean = Vector::Constant(di, 0.1);
    mean[static_cast<Eigen::Index>(s)] = 0.9;
    comps.push_back({std::move(mean), Matrix::Identity(di, di) * (sigma0 * sigma0)});
  }
  return {std::move(comps), MixtureWeights::uniform(num_latent), sigma};
}

GaussianMixturePrior moment_matched_prior(const GaussianMixturePrior& prior) {
  const auto probs = prior.latent_prior.probabilities();
  const auto d = static_cast<Eigen::Index>(prior.dim());
  Vector mean = Vector::Zero(d);
  for (std::size_t s = 0; s < probs.size(); ++s) mean += probs[s] * prior.components[s].mean;
  Matrix cov = Matrix::Zero(d, d);
  for (std::size_t s = 0; s < probs.size(); ++s) {
    const Vector diff = prior.components[s].mean - mean;
    cov += probs[s] * (prior.components[s].cov + diff * diff.transpose());
  }
  cov = 0.5 * (cov + cov.transpose());
  return unimodal_prior(std::move(mean), std::move(cov), prior.noise_sd);
}

SyntheticLinearEnv::SyntheticLinearEnv(const GaussianMixturePrior& prior, RngStream& rng)
    : latent_(sample_categorical(prior.latent_prior, rng)),
      sigma_(prior.noise_sd),
      actions_(Matrix::Identity(static_cast<Eigen::Index>(prior.dim()),
                                static_cast<Eigen::Index>(prior.dim()))) {
  const auto& comp = prior.components[latent_];
  theta_ = sample_gaussian(comp.mean, cholesky_with_jitter(comp.cov), rng);
}

BanditRound SyntheticLinearEnv::begin_round(RngStream&) {
  return {actions_, actions_.matrix() * theta_};
}

double SyntheticLinearEnv::reward(std::size_t chosen, RngStream& rng) {
  if (chosen >= actions_.size()) throw InputError("synthetic env: action index out of range");
  return theta_[static_cast<Eigen::Index>(chosen)] + sigma_ * rng.normal();
}

SyntheticLinearInstance synthetic_linear_env(std::size_t d, std::size_t num_latent,
                                             double sigma0, double sigma, RngStream& rng) {
  auto prior = synthetic_linear_prior(d, num_latent, sigma0, sigma);
  auto env = std::make_unique<SyntheticLinearEnv>(prior, rng);
  const std::size_t latent = env->true_latent();
  Vector theta = env->true_theta();
  return {std::move(prior), std::move(env), latent, std::move(theta)};
}

FeatureFileEnv::FeatureFileEnv(std::shared_ptr<const FeatureTable> table,
                               FeatureEnvOptions options, RngStream& rng)
    : table_(std::move(table)), options_(options) {
  if (!table_ || table_->rows() == 0) throw ConfigError("feature env: empty feature table");
  if (options_.k_actions == 0) throw ConfigError("feature env: k_actions must be >= 1");
  if (!(options_.reward_hi >= 0.0 && options_.reward_hi <= 1.0 &&
        options_.reward_lo >= 0.0 && options_.reward_lo <= 1.0)) {
    throw ConfigError("feature env: reward means must lie in [0, 1]");
  }
  by_class_ = table_->rows_by_class();
  for (std::size_t c = 0; c < by_class_.size(); ++c) {
    if (by_class_[c].empty()) {
      throw ConfigError("feature env: class " + std::to_string(c) + " has no rows");
    }
  }
  latent_ = rng.uniform_index(table_->num_classes);
}

BanditRound FeatureFileEnv::begin_round(RngStream& rng) {
  const std::size_t k = options_.k_actions;
  const auto& own = by_class_[latent_];
  const std::size_t forced_row = own[rng.uniform_index(own.size())];
  const std::size_t forced_slot = rng.uniform_index(k);
  Matrix rows(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(table_->dim()));
  current_means_.resize(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t row = i == forced_slot ? forced_row : rng.uniform_index(table_->rows());
    const auto r = static_cast<Eigen::Index>(i);
    rows.row(r) = table_->features.row(static_cast<Eigen::Index>(row));
    current_means_[r] = table_->labels[row] == latent_ ? options_.reward_hi : options_.reward_lo;
  }
  return {ActionSet(std::move(rows)), current_means_};
}

double FeatureFileEnv::reward(std::size_t chosen, RngStream& rng) {
  if (chosen >= static_cast<std::size_t>(current_means_.size())) {
    throw InputError("feature env: action index out of range");
  }
  return rng.bernoulli(current_means_[static_cast<Eigen::Index>(chosen)]) ? 1.0 : 0.0;
}

std::unique_ptr<FeatureFileEnv> feature_file_env(const std::filesystem::path& path,
                                                 FeatureEnvOptions options, RngStream& rng) {
  auto table = std::make_shared<const FeatureTable>(read_feature_table(path));
  return std::make_unique<FeatureFileEnv>(std::move(table), options, rng);
}

namespace {

TabularMDP draw_true_mdp(const MDPMixturePrior& prior, std::size_t latent, RngStream& rng) {
  const MDPMixturePosterior post(prior);
  return sample_mdp(post, latent, rng);
}

std::size_t draw_index(std::span<const double> probs, RngStream& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_supported = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_supported = i;
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  return last_supported;
}

}  // namespace

TabularEnvironment::TabularEnvironment(const MDPMixturePrior& prior, RngStream& rng)
    : latent_(sample_categorical(prior.latent_prior, rng)),
      optimal_(prior.horizon, prior.num_states) {
  mdp_ = draw_true_mdp(prior, latent_, rng);
  optimal_ = plan(mdp_);
  optimal_value_ = policy_value(mdp_, optimal_);
}

TabularEnvironment::TabularEnvironment(TabularMDP mdp, std::size_t latent)
    : mdp_(std::move(mdp)), latent_(latent), optimal_(mdp_.horizon, mdp_.num_states) {
  validate(mdp_);
  optimal_ = plan(mdp_);
  optimal_value_ = policy_value(mdp_, optimal_);
}

std::vector<TabularEnvironment::Step> TabularEnvironment::run_episode(const Policy& policy,
                                                                      RngStream& rng) const {
  if (policy.horizon() != mdp_.horizon || policy.num_states() != mdp_.num_states) {
    throw InputError("run_episode: policy shape does not match the MDP");
  }
  std::vector<Step> steps;
  steps.reserve(mdp_.horizon);
  std::size_t x = draw_index(mdp_.initial, rng);
  for (std::size_t t = 0; t < mdp_.horizon; ++t) {
    const std::size_t a = policy.action(t, x);
    const int r = rng.bernoulli(mdp_.mean_reward(x, a)) ? 1 : 0;
    const std::size_t x_next = draw_index(mdp_.next_state_probs(x, a), rng);
    steps.push_back({x, a, r, x_next});
    x = x_next;
  }
  return steps;
}

}  // namespace mixts
