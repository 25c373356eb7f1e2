#include "mixts/linear_bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mixts/errors.hpp"
#include "mixts/logging.hpp"

namespace mixts {

void validate(const GaussianMixturePrior& prior) {
  const std::size_t L = prior.num_components();
  if (L == 0) throw InputError("prior: at least one component required");
  if (prior.latent_prior.size() != L) {
    throw InputError("prior: latent prior size does not match component count");
  }
  if (!(prior.noise_sd > 0.0) || !std::isfinite(prior.noise_sd)) {
    throw InputError("prior: noise_sd must be positive");
  }
  const auto d = static_cast<Eigen::Index>(prior.dim());
  if (d == 0) throw InputError("prior: dimension must be >= 1");
  for (std::size_t s = 0; s < L; ++s) {
    const auto& c = prior.components[s];
    if (c.mean.size() != d || c.cov.rows() != d || c.cov.cols() != d) {
      throw InputError("prior: component " + std::to_string(s) +
                       " has inconsistent dimensions");
    }
    if (!c.mean.allFinite() || !c.cov.allFinite()) {
      throw InputError("prior: component " + std::to_string(s) +
                       " has non-finite entries");
    }
    if (!is_symmetric(c.cov, 1e-10)) {
      throw InputError("prior: covariance of component " + std::to_string(s) +
                       " is not symmetric");
    }
    Eigen::LLT<Matrix> llt(c.cov);
    if (llt.info() != Eigen::Success) {
      throw InputError("prior: covariance of component " + std::to_string(s) +
                       " is not positive definite");
    }
  }
}

std::size_t warn_if_outside_unit_ball(const GaussianMixturePrior& prior) {
  std::size_t outside = 0;
  double largest = 0.0;
  for (const auto& c : prior.components) {
    const double norm = c.mean.norm();
    if (norm > 1.0 + 1e-12) {
      ++outside;
      largest = std::max(largest, norm);
    }
  }
  if (outside > 0) {
    std::ostringstream msg;
    msg << "prior: " << outside << " component mean(s) have norm > 1 (largest "
        << largest << "); the regret bound constants assume norm <= 1";
    warn(msg.str());
  }
  return outside;
}

GaussianMixturePrior unimodal_prior(Vector mean, Matrix cov, double noise_sd) {
  GaussianMixturePrior prior{{GaussianComponent{std::move(mean), std::move(cov)}},
                             MixtureWeights::uniform(1), noise_sd};
  validate(prior);
  return prior;
}

ActionSet::ActionSet(Matrix actions) : rows_(std::move(actions)), kappa_(0.0) {
  if (rows_.rows() == 0) throw InputError("ActionSet: empty action set");
  kappa_ = rows_.rowwise().norm().maxCoeff();
}

ActionSet::ActionSet(Matrix actions, double kappa)
    : rows_(std::move(actions)), kappa_(kappa) {
  if (rows_.rows() == 0) throw InputError("ActionSet: empty action set");
  if (rows_.rowwise().norm().maxCoeff() > kappa_ * (1.0 + 1e-12)) {
    throw InputError("ActionSet: an action exceeds the norm bound kappa");
  }
}

ActionSet ActionSet::from_vectors(const std::vector<Vector>& actions) {
  if (actions.empty()) throw InputError("ActionSet: empty action set");
  Matrix rows(static_cast<Eigen::Index>(actions.size()), actions[0].size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].size() != rows.cols()) {
      throw InputError("ActionSet: inconsistent action dimensions");
    }
    rows.row(static_cast<Eigen::Index>(i)) = actions[i].transpose();
  }
  return ActionSet(std::move(rows));
}

struct LinearMixturePosterior::PriorCache {
  explicit PriorCache(const GaussianMixturePrior& p) : prior(p) {}

  GaussianMixturePrior prior;
  std::vector<Matrix> precision;           // cov_0^{-1}
  std::vector<Vector> precision_mean;      // cov_0^{-1} mean_0
};

LinearMixturePosterior::LinearMixturePosterior(
    std::shared_ptr<const PriorCache> cache, MixtureWeights weights)
    : cache_(std::move(cache)), weights_(std::move(weights)) {}

double LinearMixturePosterior::noise_sd() const { return cache_->prior.noise_sd; }

const GaussianMixturePrior& LinearMixturePosterior::prior() const {
  return cache_->prior;
}

void LinearMixturePosterior::recompute_components() {
  const double inv_var = 1.0 / (noise_sd() * noise_sd());
  for (std::size_t s = 0; s < means_.size(); ++s) {
    Matrix precision = cache_->precision[s] + inv_var * gram_;
    Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("posterior_update: posterior precision of component " +
                           std::to_string(s) + " is not positive definite");
    }
    Matrix cov = llt.solve(Matrix::Identity(precision.rows(), precision.cols()));
    covs_[s] = 0.5 * (cov + cov.transpose());
    means_[s] = llt.solve(cache_->precision_mean[s] + inv_var * moment_);
  }
}

LinearMixturePosterior posterior_init(const GaussianMixturePrior& prior) {
  validate(prior);
  auto cache = std::make_shared<LinearMixturePosterior::PriorCache>(prior);
  for (const auto& c : prior.components) {
    Matrix precision = spd_inverse(c.cov);
    cache->precision_mean.push_back(precision * c.mean);
    cache->precision.push_back(std::move(precision));
  }
  const auto d = static_cast<Eigen::Index>(prior.dim());
  LinearMixturePosterior post(cache, prior.latent_prior);
  post.gram_ = Matrix::Zero(d, d);
  post.moment_ = Vector::Zero(d);
  for (const auto& c : prior.components) {
    post.means_.push_back(c.mean);
    post.covs_.push_back(c.cov);
  }
  return post;
}

double predictive_loglik(const LinearMixturePosterior& post, std::size_t s,
                         const Vector& a, double y) {
  if (s >= post.num_components()) throw InputError("predictive_loglik: bad latent index");
  if (static_cast<std::size_t>(a.size()) != post.dim()) {
    throw InputError("predictive_loglik: action dimension mismatch");
  }
  if (!std::isfinite(y)) throw InputError("predictive_loglik: non-finite reward");
  const double mean = a.dot(post.mean(s));
  const double var = a.dot(post.covariance(s) * a) + post.noise_sd() * post.noise_sd();
  const double r = y - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
}

LinearMixturePosterior posterior_update(LinearMixturePosterior post,
                                        const Vector& a, double y) {
  if (static_cast<std::size_t>(a.size()) != post.dim()) {
    throw InputError("posterior_update: action dimension mismatch");
  }
  if (!std::isfinite(y)) throw InputError("posterior_update: non-finite reward");
  std::vector<double> loglik(post.num_components());
  for (std::size_t s = 0; s < loglik.size(); ++s) {
    loglik[s] = predictive_loglik(post, s, a, y);
  }
  post.weights_ = post.weights_.updated(loglik);
  post.gram_.noalias() += a * a.transpose();
  post.moment_ += y * a;
  post.recompute_components();
  ++post.rounds_;
  return post;
}

ModelSample sample_model(const LinearMixturePosterior& post, RngStream& rng) {
  const std::size_t s = sample_categorical(post.weights(), rng);
  const Matrix factor = cholesky_with_jitter(post.covariance(s));
  return ModelSample{s, sample_gaussian(post.mean(s), factor, rng)};
}

std::size_t select_action(const Vector& theta, const ActionSet& actions) {
  if (static_cast<std::size_t>(theta.size()) != actions.dim()) {
    throw InputError("select_action: parameter dimension mismatch");
  }
  const Vector scores = actions.matrix() * theta;
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  }
  return best;
}

double confidence_width(const LinearMixturePosterior& post, std::size_t s,
                        const Vector& a, double horizon, std::size_t dim) {
  const double dn = static_cast<double>(dim) * horizon;
  if (dim < 1 || !(dn > 1.0)) {
    throw DomainError("confidence_width: requires d * n > 1");
  }
  const double quad = std::max(0.0, a.dot(post.covariance(s) * a));
  return std::sqrt(quad) * std::sqrt(2.0 * static_cast<double>(dim) * std::log(dn));
}

MixTSAgent::MixTSAgent(const GaussianMixturePrior& prior, std::string name)
    : name_(std::move(name)), post_(posterior_init(prior)) {}

std::size_t MixTSAgent::select(const ActionSet& actions, RngStream& rng) {
  ModelSample sample = sample_model(post_, rng);
  last_latent_ = sample.latent;
  return select_action(sample.theta, actions);
}

void MixTSAgent::observe(const ActionSet& actions, std::size_t chosen,
                         double reward) {
  post_ = posterior_update(std::move(post_), actions.action(chosen), reward);
}

}  // namespace mixts
