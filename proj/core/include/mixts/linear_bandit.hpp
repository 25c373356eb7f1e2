#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mixts/linalg.hpp"
#include "mixts/mixture_core.hpp"

namespace mixts {

struct GaussianComponent {
  Vector mean;
  Matrix cov;
};

// L-component Gaussian mixture prior over linear-bandit parameters, with the
// Gaussian reward noise level the posterior assumes.
struct GaussianMixturePrior {
  std::vector<GaussianComponent> components;
  MixtureWeights latent_prior;
  double noise_sd;

  std::size_t num_components() const { return components.size(); }
  std::size_t dim() const {
    return components.empty() ? 0 : static_cast<std::size_t>(components[0].mean.size());
  }
};

// Throws InputError unless every covariance is symmetric (1e-10) and
// positive definite, dimensions agree and noise_sd > 0.
void validate(const GaussianMixturePrior& prior);

// The algorithm does not need ||mean_s||_2 <= 1, only the regret bound
// does; this emits one warning when a component violates it and returns
// the number of such components.
std::size_t warn_if_outside_unit_ball(const GaussianMixturePrior& prior);

// Single-component prior N(mean, cov) with latent prior [0].
GaussianMixturePrior unimodal_prior(Vector mean, Matrix cov, double noise_sd);

// Finite action set; rows of `actions` are the action vectors.
class ActionSet {
 public:
  explicit ActionSet(Matrix actions);
  ActionSet(Matrix actions, double kappa);
  static ActionSet from_vectors(const std::vector<Vector>& actions);

  std::size_t size() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(rows_.cols()); }
  double kappa() const { return kappa_; }
  const Matrix& matrix() const { return rows_; }
  Vector action(std::size_t i) const { return rows_.row(static_cast<Eigen::Index>(i)).transpose(); }

 private:
  Matrix rows_;
  double kappa_;
};

// Exact mixture posterior for a Gaussian linear bandit.
//
// Holds the shared sufficient statistics V = sum a a^T and B = sum a y and,
// per component, the conjugate posterior mean/covariance recomputed from
// (V, B) after each observation, plus the latent-state weights.
class LinearMixturePosterior {
 public:
  std::size_t num_components() const { return means_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(gram_.rows()); }
  std::size_t rounds() const { return rounds_; }
  double noise_sd() const;

  const Matrix& gram() const { return gram_; }
  const Vector& moment() const { return moment_; }
  const Vector& mean(std::size_t s) const { return means_.at(s); }
  const Matrix& covariance(std::size_t s) const { return covs_.at(s); }
  const MixtureWeights& weights() const { return weights_; }
  const GaussianMixturePrior& prior() const;

 private:
  struct PriorCache;

  LinearMixturePosterior(std::shared_ptr<const PriorCache> cache,
                         MixtureWeights weights);
  void recompute_components();

  friend LinearMixturePosterior posterior_init(const GaussianMixturePrior&);
  friend LinearMixturePosterior posterior_update(LinearMixturePosterior,
                                                 const Vector&, double);

  std::shared_ptr<const PriorCache> cache_;
  Matrix gram_;
  Vector moment_;
  std::vector<Vector> means_;
  std::vector<Matrix> covs_;
  MixtureWeights weights_;
  std::size_t rounds_ = 0;
};

LinearMixturePosterior posterior_init(const GaussianMixturePrior& prior);

// log N(y; a^T mean_s, a^T cov_s a + noise_sd^2).
double predictive_loglik(const LinearMixturePosterior& post, std::size_t s,
                         const Vector& a, double y);

// Absorbs one observation: updates (V, B), every component's posterior and
// the latent weights (using the predictive before the update).
LinearMixturePosterior posterior_update(LinearMixturePosterior post,
                                        const Vector& a, double y);

struct ModelSample {
  std::size_t latent;
  Vector theta;
};

// Draws S ~ weights, then theta ~ N(mean_S, cov_S).
ModelSample sample_model(const LinearMixturePosterior& post, RngStream& rng);

// argmax_i a_i^T theta, lowest index on ties.
std::size_t select_action(const Vector& theta, const ActionSet& actions);

// ||a||_{cov_s} * sqrt(2 d log(d n)); DomainError when d * n <= 1.
double confidence_width(const LinearMixturePosterior& post, std::size_t s,
                        const Vector& a, double horizon, std::size_t dim);

// Interface every linear-bandit agent implements. One writer per instance.
class LinearAgent {
 public:
  virtual ~LinearAgent() = default;
  virtual std::string_view name() const = 0;
  virtual std::size_t select(const ActionSet& actions, RngStream& rng) = 0;
  virtual void observe(const ActionSet& actions, std::size_t chosen,
                       double reward) = 0;
};

// Thompson sampling with a Gaussian mixture prior.
class MixTSAgent final : public LinearAgent {
 public:
  explicit MixTSAgent(const GaussianMixturePrior& prior,
                      std::string name = "mixts");

  std::string_view name() const override { return name_; }
  std::size_t select(const ActionSet& actions, RngStream& rng) override;
  void observe(const ActionSet& actions, std::size_t chosen,
               double reward) override;

  const LinearMixturePosterior& posterior() const { return post_; }
  // Latent state drawn by the most recent select().
  std::size_t last_latent() const { return last_latent_; }

 private:
  std::string name_;
  LinearMixturePosterior post_;
  std::size_t last_latent_ = 0;
};

}  // namespace mixts
