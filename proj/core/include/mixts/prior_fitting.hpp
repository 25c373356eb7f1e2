#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mixts/feature_table.hpp"
#include "mixts/linalg.hpp"
#include "mixts/linear_bandit.hpp"

namespace mixts {

struct OfflineDataset {
  Matrix features;  // one row per observation
  Vector rewards;
};

// Ridge regression (X^T X + ridge I)^{-1} X^T y. Throws NumericalError when
// the system is singular (possible only with ridge = 0).
Vector fit_linear_model(const OfflineDataset& data, double ridge);

enum class CovarianceType { kFull, kDiagonal };

struct GMMConfig {
  std::size_t max_iters = 200;
  double tol = 1e-6;                 // stop when log-likelihood gain < tol
  double reg_scale = 1e-6;           // reg = reg_scale * trace(global cov) / d
  double min_mass = 1e-3;            // responsibility mass below which a component collapses
  CovarianceType covariance = CovarianceType::kFull;
  std::uint64_t seed = 0;
};

struct GMMComponent {
  Vector mean;
  Matrix cov;
  double weight;
};

struct GMMFit {
  std::vector<GMMComponent> components;
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  std::vector<double> log_likelihood_trace;  // after each EM iteration
  std::size_t reinitializations = 0;
  bool converged = false;
};

// EM for a Gaussian mixture over the rows of `points`. k-means++ seeding,
// shared spherical initial covariance, uniform initial weights.
GMMFit fit_gmm(const Matrix& points, std::size_t num_components, const GMMConfig& config);

// Total log-likelihood of `points` under a fitted mixture.
double gmm_log_likelihood(const Matrix& points, const std::vector<GMMComponent>& components);

// GMM components become prior components, GMM weights the latent prior.
GaussianMixturePrior build_mixture_prior(const GMMFit& fit, double noise_sd);

struct PriorFitConfig {
  std::size_t num_datasets = 1000;
  std::size_t dataset_size = 500;
  double ridge = 1e-3;
  double noise_sd = 0.5;
  GMMConfig gmm;
};

// Offline datasets: each picks a class uniformly at random and samples
// rows uniformly with replacement; reward is 1 for rows of that class.
std::vector<OfflineDataset> sample_offline_datasets(const FeatureTable& table,
                                                    std::size_t count, std::size_t size,
                                                    RngStream& rng);

// One fitted parameter vector per offline dataset, as rows.
Matrix fit_offline_parameters(const FeatureTable& table, const PriorFitConfig& config,
                              RngStream& rng);

// The full pipeline: offline datasets -> per-dataset linear fits -> GMM
// with `num_components` components -> mixture prior.
GaussianMixturePrior fit_prior_from_features(const FeatureTable& table,
                                             std::size_t num_components,
                                             const PriorFitConfig& config,
                                             RngStream& rng);

// Versioned JSON prior file. Doubles are written in shortest round-trip
// form, so save followed by load reproduces the prior bit for bit.
void save_prior(std::ostream& out, const GaussianMixturePrior& prior);
void save_prior(const std::filesystem::path& path, const GaussianMixturePrior& prior);
GaussianMixturePrior load_prior(std::istream& in);
GaussianMixturePrior load_prior(const std::filesystem::path& path);

}  // namespace mixts
