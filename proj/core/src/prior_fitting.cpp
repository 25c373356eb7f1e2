#include "mixts/prior_fitting.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mixts/errors.hpp"
#include "mixts/logging.hpp"

namespace mixts {

Vector fit_linear_model(const OfflineDataset& data, double ridge) {
  if (data.features.rows() == 0) throw InputError("fit_linear_model: empty dataset");
  if (data.features.rows() != data.rewards.size()) {
    throw InputError("fit_linear_model: feature/reward row mismatch");
  }
  if (!(ridge >= 0.0)) throw InputError("fit_linear_model: ridge must be >= 0");
  const auto d = data.features.cols();
  Matrix gram = data.features.transpose() * data.features;
  gram.diagonal().array() += ridge;
  const Vector rhs = data.features.transpose() * data.rewards;
  Eigen::LLT<Matrix> llt(gram);
  const double diag_max = gram.diagonal().cwiseAbs().maxCoeff();
  bool singular = llt.info() != Eigen::Success;
  if (!singular) {
    const Vector pivots = Matrix(llt.matrixL()).diagonal();
    // Rounding leaves a pivot near sqrt(eps * diag) on exactly singular
    // systems, so the cut sits a little above that.
    singular = pivots.minCoeff() <= 1e-7 * std::sqrt(std::max(diag_max, 1e-300));
  }
  if (singular) {
    throw NumericalError("fit_linear_model: singular normal equations (d = " +
                         std::to_string(d) + "); use ridge > 0");
  }
  return llt.solve(rhs);
}

namespace {

struct GaussianEval {
  Matrix chol;        // lower factor of the covariance
  double log_norm;    // -0.5 (d log 2pi + log det)
};

GaussianEval prepare(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("gmm: covariance not positive definite");
  Matrix chol = llt.matrixL();
  const double log_det = 2.0 * chol.diagonal().array().log().sum();
  const double d = static_cast<double>(cov.rows());
  return {std::move(chol), -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det)};
}

// Fills log_resp(i, s) = log w_s + log N(x_i | s) and returns the total
// log-likelihood; rows of log_resp are normalized on return.
double e_step(const Matrix& points, const std::vector<GMMComponent>& comps, Matrix& log_resp) {
  const auto n = points.rows();
  const auto L = static_cast<Eigen::Index>(comps.size());
  log_resp.resize(n, L);
  for (Eigen::Index s = 0; s < L; ++s) {
    const auto& c = comps[static_cast<std::size_t>(s)];
    const GaussianEval g = prepare(c.cov);
    const double log_w = c.weight > 0.0 ? std::log(c.weight)
                                        : -std::numeric_limits<double>::infinity();
    Matrix centered = (points.rowwise() - c.mean.transpose()).transpose();
    g.chol.triangularView<Eigen::Lower>().solveInPlace(centered);
    const Vector maha = centered.colwise().squaredNorm().transpose();
    log_resp.col(s) = (log_w + g.log_norm - 0.5 * maha.array()).matrix();
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = log_resp.row(i).maxCoeff();
    const double lse = m + std::log((log_resp.row(i).array() - m).exp().sum());
    log_resp.row(i).array() -= lse;
    total += lse;
  }
  return total;
}

std::vector<Eigen::Index> kmeans_plus_plus(const Matrix& points, std::size_t k, RngStream& rng) {
  const auto n = points.rows();
  std::vector<Eigen::Index> centers;
  centers.push_back(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n))));
  Vector dist2 = (points.rowwise() - points.row(centers[0])).rowwise().squaredNorm();
  while (centers.size() < k) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cumulative = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cumulative += dist2[i];
        if (u < cumulative) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
    }
    centers.push_back(pick);
    dist2 = dist2.cwiseMin((points.rowwise() - points.row(pick)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

double gmm_log_likelihood(const Matrix& points, const std::vector<GMMComponent>& components) {
  Matrix log_resp;
  return e_step(points, components, log_resp);
}

GMMFit fit_gmm(const Matrix& points, std::size_t num_components, const GMMConfig& config) {
  const auto n = points.rows();
  const auto d = points.cols();
  if (num_components == 0) throw InputError("fit_gmm: need at least one component");
  if (static_cast<std::size_t>(n) < num_components) {
    throw InputError("fit_gmm: fewer points than components");
  }
  if (d == 0) throw InputError("fit_gmm: zero-dimensional points");

  const Vector global_mean = points.colwise().mean();
  const Matrix centered = points.rowwise() - global_mean.transpose();
  const Matrix global_cov = centered.transpose() * centered / static_cast<double>(n);
  const double avg_var = global_cov.trace() / static_cast<double>(d);
  const double reg = config.reg_scale * (avg_var > 0.0 ? avg_var : 1.0);
  const Matrix init_cov =
      Matrix::Identity(d, d) * (avg_var > 0.0 ? avg_var : 1.0);

  RngStream rng(config.seed, derive_stream_id({0x676d6dULL}));
  GMMFit fit;
  for (Eigen::Index idx : kmeans_plus_plus(points, num_components, rng)) {
    fit.components.push_back(GMMComponent{points.row(idx).transpose(), init_cov,
                                          1.0 / static_cast<double>(num_components)});
  }

  Matrix log_resp;
  double ll = e_step(points, fit.components, log_resp);
  for (std::size_t it = 0; it < config.max_iters; ++it) {
    const Matrix resp = log_resp.array().exp().matrix();
    const Vector mass = resp.colwise().sum().transpose();
    for (std::size_t s = 0; s < num_components; ++s) {
      const auto col = static_cast<Eigen::Index>(s);
      auto& c = fit.components[s];
      if (mass[col] < config.min_mass) {
        const auto idx = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
        c.mean = points.row(idx).transpose();
        c.cov = init_cov;
        c.weight = 1.0 / static_cast<double>(num_components);
        ++fit.reinitializations;
        std::ostringstream msg;
        msg << "fit_gmm: component " << s << " collapsed (mass " << mass[col]
            << ") at iteration " << it << "; re-initialized from point " << idx;
        warn(msg.str());
        continue;
      }
      c.weight = mass[col] / static_cast<double>(n);
      c.mean = (points.transpose() * resp.col(col)) / mass[col];
      const Matrix diff = points.rowwise() - c.mean.transpose();
      Matrix cov = diff.transpose() * resp.col(col).asDiagonal() * diff / mass[col];
      if (config.covariance == CovarianceType::kDiagonal) {
        cov = Matrix(cov.diagonal().asDiagonal());
      }
      cov = 0.5 * (cov + cov.transpose());
      cov.diagonal().array() += reg;
      c.cov = std::move(cov);
    }
    double weight_total = 0.0;
    for (const auto& c : fit.components) weight_total += c.weight;
    for (auto& c : fit.components) c.weight /= weight_total;

    const double ll_new = e_step(points, fit.components, log_resp);
    fit.log_likelihood_trace.push_back(ll_new);
    fit.iterations = it + 1;
    const double gain = ll_new - ll;
    ll = ll_new;
    if (std::abs(gain) < config.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.log_likelihood = ll;
  return fit;
}

GaussianMixturePrior build_mixture_prior(const GMMFit& fit, double noise_sd) {
  if (fit.components.empty()) throw InputError("build_mixture_prior: empty fit");
  std::vector<double> log_w;
  std::vector<GaussianComponent> comps;
  for (const auto& c : fit.components) {
    log_w.push_back(std::log(c.weight));
    comps.push_back(GaussianComponent{c.mean, c.cov});
  }
  GaussianMixturePrior prior{std::move(comps), normalize(log_w), noise_sd};
  validate(prior);
  return prior;
}

std::vector<OfflineDataset> sample_offline_datasets(const FeatureTable& table,
                                                    std::size_t count, std::size_t size,
                                                    RngStream& rng) {
  if (table.rows() == 0 || size == 0) throw InputError("sample_offline_datasets: empty input");
  std::vector<OfflineDataset> datasets;
  datasets.reserve(count);
  const auto d = static_cast<Eigen::Index>(table.dim());
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t task = rng.uniform_index(table.num_classes);
    OfflineDataset data{Matrix(static_cast<Eigen::Index>(size), d),
                        Vector(static_cast<Eigen::Index>(size))};
    for (std::size_t i = 0; i < size; ++i) {
      const std::size_t row = rng.uniform_index(table.rows());
      const auto r = static_cast<Eigen::Index>(i);
      data.features.row(r) = table.features.row(static_cast<Eigen::Index>(row));
      data.rewards[r] = table.labels[row] == task ? 1.0 : 0.0;
    }
    datasets.push_back(std::move(data));
  }
  return datasets;
}

Matrix fit_offline_parameters(const FeatureTable& table, const PriorFitConfig& config,
                              RngStream& rng) {
  const auto datasets =
      sample_offline_datasets(table, config.num_datasets, config.dataset_size, rng);
  Matrix params(static_cast<Eigen::Index>(datasets.size()), static_cast<Eigen::Index>(table.dim()));
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    params.row(static_cast<Eigen::Index>(k)) =
        fit_linear_model(datasets[k], config.ridge).transpose();
  }
  return params;
}

GaussianMixturePrior fit_prior_from_features(const FeatureTable& table,
                                             std::size_t num_components,
                                             const PriorFitConfig& config,
                                             RngStream& rng) {
  const Matrix params = fit_offline_parameters(table, config, rng);
  const GMMFit fit = fit_gmm(params, num_components, config.gmm);
  GaussianMixturePrior prior = build_mixture_prior(fit, config.noise_sd);
  warn_if_outside_unit_ball(prior);
  return prior;
}

}  // namespace mixts
