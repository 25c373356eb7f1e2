#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mixts/errors.hpp"
#include "mixts/linear_bandit.hpp"
#include "mixts/logging.hpp"
#include "oracles.hpp"

namespace {

using namespace mixts;

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Matrix random_spd(std::size_t d, RngStream& rng, double scale = 1.0) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  return scale * (a * a.transpose() / static_cast<double>(d) + 0.3 * Matrix::Identity(n, n));
}

GaussianMixturePrior random_prior(std::size_t d, std::size_t L, RngStream& rng, double sigma) {
  std::vector<GaussianComponent> comps;
  std::vector<double> log_w;
  for (std::size_t s = 0; s < L; ++s) {
    Vector m(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = rng.normal(0.0, 0.5);
    comps.push_back({m, random_spd(d, rng, 0.5)});
    log_w.push_back(rng.normal());
  }
  return {std::move(comps), normalize(log_w), sigma};
}

// Silences the unit-ball warning for priors built on purpose outside it.
struct QuietWarnings {
  QuietWarnings() : previous(set_warning_handler({})) {}
  ~QuietWarnings() { set_warning_handler(previous); }
  WarningHandler previous;
};

TEST(PosteriorInit, EqualsPrior) {
  RngStream rng(1, 1);
  const auto prior = random_prior(3, 3, rng, 0.5);
  const auto post = posterior_init(prior);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_LT((post.mean(s) - prior.components[s].mean).norm(), 1e-12);
    EXPECT_LT((post.covariance(s) - prior.components[s].cov).norm(), 1e-12);
  }
  EXPECT_EQ(post.weights(), prior.latent_prior);
  EXPECT_EQ(post.rounds(), 0u);
  EXPECT_TRUE(post.gram().isZero(0.0));
}

TEST(PosteriorInit, UniformWeightsAndIdentity) {
  const auto prior = unimodal_prior(Vector::Zero(2), Matrix::Identity(2, 2), 1.0);
  const auto post = posterior_init(prior);
  Eigen::SelfAdjointEigenSolver<Matrix> es(post.covariance(0));
  EXPECT_NEAR(es.eigenvalues()[0], 1.0, 1e-15);
  EXPECT_NEAR(es.eigenvalues()[1], 1.0, 1e-15);

  std::vector<GaussianComponent> comps(3, {Vector::Zero(1), Matrix::Identity(1, 1)});
  const auto post3 = posterior_init({comps, MixtureWeights::uniform(3), 1.0});
  for (double lw : post3.weights().log_weights()) EXPECT_NEAR(lw, std::log(1.0 / 3.0), 1e-15);
}

TEST(Validate, RejectsBadPriors) {
  Matrix asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_THROW(validate(GaussianMixturePrior{{{Vector::Zero(2), asym}}, MixtureWeights::uniform(1), 1.0}),
               InputError);
  Matrix indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  EXPECT_THROW(validate(GaussianMixturePrior{{{Vector::Zero(2), indefinite}},
                                             MixtureWeights::uniform(1), 1.0}),
               InputError);
  EXPECT_THROW(validate(unimodal_prior(Vector::Zero(2), Matrix::Identity(2, 2), 0.0)), InputError);
}

TEST(Validate, UnitBallIsOnlyAWarning) {
  std::vector<std::string> seen;
  auto previous = set_warning_handler([&](std::string_view m) { seen.emplace_back(m); });
  const auto prior = unimodal_prior(vec({3.0, 0.0}), Matrix::Identity(2, 2), 1.0);
  EXPECT_NO_THROW(validate(prior));
  EXPECT_EQ(warn_if_outside_unit_ball(prior), 1u);
  set_warning_handler(previous);
  EXPECT_EQ(seen.size(), 1u);
}

TEST(PredictiveLoglik, ZeroResidual) {
  const auto post = posterior_init(unimodal_prior(vec({0.5}), Matrix::Identity(1, 1) * 2.0, 1.0));
  // variance = a^T Sigma a + sigma^2 = 2 + 1
  EXPECT_NEAR(predictive_loglik(post, 0, vec({1.0}), 0.5), -0.5 * std::log(2 * std::numbers::pi * 3.0),
              1e-14);
}

TEST(PredictiveLoglik, MatchesDensity) {
  const auto post = posterior_init(unimodal_prior(vec({0.0}), Matrix::Identity(1, 1), 1.0));
  EXPECT_NEAR(predictive_loglik(post, 0, vec({1.0}), 2.0), oracle::normal_logpdf(2.0, 0.0, 2.0),
              1e-14);
  EXPECT_THROW(predictive_loglik(post, 0, vec({1.0}), std::nan("")), InputError);
  EXPECT_THROW(predictive_loglik(post, 1, vec({1.0}), 0.0), InputError);
}

TEST(PosteriorUpdate, ScalarConjugateValues) {
  auto post = posterior_init(unimodal_prior(vec({0.0}), Matrix::Identity(1, 1), 1.0));
  post = posterior_update(std::move(post), vec({1.0}), 1.0);
  EXPECT_NEAR(post.covariance(0)(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(post.mean(0)[0], 0.5, 1e-15);
  EXPECT_EQ(post.rounds(), 1u);
}

TEST(PosteriorUpdate, ScalarMatchesFineQuadrature) {
  auto post = posterior_init(unimodal_prior(vec({0.0}), Matrix::Identity(1, 1), 1.0));
  post = posterior_update(std::move(post), vec({1.0}), 1.0);
  const int points = 100000;
  const double lo = -6.0;
  const double step = 12.0 / (points - 1);
  std::vector<double> grid(points);
  double z = 0.0;
  for (int i = 0; i < points; ++i) {
    const double th = lo + i * step;
    grid[i] = std::exp(oracle::normal_logpdf(th, 0.0, 1.0) + oracle::normal_logpdf(1.0, th, 1.0));
    z += grid[i] * step;
  }
  double tv = 0.0;
  for (int i = 0; i < points; ++i) {
    const double th = lo + i * step;
    const double model = std::exp(oracle::normal_logpdf(th, post.mean(0)[0], post.covariance(0)(0, 0)));
    tv += std::abs(grid[i] / z - model) * step;
  }
  EXPECT_LT(0.5 * tv, 1e-4);
}

TEST(PosteriorUpdate, DensityRatioExample) {
  std::vector<GaussianComponent> comps{{vec({1.0}), Matrix::Identity(1, 1) * 0.01},
                                       {vec({0.0}), Matrix::Identity(1, 1) * 0.01}};
  auto post = posterior_init({comps, MixtureWeights::uniform(2), 0.1});
  post = posterior_update(std::move(post), vec({1.0}), 1.0);
  EXPECT_NEAR(post.weights().log_weight(0) - post.weights().log_weight(1), 25.0, 1e-10);
  EXPECT_NEAR(post.weights().probability(0), 1.0 / (1.0 + std::exp(-25.0)), 1e-15);
}

TEST(PosteriorUpdate, IdenticalComponentsStayTied) {
  RngStream rng(2, 2);
  const Matrix cov = random_spd(2, rng);
  std::vector<GaussianComponent> comps{{vec({0.2, 0.1}), cov}, {vec({0.2, 0.1}), cov}};
  auto post = posterior_init({comps, MixtureWeights::uniform(2), 0.5});
  for (int t = 0; t < 30; ++t) {
    post = posterior_update(std::move(post), vec({rng.normal(), rng.normal()}), rng.normal());
    EXPECT_EQ(post.weights().log_weight(0), post.weights().log_weight(1));
  }
}

// Weights from incremental updates equal prior weight times the joint
// Gaussian marginal likelihood y ~ N(X m_s, X C_s X^T + sigma^2 I).
TEST(PosteriorUpdate, IncrementalWeightsEqualBatchMarginal) {
  RngStream rng(3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + rng.uniform_index(4);
    const std::size_t L = 1 + rng.uniform_index(4);
    const double sigma = 0.3 + rng.uniform();
    const auto prior = random_prior(d, L, rng, sigma);
    auto post = posterior_init(prior);
    const int n = 12;
    Matrix X(n, static_cast<Eigen::Index>(d));
    Vector y(n);
    for (int t = 0; t < n; ++t) {
      for (Eigen::Index j = 0; j < X.cols(); ++j) X(t, j) = rng.normal();
      y[t] = rng.normal();
      post = posterior_update(std::move(post), X.row(t).transpose(), y[t]);
    }
    std::vector<double> batch;
    for (std::size_t s = 0; s < L; ++s) {
      const auto& c = prior.components[s];
      Matrix cov = X * c.cov * X.transpose();
      cov.diagonal().array() += sigma * sigma;
      Eigen::LLT<Matrix> llt(cov);
      const Vector r = y - X * c.mean;
      const Vector z = llt.matrixL().solve(r);
      const double log_det = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
      batch.push_back(prior.latent_prior.log_weight(s) - 0.5 * z.squaredNorm() - 0.5 * log_det -
                      0.5 * n * std::log(2.0 * std::numbers::pi));
    }
    const auto expected = normalize(batch);
    for (std::size_t s = 0; s < L; ++s) {
      EXPECT_NEAR(post.weights().log_weight(s), expected.log_weight(s), 1e-8);
    }
  }
}

TEST(PosteriorUpdate, RecomputeInvariantsAndContraction) {
  RngStream rng(4, 4);
  const auto prior = random_prior(3, 2, rng, 0.4);
  auto post = posterior_init(prior);
  std::vector<double> last_max{max_eigenvalue(prior.components[0].cov),
                               max_eigenvalue(prior.components[1].cov)};
  for (int t = 0; t < 40; ++t) {
    post = posterior_update(std::move(post), vec({rng.normal(), rng.normal(), rng.normal()}),
                            rng.normal());
    for (std::size_t s = 0; s < 2; ++s) {
      const Matrix prec0 = prior.components[s].cov.inverse();
      const Matrix expected_cov = (prec0 + post.gram() / (0.4 * 0.4)).inverse();
      const Vector expected_mean =
          expected_cov * (prec0 * prior.components[s].mean + post.moment() / (0.4 * 0.4));
      EXPECT_LT((post.covariance(s) - expected_cov).norm() / expected_cov.norm(), 1e-6);
      EXPECT_LT((post.mean(s) - expected_mean).norm() / std::max(1e-12, expected_mean.norm()), 1e-6);
      const double lmax = max_eigenvalue(post.covariance(s));
      EXPECT_LE(lmax, last_max[s] + 1e-8);
      last_max[s] = lmax;
    }
  }
}

TEST(PosteriorUpdate, RejectsBadObservations) {
  auto post = posterior_init(unimodal_prior(Vector::Zero(2), Matrix::Identity(2, 2), 1.0));
  EXPECT_THROW(posterior_update(post, vec({1.0}), 0.0), InputError);
  EXPECT_THROW(posterior_update(post, vec({1.0, 0.0}), std::nan("")), InputError);
}

TEST(PosteriorUpdate, PermutationEquivariant) {
  RngStream rng(5, 5);
  const auto prior = random_prior(2, 3, rng, 0.5);
  const std::vector<std::size_t> perm{2, 0, 1};
  std::vector<GaussianComponent> comps;
  std::vector<double> log_w;
  for (std::size_t p : perm) {
    comps.push_back(prior.components[p]);
    log_w.push_back(prior.latent_prior.log_weight(p));
  }
  auto a = posterior_init(prior);
  auto b = posterior_init({comps, normalize(log_w), 0.5});
  for (int t = 0; t < 10; ++t) {
    const Vector x = vec({rng.normal(), rng.normal()});
    const double y = rng.normal();
    a = posterior_update(std::move(a), x, y);
    b = posterior_update(std::move(b), x, y);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(b.weights().log_weight(i), a.weights().log_weight(perm[i]), 1e-10);
    EXPECT_LT((b.mean(i) - a.mean(perm[i])).norm(), 1e-12);
  }
}

TEST(SampleModel, CovarianceMatchesMonteCarlo) {
  const auto post = posterior_init(unimodal_prior(Vector::Zero(2), Matrix::Identity(2, 2), 1.0));
  RngStream rng(6, 6);
  const int n = 100000;
  Matrix acc = Matrix::Zero(2, 2);
  Vector mean = Vector::Zero(2);
  for (int i = 0; i < n; ++i) {
    const auto draw = sample_model(post, rng);
    EXPECT_EQ(draw.latent, 0u);
    acc += draw.theta * draw.theta.transpose();
    mean += draw.theta;
  }
  mean /= n;
  const Matrix cov = acc / n - mean * mean.transpose();
  EXPECT_LT((cov - Matrix::Identity(2, 2)).norm(), 0.02);
}

TEST(SelectAction, TieBreakAndArgmax) {
  const ActionSet indicators(Matrix::Identity(4, 4));
  EXPECT_EQ(select_action(vec({0.1, 0.5, 0.3, 0.2}), indicators), 1u);
  EXPECT_EQ(select_action(Vector::Zero(4), indicators), 0u);
}

TEST(SelectAction, MatchesExhaustiveScan) {
  RngStream rng(7, 7);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix rows(50, 5);
    for (Eigen::Index i = 0; i < 50; ++i)
      for (Eigen::Index j = 0; j < 5; ++j) rows(i, j) = rng.normal();
    const ActionSet actions(rows);
    const Vector theta = vec({rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    std::size_t best = 0;
    double best_v = -1e300;
    for (Eigen::Index i = 0; i < 50; ++i) {
      double v = 0.0;
      for (Eigen::Index j = 0; j < 5; ++j) v += rows(i, j) * theta[j];
      if (v > best_v) {
        best_v = v;
        best = static_cast<std::size_t>(i);
      }
    }
    EXPECT_EQ(select_action(theta, actions), best);
  }
}

TEST(ActionSet, KappaBound) {
  Matrix rows(2, 2);
  rows << 3, 4, 0, 1;
  EXPECT_DOUBLE_EQ(ActionSet(rows).kappa(), 5.0);
  EXPECT_THROW(ActionSet(rows, 1.0), InputError);
  EXPECT_THROW(ActionSet(Matrix(0, 2)), InputError);
}

TEST(ConfidenceWidth, Examples) {
  const auto post = posterior_init(unimodal_prior(Vector::Zero(1), Matrix::Identity(1, 1), 1.0));
  EXPECT_EQ(confidence_width(post, 0, Vector::Zero(1), 100.0, 1), 0.0);
  EXPECT_NEAR(confidence_width(post, 0, vec({1.0}), std::numbers::e, 1), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(confidence_width(post, 0, vec({1.0}), 1.0, 1), DomainError);
}

TEST(ConfidenceWidth, MatchesQuadPrecision) {
  using oracle::Quad;
  RngStream rng(8, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix cov = random_spd(3, rng);
    const auto post = posterior_init(unimodal_prior(Vector::Zero(3), cov, 1.0));
    const Vector a = vec({rng.normal(), rng.normal(), rng.normal()});
    Quad quad_form = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) quad_form += Quad(a[i]) * Quad(cov(i, j)) * Quad(a[j]);
    const Quad expected = boost::multiprecision::sqrt(quad_form) *
                          boost::multiprecision::sqrt(Quad(6) * boost::multiprecision::log(Quad(300)));
    const double got = confidence_width(post, 0, a, 100.0, 3);
    EXPECT_NEAR(got, static_cast<double>(expected), 1e-13 * got);
  }
}

TEST(MixTSAgent, IdentifiesWellSeparatedLatent) {
  // L = 2, gap as in the density-ratio example; true latent 1 (index 0 here
  // carries the theta0 = 1 component).
  std::vector<GaussianComponent> comps{{vec({0.0, 1.0}), Matrix::Identity(2, 2) * 0.01},
                                       {vec({1.0, 0.0}), Matrix::Identity(2, 2) * 0.01}};
  const GaussianMixturePrior prior{comps, MixtureWeights::uniform(2), 0.1};
  QuietWarnings quiet;
  const ActionSet actions(Matrix::Identity(2, 2));
  int identified = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    RngStream env(100, static_cast<std::uint64_t>(rep));
    RngStream agent_rng(200, static_cast<std::uint64_t>(rep));
    const Vector theta = comps[1].mean + 0.1 * vec({env.normal(), env.normal()});
    MixTSAgent agent(prior);
    bool ok = false;
    for (int t = 0; t < 20 && !ok; ++t) {
      const std::size_t i = agent.select(actions, agent_rng);
      agent.observe(actions, i, theta[static_cast<Eigen::Index>(i)] + 0.1 * env.normal());
      ok = agent.posterior().weights().probability(1) > 0.95;
    }
    identified += ok ? 1 : 0;
  }
  EXPECT_GE(identified, static_cast<int>(0.95 * reps));
}

}  // namespace
