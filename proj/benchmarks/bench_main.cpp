#include <benchmark/benchmark.h>

#include "mixts/environments.hpp"
#include "mixts/linear_bandit.hpp"
#include "mixts/prior_fitting.hpp"
#include "mixts/tabular_mdp.hpp"

namespace {

using namespace mixts;

// One conjugate update of an L-component posterior in dimension d.
void BM_PosteriorUpdate(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto L = static_cast<std::size_t>(state.range(1));
  const auto prior = synthetic_linear_prior(d, L, 0.1, 0.1);
  auto post = posterior_init(prior);
  RngStream rng(1, 1);
  Vector a = Vector::Zero(static_cast<Eigen::Index>(d));
  for (auto _ : state) {
    a.setZero();
    a(static_cast<Eigen::Index>(rng.uniform_index(d))) = 1.0;
    post = posterior_update(std::move(post), a, rng.normal(0.5, 0.1));
    benchmark::DoNotOptimize(post.weights());
  }
}
BENCHMARK(BM_PosteriorUpdate)->Args({10, 10})->Args({30, 30})->Args({50, 10});

void BM_SampleAndSelect(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto prior = synthetic_linear_prior(d, d, 0.1, 0.1);
  MixTSAgent agent(prior);
  const ActionSet actions(Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  RngStream rng(2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(agent.select(actions, rng));
}
BENCHMARK(BM_SampleAndSelect)->Arg(10)->Arg(30);

void BM_Plan(benchmark::State& state) {
  const auto nX = static_cast<std::size_t>(state.range(0));
  const auto river = riverswim_prior(nX, 10.0, 20);
  const auto& mdp = river.mean_models[kCurrentLeft];
  for (auto _ : state) benchmark::DoNotOptimize(plan(mdp));
}
BENCHMARK(BM_Plan)->Arg(10)->Arg(50);

void BM_SampleMdp(benchmark::State& state) {
  const auto nX = static_cast<std::size_t>(state.range(0));
  const MDPMixturePosterior post(riverswim_prior(nX, 10.0, 20).prior);
  RngStream rng(3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(sample_mdp(post, 0, rng));
}
BENCHMARK(BM_SampleMdp)->Arg(10)->Arg(50);

void BM_FitGmm(benchmark::State& state) {
  RngStream rng(4, 4);
  const auto table = synthesize_feature_table(20, 20, 50, 0.3, rng);
  PriorFitConfig cfg;
  cfg.num_datasets = static_cast<std::size_t>(state.range(0));
  cfg.dataset_size = 200;
  const Matrix params = fit_offline_parameters(table, cfg, rng);
  for (auto _ : state) benchmark::DoNotOptimize(fit_gmm(params, 20, cfg.gmm));
}
BENCHMARK(BM_FitGmm)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
