#include "mixts/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>

#include "mixts/baselines.hpp"
#include "mixts/csv.hpp"
#include "mixts/diagnostics.hpp"
#include "mixts/errors.hpp"

namespace mixts {

namespace {

enum StreamTag : std::uint64_t {
  kTagInstance = 1,
  kTagRounds = 2,
  kTagAgent = 3,
  kTagFeatureTable = 4,
  kTagOfflineData = 5,
  kTagGmm = 6,
};

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Everything shared by the replications of one sweep value.
struct SweepContext {
  double value = 0.0;
  // linear
  std::optional<GaussianMixturePrior> prior;
  std::optional<GaussianMixturePrior> unimodal;
  std::shared_ptr<const FeatureTable> table;
  // mdp
  std::optional<MDPMixturePrior> mdp_prior;
};

std::size_t as_count(double v, const char* what) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) {
    throw ConfigError(std::string(what) + " sweep values must be positive integers");
  }
  return static_cast<std::size_t>(v);
}

std::vector<SweepContext> build_contexts(const ExperimentConfig& cfg) {
  const auto values = effective_sweep_values(cfg);
  std::vector<SweepContext> contexts;
  const auto& env = cfg.environment;

  if (env.kind == EnvironmentKind::kSynthetic) {
    for (double v : values) {
      SyntheticEnvSettings settings = env.synthetic;
      if (cfg.sweep_axis == SweepAxis::kSigma0) settings.sigma0 = v;
      if (cfg.sweep_axis == SweepAxis::kNumLatent) settings.num_latent = as_count(v, "L");
      SweepContext ctx;
      ctx.value = v;
      ctx.prior = synthetic_linear_prior(settings.d, settings.num_latent, settings.sigma0, settings.sigma);
      ctx.unimodal = moment_matched_prior(*ctx.prior);
      contexts.push_back(std::move(ctx));
    }
    return contexts;
  }

  if (env.kind == EnvironmentKind::kRiverSwim) {
    for (double v : values) {
      RiverSwimSettings settings = env.riverswim;
      if (cfg.sweep_axis == SweepAxis::kConcentration) settings.concentration = v;
      SweepContext ctx;
      ctx.value = v;
      try {
        ctx.mdp_prior = riverswim_prior(settings.num_states, settings.concentration, settings.horizon).prior;
      } catch (const InputError& e) {
        throw ConfigError(std::string("riverswim: ") + e.what());
      }
      contexts.push_back(std::move(ctx));
    }
    return contexts;
  }

  // Feature bandit.
  const auto& fe = env.features;
  std::shared_ptr<const FeatureTable> table;
  if (!fe.features.empty()) {
    table = std::make_shared<const FeatureTable>(read_feature_table(fe.features));
  } else {
    RngStream table_rng(cfg.seed, derive_stream_id({kTagFeatureTable}));
    table = std::make_shared<const FeatureTable>(synthesize_feature_table(
        fe.synthetic.num_classes, fe.synthetic.dim, fe.synthetic.rows_per_class,
        fe.synthetic.noise_sd, table_rng));
  }

  GMMConfig gmm = fe.fit.gmm;
  gmm.seed = derive_stream_id({cfg.seed, kTagGmm, fe.fit.gmm.seed});
  std::optional<Matrix> params;
  std::optional<GaussianMixturePrior> loaded;
  if (!fe.prior_file.empty()) {
    loaded = load_prior(fe.prior_file);
    if (loaded->dim() != table->dim()) {
      throw ConfigError("prior file dimension " + std::to_string(loaded->dim()) +
                        " does not match feature dimension " + std::to_string(table->dim()));
    }
  } else {
    RngStream data_rng(cfg.seed, derive_stream_id({kTagOfflineData}));
    params = fit_offline_parameters(*table, fe.fit, data_rng);
  }
  std::optional<GaussianMixturePrior> unimodal;
  if (params) {
    unimodal = build_mixture_prior(fit_gmm(*params, 1, gmm), fe.fit.noise_sd);
  } else {
    unimodal = moment_matched_prior(*loaded);
  }

  std::map<std::size_t, GaussianMixturePrior> fitted;
  for (double v : values) {
    SweepContext ctx;
    ctx.value = v;
    ctx.table = table;
    ctx.unimodal = unimodal;
    if (loaded) {
      ctx.prior = *loaded;
    } else {
      const std::size_t L =
          cfg.sweep_axis == SweepAxis::kNumLatent ? as_count(v, "L") : fe.num_latent;
      auto it = fitted.find(L);
      if (it == fitted.end()) {
        if (L > static_cast<std::size_t>(params->rows())) {
          throw ConfigError("feature prior: L exceeds the number of offline datasets");
        }
        it = fitted.emplace(L, build_mixture_prior(fit_gmm(*params, L, gmm), fe.fit.noise_sd))
                 .first;
        warn_if_outside_unit_ball(it->second);
      }
      ctx.prior = it->second;
    }
    contexts.push_back(std::move(ctx));
  }
  return contexts;
}

// ---------------------------------------------------------------------------
// Linear bandit replication

class OracleLinearAgent final : public LinearAgent {
 public:
  std::string_view name() const override { return "oracle"; }
  std::size_t select(const ActionSet&, RngStream&) override { return best_; }
  void observe(const ActionSet&, std::size_t, double) override {}
  void set_best(std::size_t best) { best_ = best; }

 private:
  std::size_t best_ = 0;
};

std::size_t argmax_lowest(const Vector& v) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  }
  return best;
}

Exp4Params exp4_params(const ExperimentConfig& cfg, std::size_t num_experts, std::size_t k) {
  Exp4Params p = default_exp4_params(num_experts, cfg.n, k);
  if (cfg.exp4_learning_rate) p.learning_rate = *cfg.exp4_learning_rate;
  if (cfg.exp4_exploration) p.exploration = *cfg.exp4_exploration;
  return p;
}

std::unique_ptr<LinearAgent> make_linear_agent(const std::string& name, const SweepContext& ctx,
                                               const ExperimentConfig& cfg, std::size_t k) {
  const auto& prior = *ctx.prior;
  const auto d = static_cast<Eigen::Index>(prior.dim());
  if (name == "mixts") return std::make_unique<MixTSAgent>(prior, "mixts");
  if (name == "ts") {
    return unimodal_ts_agent(Vector::Zero(d), Matrix::Identity(d, d), prior.noise_sd, "ts");
  }
  if (name == "units") return std::make_unique<MixTSAgent>(*ctx.unimodal, "units");
  if (name == "exp4") {
    std::vector<Vector> experts;
    for (const auto& c : prior.components) experts.push_back(c.mean);
    return std::make_unique<Exp4Agent>(std::move(experts),
                                       exp4_params(cfg, prior.num_components(), k), "exp4");
  }
  if (name == "corral") {
    return std::make_unique<CorralExp4Agent>(prior, exp4_params(cfg, prior.num_components(), k),
                                             "corral");
  }
  if (name == "oracle") return std::make_unique<OracleLinearAgent>();
  throw ConfigError("unknown linear agent '" + name + "'");
}

std::unique_ptr<LinearEnvironment> make_linear_env(const SweepContext& ctx,
                                                   const ExperimentConfig& cfg, RngStream& rng) {
  if (ctx.table) {
    return std::make_unique<FeatureFileEnv>(ctx.table, cfg.environment.features.options, rng);
  }
  return std::make_unique<SyntheticLinearEnv>(*ctx.prior, rng);
}

void run_linear_agent(const ExperimentConfig& cfg, const SweepContext& ctx,
                      std::size_t sweep_index, std::size_t rep, const std::string& agent_name,
                      const RunOptions& options, ReplicationResult& out) {
  RngStream instance_rng(cfg.seed, instance_stream_id(sweep_index, rep));
  RngStream round_rng(cfg.seed, round_stream_id(sweep_index, rep));
  RngStream agent_rng(cfg.seed, agent_stream_id(sweep_index, rep, agent_name));
  auto env = make_linear_env(ctx, cfg, instance_rng);
  out.true_latent = env->true_latent();
  const std::size_t k = ctx.table ? cfg.environment.features.options.k_actions : env->dim();
  auto agent = make_linear_agent(agent_name, ctx, cfg, k);
  auto* oracle = dynamic_cast<OracleLinearAgent*>(agent.get());
  auto* mixts = agent_name == "mixts" ? dynamic_cast<MixTSAgent*>(agent.get()) : nullptr;

  const bool track = cfg.diagnostics && mixts != nullptr;
  const double sigma = ctx.prior->noise_sd;
  const double horizon = static_cast<double>(cfg.n);
  std::optional<LatentDiagnostics> diag;
  if (track) diag = bandit_diagnostics(ctx.prior->num_components(), horizon, env->dim());
  const bool latent_tracked =
      mixts != nullptr && env->true_latent() < ctx.prior->num_components() && !ctx.table;

  double cum = 0.0;
  for (std::size_t t = 1; t <= cfg.n; ++t) {
    BanditRound round = env->begin_round(round_rng);
    if (round.actions.dim() != ctx.prior->dim()) {
      throw ConfigError("agent/environment dimension mismatch");
    }
    const std::size_t best = argmax_lowest(round.true_means);
    if (oracle) oracle->set_best(best);
    const std::size_t chosen = agent->select(round.actions, agent_rng);

    double mu_bar = 0.0;
    double width = 0.0;
    std::size_t sampled = 0;
    if (track) {
      sampled = mixts->last_latent();
      const Vector a = round.actions.action(chosen);
      mu_bar = a.dot(mixts->posterior().mean(sampled));
      width = confidence_width(mixts->posterior(), sampled, a, horizon, env->dim());
    }
    const double y = env->reward(chosen, round_rng);
    agent->observe(round.actions, chosen, y);

    const double inst = round.true_means[static_cast<Eigen::Index>(best)] -
                        round.true_means[static_cast<Eigen::Index>(chosen)];
    cum += inst;
    RegretRecord rec{ctx.value, rep, agent_name, t, inst, cum, {}, std::nullopt};
    if (track) {
      *diag = record_bandit_round(std::move(*diag), sampled, mu_bar, width, y);
      rec.over_estimation = diag->over_estimation;
      if (latent_tracked) {
        rec.true_latent_in_set =
            in_confidence_set(*diag, Setting::kBandit, sigma, env->true_latent());
      }
    }
    out.records.push_back(std::move(rec));
    if (options.observer) {
      options.observer(RoundEvent{sweep_index, ctx.value, rep, agent_name, t,
                                  env->true_latent(),
                                  mixts ? &mixts->posterior().weights() : nullptr});
    }
  }
}

// ---------------------------------------------------------------------------
// Tabular replication

class OracleMDPAgent final : public MDPAgent {
 public:
  explicit OracleMDPAgent(Policy policy) : policy_(std::move(policy)) {}
  std::string_view name() const override { return "oracle"; }
  Policy begin_episode(RngStream&) override { return policy_; }
  void observe(std::size_t, std::size_t, int, std::size_t) override {}

 private:
  Policy policy_;
};

std::unique_ptr<MDPAgent> make_mdp_agent(const std::string& name, const MDPMixturePrior& prior,
                                         const TabularEnvironment& env) {
  if (name == "mixts") return std::make_unique<MixTSMDPAgent>(prior, "mixts");
  if (name == "psrl") {
    return psrl_agent(prior.num_states, prior.num_actions, prior.horizon, prior.initial, "psrl");
  }
  if (name == "oracle") return std::make_unique<OracleMDPAgent>(env.optimal_policy());
  throw ConfigError("unknown mdp agent '" + name + "'");
}

void run_mdp_agent(const ExperimentConfig& cfg, const SweepContext& ctx,
                   std::size_t sweep_index, std::size_t rep, const std::string& agent_name,
                   const RunOptions& options, ReplicationResult& out) {
  const MDPMixturePrior& prior = *ctx.mdp_prior;
  RngStream instance_rng(cfg.seed, instance_stream_id(sweep_index, rep));
  RngStream round_rng(cfg.seed, round_stream_id(sweep_index, rep));
  RngStream agent_rng(cfg.seed, agent_stream_id(sweep_index, rep, agent_name));
  const TabularEnvironment env(prior, instance_rng);
  out.true_latent = env.true_latent();
  auto agent = make_mdp_agent(agent_name, prior, env);
  auto* mixts = agent_name == "mixts" ? dynamic_cast<MixTSMDPAgent*>(agent.get()) : nullptr;

  const bool track = cfg.diagnostics && mixts != nullptr;
  const double horizon_n = static_cast<double>(cfg.n);
  const double h = static_cast<double>(prior.horizon);
  std::optional<LatentDiagnostics> diag;
  if (track) diag = mdp_diagnostics(prior.num_components(), horizon_n);

  double cum = 0.0;
  for (std::size_t t = 1; t <= cfg.n; ++t) {
    const Policy policy = agent->begin_episode(agent_rng);
    double vbar = 0.0;
    std::optional<ConfidenceWidths> widths;
    std::size_t sampled = 0;
    if (track) {
      sampled = mixts->last_latent();
      const auto& start = mixts->episode_start_posterior();
      vbar = policy_value(posterior_mean_mdp(start, sampled), policy);
      widths = mdp_confidence_widths(start, sampled, horizon_n);
    }

    double width_sum = 0.0;
    double episode_return = 0.0;
    for (const auto& step : env.run_episode(policy, round_rng)) {
      agent->observe(step.x, step.a, step.r, step.x_next);
      episode_return += step.r;
      if (widths) {
        const std::size_t pair = env.mdp().pair(step.x, step.a);
        width_sum += widths->reward[pair] + widths->transition[pair];
      }
    }

    const double inst = env.optimal_value() - policy_value(env.mdp(), policy);
    cum += inst;
    RegretRecord rec{ctx.value, rep, agent_name, t, inst, cum, {}, std::nullopt};
    if (track) {
      *diag = record_mdp_episode(std::move(*diag), sampled, vbar, width_sum, episode_return,
                                 prior.horizon);
      rec.over_estimation = diag->over_estimation;
      rec.true_latent_in_set = in_confidence_set(*diag, Setting::kMdp, h, env.true_latent());
    }
    out.records.push_back(std::move(rec));
    if (options.observer) {
      options.observer(RoundEvent{sweep_index, ctx.value, rep, agent_name, t, env.true_latent(),
                                  mixts ? &mixts->posterior().weights() : nullptr});
    }
  }
}

ReplicationResult run_replication(const ExperimentConfig& cfg, const SweepContext& ctx,
                                  std::size_t sweep_index, std::size_t rep,
                                  const RunOptions& options) {
  ReplicationResult result;
  result.sweep_index = sweep_index;
  result.sweep_value = ctx.value;
  result.rep = rep;
  result.records.reserve(cfg.agents.size() * cfg.n);
  for (const auto& name : cfg.agents) {
    if (cfg.setting == ExperimentSetting::kLinear) {
      run_linear_agent(cfg, ctx, sweep_index, rep, name, options, result);
    } else {
      run_mdp_agent(cfg, ctx, sweep_index, rep, name, options, result);
    }
  }
  return result;
}

}  // namespace

std::uint64_t instance_stream_id(std::size_t sweep_index, std::size_t rep) {
  return derive_stream_id({sweep_index, rep, kTagInstance});
}

std::uint64_t round_stream_id(std::size_t sweep_index, std::size_t rep) {
  return derive_stream_id({sweep_index, rep, kTagRounds});
}

std::uint64_t agent_stream_id(std::size_t sweep_index, std::size_t rep, std::string_view agent) {
  return derive_stream_id({sweep_index, rep, kTagAgent, fnv1a(agent)});
}

std::vector<double> effective_sweep_values(const ExperimentConfig& cfg) {
  if (cfg.sweep_axis == SweepAxis::kNone) return {0.0};
  return cfg.sweep_values;
}

std::size_t diagnostic_columns(const ExperimentConfig& cfg) {
  if (!cfg.diagnostics) return 0;
  const auto& env = cfg.environment;
  switch (env.kind) {
    case EnvironmentKind::kRiverSwim:
      return 2;
    case EnvironmentKind::kSynthetic:
      if (cfg.sweep_axis == SweepAxis::kNumLatent) {
        double max_v = 0.0;
        for (double v : cfg.sweep_values) max_v = std::max(max_v, v);
        return static_cast<std::size_t>(max_v);
      }
      return env.synthetic.num_latent;
    case EnvironmentKind::kFeatures: {
      if (!env.features.prior_file.empty()) return load_prior(env.features.prior_file).num_components();
      if (cfg.sweep_axis == SweepAxis::kNumLatent) {
        double max_v = 0.0;
        for (double v : cfg.sweep_values) max_v = std::max(max_v, v);
        return static_cast<std::size_t>(max_v);
      }
      return env.features.num_latent;
    }
  }
  return 0;
}

void run_experiment(const ExperimentConfig& cfg, const ReplicationSink& sink,
                    const RunOptions& options) {
  validate(cfg);
  const std::vector<SweepContext> contexts = build_contexts(cfg);
  const std::size_t total = contexts.size() * cfg.replications;
  auto task = [&](std::size_t idx) {
    const std::size_t sweep = idx / cfg.replications;
    return run_replication(cfg, contexts[sweep], sweep, idx % cfg.replications, options);
  };

  std::size_t workers = cfg.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, total);
  if (workers <= 1) {
    for (std::size_t idx = 0; idx < total; ++idx) sink(task(idx));
    return;
  }

  std::mutex mu;
  std::condition_variable ready;
  std::map<std::size_t, ReplicationResult> done;
  std::exception_ptr failure;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  // Keeps finished-but-unsunk results bounded.
  const std::size_t window = 4 * workers;
  std::size_t emitted = 0;
  std::condition_variable room;

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      {
        std::unique_lock lock(mu);
        room.wait(lock, [&] { return stop.load() || idx < emitted + window; });
        if (stop.load()) return;
      }
      try {
        ReplicationResult r = task(idx);
        std::lock_guard lock(mu);
        done.emplace(idx, std::move(r));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        stop.store(true);
      }
      ready.notify_all();
      room.notify_all();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) threads.emplace_back(worker);

  std::exception_ptr sink_failure;
  while (emitted < total) {
    ReplicationResult r;
    {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return failure || done.count(emitted) > 0; });
      if (failure) break;
      auto node = done.extract(emitted);
      r = std::move(node.mapped());
    }
    try {
      sink(r);
    } catch (...) {
      sink_failure = std::current_exception();
      stop.store(true);
      room.notify_all();
      break;
    }
    {
      std::lock_guard lock(mu);
      ++emitted;
    }
    room.notify_all();
  }
  stop.store(true);
  room.notify_all();
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
  if (sink_failure) std::rethrow_exception(sink_failure);
}

std::vector<RegretRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  std::vector<RegretRecord> records;
  run_experiment(
      cfg,
      [&](const ReplicationResult& r) {
        records.insert(records.end(), r.records.begin(), r.records.end());
      },
      options);
  return records;
}

void write_csv_header(std::ostream& out, std::size_t diagnostic_columns) {
  out << "sweep,rep,agent,t,inst_regret,cum_regret";
  if (diagnostic_columns > 0) {
    for (std::size_t s = 0; s < diagnostic_columns; ++s) out << ",G_" << s;
    out << ",in_C";
  }
  out << '\n';
}

void write_csv_records(std::ostream& out, const std::vector<RegretRecord>& records,
                       std::size_t diagnostic_columns) {
  std::string line;
  for (const auto& r : records) {
    line.clear();
    line += format_double(r.sweep);
    line += ',';
    line += std::to_string(r.rep);
    line += ',';
    line += r.agent;
    line += ',';
    line += std::to_string(r.t);
    line += ',';
    line += format_double(r.inst_regret);
    line += ',';
    line += format_double(r.cum_regret);
    if (diagnostic_columns > 0) {
      for (std::size_t s = 0; s < diagnostic_columns; ++s) {
        line += ',';
        if (s < r.over_estimation.size()) line += format_double(r.over_estimation[s]);
      }
      line += ',';
      if (r.true_latent_in_set) line += *r.true_latent_in_set ? '1' : '0';
    }
    line += '\n';
    out << line;
  }
}

void run_experiment_to_csv(const ExperimentConfig& cfg, std::ostream& out,
                           const RunOptions& options) {
  const std::size_t columns = diagnostic_columns(cfg);
  write_csv_header(out, columns);
  run_experiment(
      cfg, [&](const ReplicationResult& r) { write_csv_records(out, r.records, columns); },
      options);
  out.flush();
  if (!out) throw ConfigError("failed writing CSV output");
}

void RegretAggregator::add(const RegretRecord& record) {
  auto it = std::find_if(series_.begin(), series_.end(), [&](const Series& s) {
    return s.sweep == record.sweep && s.agent == record.agent;
  });
  if (it == series_.end()) {
    series_.push_back(Series{record.sweep, record.agent, {}});
    it = std::prev(series_.end());
  }
  if (record.t == 0) throw InputError("aggregate: rounds are 1-based");
  if (it->by_t.size() < record.t) it->by_t.resize(record.t);
  Moments& m = it->by_t[record.t - 1];
  ++m.count;
  const double delta = record.cum_regret - m.mean;
  m.mean += delta / static_cast<double>(m.count);
  m.m2 += delta * (record.cum_regret - m.mean);
}

void RegretAggregator::add(const ReplicationResult& result) {
  for (const auto& r : result.records) add(r);
}

std::vector<AggregateRow> RegretAggregator::rows() const {
  std::vector<AggregateRow> out;
  for (const auto& s : series_) {
    for (std::size_t i = 0; i < s.by_t.size(); ++i) {
      const Moments& m = s.by_t[i];
      if (m.count == 0) continue;
      double se = 0.0;
      if (m.count > 1) {
        const double n = static_cast<double>(m.count);
        se = std::sqrt(std::max(m.m2, 0.0) / (n - 1.0)) / std::sqrt(n);
      }
      out.push_back({s.sweep, s.agent, i + 1, m.mean, se, m.count, m.count == 1});
    }
  }
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<RegretRecord>& records) {
  RegretAggregator agg;
  for (const auto& r : records) agg.add(r);
  return agg.rows();
}

}  // namespace mixts
