#include "mixts_cli/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixts/bounds.hpp"
#include "mixts/csv.hpp"
#include "mixts/errors.hpp"
#include "mixts/feature_table.hpp"
#include "mixts/harness.hpp"
#include "mixts/logging.hpp"
#include "mixts/prior_fitting.hpp"

namespace mixts::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct RunOverrides {
  std::string config;
  std::optional<std::size_t> n;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
};

void add_run_options(CLI::App& sub, RunOverrides& o) {
  sub.add_option("--config", o.config, "Experiment config (JSON)")->required();
  sub.add_option("--n", o.n, "Rounds or episodes per replication");
  sub.add_option("--reps", o.reps, "Replications per sweep value");
  sub.add_option("--seed", o.seed, "Base seed");
  sub.add_option("--workers", o.workers, "Worker threads (0: all cores)");
  sub.add_option("--out", o.out, "Output CSV path ('-' for stdout)");
}

// Opens the output path, or returns null for stdout.
std::unique_ptr<std::ofstream> open_output(const std::string& path) {
  if (path.empty() || path == "-") return nullptr;
  auto file = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*file) throw ConfigError("cannot write " + path);
  return file;
}

void run_sim(const RunOverrides& o, ExperimentSetting expected, std::ostream& out) {
  ExperimentConfig cfg = load_experiment_config(o.config);
  if (cfg.setting != expected) {
    throw ConfigError(expected == ExperimentSetting::kLinear
                          ? "run-linear needs a config with setting \"linear\""
                          : "run-mdp needs a config with setting \"mdp\"");
  }
  if (o.n) cfg.n = *o.n;
  if (o.reps) cfg.replications = *o.reps;
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.out.empty()) cfg.output = o.out;
  validate(cfg);
  auto file = open_output(cfg.output.string());
  run_experiment_to_csv(cfg, file ? *file : out);
}

struct FitPriorOptions {
  std::string config;
  std::string features;
  std::size_t num_latent = 0;
  std::string out;
  std::size_t num_datasets = 1000;
  std::size_t dataset_size = 500;
  double ridge = 1e-3;
  double sigma = 0.5;
  std::string covariance = "full";
  std::uint64_t seed = 0;
};

void run_fit_prior(const FitPriorOptions& o, std::ostream& out, std::ostream& err) {
  PriorFitConfig fit;
  fit.num_datasets = o.num_datasets;
  fit.dataset_size = o.dataset_size;
  fit.ridge = o.ridge;
  fit.noise_sd = o.sigma;
  if (o.covariance == "diagonal") {
    fit.gmm.covariance = CovarianceType::kDiagonal;
  } else if (o.covariance != "full") {
    throw ConfigError("--covariance must be full or diagonal");
  }
  if (!o.config.empty()) {
    // Reuse the prior-fitting block of an experiment config.
    const ExperimentConfig cfg = load_experiment_config(o.config);
    if (cfg.environment.kind != EnvironmentKind::kFeatures) {
      throw ConfigError("fit-prior --config needs a features environment");
    }
    fit = cfg.environment.features.fit;
  }
  if (o.num_latent < 1) throw ConfigError("--L must be >= 1");
  fit.gmm.seed = derive_stream_id({o.seed, fit.gmm.seed});
  const FeatureTable table = read_feature_table(o.features);
  RngStream rng(o.seed, derive_stream_id({5}));
  const GaussianMixturePrior prior = fit_prior_from_features(table, o.num_latent, fit, rng);
  auto file = open_output(o.out);
  save_prior(file ? *file : out, prior);
  err << "fitted " << prior.num_components() << "-component prior in dimension " << prior.dim()
      << '\n';
}

struct BoundOptions {
  std::string config;
  std::string kind = "linear";
  std::vector<double> n, d, num_latent, sigma, kappa, lambda;
  std::vector<double> num_states, num_actions, horizon;
  bool full_constants = false;
  std::string out;
};

void merge_grid_from_config(BoundOptions& o) {
  if (o.config.empty()) return;
  std::ifstream in(o.config, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + o.config);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    if (doc.contains("kind")) o.kind = doc.at("kind").get<std::string>();
    if (doc.contains("full_constants")) o.full_constants = doc.at("full_constants").get<bool>();
    const auto& grid = doc.at("grid");
    auto take = [&](const char* key, std::vector<double>& target) {
      if (target.empty() && grid.contains(key)) target = grid.at(key).get<std::vector<double>>();
    };
    take("n", o.n);
    take("d", o.d);
    take("L", o.num_latent);
    take("sigma", o.sigma);
    take("kappa", o.kappa);
    take("lambda", o.lambda);
    take("num_states", o.num_states);
    take("num_actions", o.num_actions);
    take("horizon", o.horizon);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bound config: ") + e.what());
  }
}

void run_bound(BoundOptions o, std::ostream& out) {
  merge_grid_from_config(o);
  auto need = [](const std::vector<double>& v, const char* name) {
    if (v.empty()) throw ConfigError(std::string("bound: missing grid values for ") + name);
  };
  auto file = open_output(o.out);
  std::ostream& dst = file ? *file : out;
  if (o.kind == "linear") {
    if (o.kappa.empty()) o.kappa = {1.0};
    need(o.n, "--n");
    need(o.d, "--d");
    need(o.num_latent, "--L");
    need(o.sigma, "--sigma");
    need(o.lambda, "--lambda");
    dst << "n,d,L,sigma,kappa,lambda0_max,bound\n";
    for (double n : o.n)
      for (double d : o.d)
        for (double L : o.num_latent)
          for (double s : o.sigma)
            for (double k : o.kappa)
              for (double lam : o.lambda) {
                const double b = theorem1_bound({n, d, L, s, k, lam}, o.full_constants);
                dst << format_double(n) << ',' << format_double(d) << ',' << format_double(L)
                    << ',' << format_double(s) << ',' << format_double(k) << ','
                    << format_double(lam) << ',' << format_double(b) << '\n';
              }
  } else if (o.kind == "mdp") {
    need(o.n, "--n");
    need(o.num_states, "--states");
    need(o.num_actions, "--actions");
    need(o.horizon, "--horizon");
    need(o.num_latent, "--L");
    need(o.lambda, "--lambda");
    dst << "n,num_states,num_actions,horizon,L,lambda0_min,bound\n";
    for (double n : o.n)
      for (double x : o.num_states)
        for (double a : o.num_actions)
          for (double h : o.horizon)
            for (double L : o.num_latent)
              for (double lam : o.lambda) {
                const double b = theorem2_bound({n, x, a, h, L, lam});
                dst << format_double(n) << ',' << format_double(x) << ',' << format_double(a)
                    << ',' << format_double(h) << ',' << format_double(L) << ','
                    << format_double(lam) << ',' << format_double(b) << '\n';
              }
  } else {
    throw ConfigError("bound: --kind must be linear or mdp");
  }
}

struct MakeFeaturesOptions {
  std::size_t classes = 20;
  std::size_t dim = 20;
  std::size_t rows_per_class = 50;
  double noise = 0.3;
  std::uint64_t seed = 0;
  std::string out;
};

void run_make_features(const MakeFeaturesOptions& o, std::ostream& out) {
  RngStream rng(o.seed, derive_stream_id({4}));
  const FeatureTable table =
      synthesize_feature_table(o.classes, o.dim, o.rows_per_class, o.noise, rng);
  auto file = open_output(o.out);
  write_feature_table(file ? *file : out, table);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thompson sampling with mixture priors: simulations, prior fitting, bounds"};
  app.name("mixts");
  app.require_subcommand(1);

  RunOverrides linear_opts;
  auto* linear = app.add_subcommand("run-linear", "Run a linear-bandit experiment");
  add_run_options(*linear, linear_opts);

  RunOverrides mdp_opts;
  auto* mdp = app.add_subcommand("run-mdp", "Run a tabular MDP experiment");
  add_run_options(*mdp, mdp_opts);

  FitPriorOptions fit_opts;
  auto* fit = app.add_subcommand("fit-prior", "Fit a Gaussian mixture prior from a feature file");
  fit->add_option("--features", fit_opts.features, "Feature CSV (class,f0,...)")->required();
  fit->add_option("--L", fit_opts.num_latent, "Mixture components")->required();
  fit->add_option("--out", fit_opts.out, "Prior file to write ('-' for stdout)");
  fit->add_option("--config", fit_opts.config, "Take fit settings from an experiment config");
  fit->add_option("--datasets", fit_opts.num_datasets, "Offline datasets");
  fit->add_option("--dataset-size", fit_opts.dataset_size, "Rows per offline dataset");
  fit->add_option("--ridge", fit_opts.ridge, "Ridge for the per-dataset fits");
  fit->add_option("--sigma", fit_opts.sigma, "Reward noise sd stored in the prior");
  fit->add_option("--covariance", fit_opts.covariance, "GMM covariance: full or diagonal");
  fit->add_option("--seed", fit_opts.seed, "Seed");

  BoundOptions bound_opts;
  auto* bound = app.add_subcommand("bound", "Evaluate regret bounds over a parameter grid");
  bound->add_option("--config", bound_opts.config, "Grid file (JSON)");
  bound->add_option("--kind", bound_opts.kind, "linear or mdp");
  bound->add_option("--n", bound_opts.n, "Horizon values")->delimiter(',');
  bound->add_option("--d", bound_opts.d, "Dimension values")->delimiter(',');
  bound->add_option("--L", bound_opts.num_latent, "Latent-state counts")->delimiter(',');
  bound->add_option("--sigma", bound_opts.sigma, "Noise sd values")->delimiter(',');
  bound->add_option("--kappa", bound_opts.kappa, "Action norm bounds")->delimiter(',');
  bound->add_option("--lambda", bound_opts.lambda,
                    "lambda0_max (linear) or lambda0_min (mdp) values")
      ->delimiter(',');
  bound->add_option("--states", bound_opts.num_states, "State counts")->delimiter(',');
  bound->add_option("--actions", bound_opts.num_actions, "Action counts")->delimiter(',');
  bound->add_option("--horizon", bound_opts.horizon, "Episode lengths")->delimiter(',');
  bound->add_flag("--full-constants", bound_opts.full_constants,
                  "Include the lower-order additive terms (linear only)");
  bound->add_option("--out", bound_opts.out, "Output CSV ('-' for stdout)");

  MakeFeaturesOptions feat_opts;
  auto* feats = app.add_subcommand("make-features", "Write a synthetic labelled feature table");
  feats->add_option("--classes", feat_opts.classes, "Number of classes");
  feats->add_option("--dim", feat_opts.dim, "Feature dimension");
  feats->add_option("--rows-per-class", feat_opts.rows_per_class, "Rows per class");
  feats->add_option("--noise", feat_opts.noise, "Within-class noise sd");
  feats->add_option("--seed", feat_opts.seed, "Seed");
  feats->add_option("--out", feat_opts.out, "Output CSV ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto previous = set_warning_handler([&err](std::string_view msg) {
    err << "warning: " << msg << '\n';
  });
  int code = kExitOk;
  try {
    if (*linear) run_sim(linear_opts, ExperimentSetting::kLinear, out);
    if (*mdp) run_sim(mdp_opts, ExperimentSetting::kMdp, out);
    if (*fit) run_fit_prior(fit_opts, out, err);
    if (*bound) run_bound(bound_opts, out);
    if (*feats) run_make_features(feat_opts, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    code = kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    code = kExitConfig;
  }
  set_warning_handler(std::move(previous));
  return code;
}

}  // namespace mixts::cli
