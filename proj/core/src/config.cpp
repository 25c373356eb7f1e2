#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mixts/errors.hpp"
#include "mixts/harness.hpp"

namespace mixts {

namespace {

using nlohmann::json;

// Reads `key` into `target` when present; rejects unknown keys so typos in
// config files fail loudly.
class Reader {
 public:
  Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& target) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    try {
      target = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() || it->is_null() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename Enum>
Enum parse_enum(const std::string& text, std::initializer_list<std::pair<const char*, Enum>> table,
                const std::string& where) {
  for (const auto& [name, value] : table) {
    if (text == name) return value;
  }
  std::string allowed;
  for (const auto& entry : table) allowed += std::string(allowed.empty() ? "" : ", ") + entry.first;
  throw ConfigError(where + ": '" + text + "' is not one of " + allowed);
}

void read_gmm(const json& j, GMMConfig& gmm) {
  Reader r(j, "environment.prior.gmm");
  r.get("max_iters", gmm.max_iters);
  r.get("tol", gmm.tol);
  r.get("reg_scale", gmm.reg_scale);
  r.get("min_mass", gmm.min_mass);
  r.get("seed", gmm.seed);
  std::string cov;
  r.get("covariance", cov);
  if (!cov.empty()) {
    gmm.covariance = parse_enum<CovarianceType>(
        cov, {{"full", CovarianceType::kFull}, {"diagonal", CovarianceType::kDiagonal}},
        "environment.prior.gmm.covariance");
  }
  r.finish();
}

void read_environment(const json& j, EnvironmentSettings& env) {
  Reader r(j, "environment");
  std::string kind;
  r.get("kind", kind);
  if (kind.empty()) throw ConfigError("environment.kind is required");
  env.kind = parse_enum<EnvironmentKind>(kind,
                                         {{"synthetic", EnvironmentKind::kSynthetic},
                                          {"features", EnvironmentKind::kFeatures},
                                          {"riverswim", EnvironmentKind::kRiverSwim}},
                                         "environment.kind");
  switch (env.kind) {
    case EnvironmentKind::kSynthetic:
      r.get("d", env.synthetic.d);
      r.get("L", env.synthetic.num_latent);
      r.get("sigma0", env.synthetic.sigma0);
      r.get("sigma", env.synthetic.sigma);
      break;
    case EnvironmentKind::kRiverSwim:
      r.get("num_states", env.riverswim.num_states);
      r.get("horizon", env.riverswim.horizon);
      r.get("concentration", env.riverswim.concentration);
      break;
    case EnvironmentKind::kFeatures: {
      auto& fe = env.features;
      std::string path;
      r.get("features", path);
      fe.features = path;
      path.clear();
      r.get("prior_file", path);
      fe.prior_file = path;
      r.get("reward_hi", fe.options.reward_hi);
      r.get("reward_lo", fe.options.reward_lo);
      r.get("k_actions", fe.options.k_actions);
      if (const json* synth = r.child("synthetic_features")) {
        Reader s(*synth, "environment.synthetic_features");
        s.get("num_classes", fe.synthetic.num_classes);
        s.get("dim", fe.synthetic.dim);
        s.get("rows_per_class", fe.synthetic.rows_per_class);
        s.get("noise_sd", fe.synthetic.noise_sd);
        s.finish();
      }
      if (const json* prior = r.child("prior")) {
        Reader p(*prior, "environment.prior");
        p.get("L", fe.num_latent);
        p.get("num_datasets", fe.fit.num_datasets);
        p.get("dataset_size", fe.fit.dataset_size);
        p.get("ridge", fe.fit.ridge);
        p.get("noise_sd", fe.fit.noise_sd);
        if (const json* gmm = p.child("gmm")) read_gmm(*gmm, fe.fit.gmm);
        p.finish();
      }
      break;
    }
  }
  r.finish();
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  Reader r(doc, "config");
  std::string setting;
  r.get("setting", setting);
  if (setting.empty()) throw ConfigError("config.setting is required");
  cfg.setting = parse_enum<ExperimentSetting>(
      setting, {{"linear", ExperimentSetting::kLinear}, {"mdp", ExperimentSetting::kMdp}},
      "config.setting");
  const json* env = r.child("environment");
  if (!env) throw ConfigError("config.environment is required");
  read_environment(*env, cfg.environment);
  r.get("agents", cfg.agents);
  r.get("n", cfg.n);
  r.get("replications", cfg.replications);
  r.get("seed", cfg.seed);
  std::string output;
  r.get("output", output);
  cfg.output = output;
  r.get("diagnostics", cfg.diagnostics);
  r.get("workers", cfg.workers);
  if (const json* sweep = r.child("sweep")) {
    Reader s(*sweep, "config.sweep");
    std::string axis;
    s.get("axis", axis);
    cfg.sweep_axis = parse_enum<SweepAxis>(axis,
                                           {{"none", SweepAxis::kNone},
                                            {"sigma0", SweepAxis::kSigma0},
                                            {"L", SweepAxis::kNumLatent},
                                            {"concentration", SweepAxis::kConcentration}},
                                           "config.sweep.axis");
    s.get("values", cfg.sweep_values);
    s.finish();
  }
  if (const json* exp4 = r.child("exp4")) {
    Reader e(*exp4, "config.exp4");
    double value = 0.0;
    if (exp4->contains("learning_rate")) {
      e.get("learning_rate", value);
      cfg.exp4_learning_rate = value;
    }
    if (exp4->contains("exploration")) {
      e.get("exploration", value);
      cfg.exp4_exploration = value;
    }
    e.finish();
  }
  r.finish();
  validate(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("n must be >= 1");
  if (cfg.replications < 1) throw ConfigError("replications must be >= 1");
  if (cfg.agents.empty()) throw ConfigError("at least one agent is required");
  const bool mdp_env = cfg.environment.kind == EnvironmentKind::kRiverSwim;
  if (mdp_env != (cfg.setting == ExperimentSetting::kMdp)) {
    throw ConfigError("setting and environment kind disagree (riverswim requires setting mdp)");
  }
  static const std::set<std::string> linear_agents{"mixts", "ts", "units", "exp4", "corral",
                                                   "oracle"};
  static const std::set<std::string> mdp_agents{"mixts", "psrl", "oracle"};
  std::set<std::string> seen;
  for (const auto& a : cfg.agents) {
    const auto& allowed = mdp_env ? mdp_agents : linear_agents;
    if (!allowed.count(a)) throw ConfigError("agent '" + a + "' is not available in this setting");
    if (!seen.insert(a).second) throw ConfigError("agent '" + a + "' listed twice");
  }
  if (cfg.diagnostics && cfg.n < 2) throw ConfigError("diagnostics need n >= 2");

  const auto kind = cfg.environment.kind;
  switch (cfg.sweep_axis) {
    case SweepAxis::kNone:
      if (!cfg.sweep_values.empty()) throw ConfigError("sweep values given without a sweep axis");
      break;
    case SweepAxis::kSigma0:
      if (kind != EnvironmentKind::kSynthetic) throw ConfigError("sigma0 sweep needs the synthetic environment");
      break;
    case SweepAxis::kNumLatent:
      if (kind == EnvironmentKind::kRiverSwim) throw ConfigError("L sweep is not available for riverswim");
      if (kind == EnvironmentKind::kFeatures && !cfg.environment.features.prior_file.empty()) {
        throw ConfigError("L sweep cannot be combined with a prior file");
      }
      break;
    case SweepAxis::kConcentration:
      if (kind != EnvironmentKind::kRiverSwim) throw ConfigError("concentration sweep needs riverswim");
      break;
  }
  if (cfg.sweep_axis != SweepAxis::kNone) {
    if (cfg.sweep_values.empty()) throw ConfigError("sweep axis given without values");
    for (double v : cfg.sweep_values) {
      if (!std::isfinite(v)) throw ConfigError("sweep values must be finite");
      if (cfg.sweep_axis == SweepAxis::kSigma0 ? v < 0.0 : v <= 0.0) {
        throw ConfigError("sweep values must be positive");
      }
    }
  }

  const auto& env = cfg.environment;
  if (kind == EnvironmentKind::kSynthetic) {
    if (env.synthetic.num_latent > env.synthetic.d) throw ConfigError("synthetic env: L > d");
    if (!(env.synthetic.sigma > 0.0)) throw ConfigError("synthetic env: sigma must be > 0");
    if (!(env.synthetic.sigma0 >= 0.0)) throw ConfigError("synthetic env: sigma0 must be >= 0");
  }
  if (kind == EnvironmentKind::kFeatures) {
    const auto& fe = env.features;
    if (fe.options.k_actions < 1) throw ConfigError("features: k_actions must be >= 1");
    if (fe.num_latent < 1) throw ConfigError("features: prior L must be >= 1");
    if (!(fe.fit.noise_sd > 0.0)) throw ConfigError("features: prior noise_sd must be > 0");
    if (fe.fit.num_datasets < 1 || fe.fit.dataset_size < 1) {
      throw ConfigError("features: num_datasets and dataset_size must be >= 1");
    }
    if (!(fe.fit.ridge >= 0.0)) throw ConfigError("features: ridge must be >= 0");
  }
  if (kind == EnvironmentKind::kRiverSwim) {
    if (env.riverswim.num_states < 3) throw ConfigError("riverswim: num_states must be >= 3");
    if (env.riverswim.horizon < 1) throw ConfigError("riverswim: horizon must be >= 1");
  }
  if (cfg.exp4_exploration && !(*cfg.exp4_exploration > 0.0 && *cfg.exp4_exploration < 1.0)) {
    throw ConfigError("exp4.exploration must lie in (0, 1)");
  }
  if (cfg.exp4_learning_rate && !(*cfg.exp4_learning_rate > 0.0)) {
    throw ConfigError("exp4.learning_rate must be > 0");
  }
}

}  // namespace mixts
