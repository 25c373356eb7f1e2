#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mixts/environments.hpp"
#include "mixts/prior_fitting.hpp"

namespace mixts {

enum class ExperimentSetting { kLinear, kMdp };
enum class EnvironmentKind { kSynthetic, kFeatures, kRiverSwim };
enum class SweepAxis { kNone, kSigma0, kNumLatent, kConcentration };

struct SyntheticEnvSettings {
  std::size_t d = 10;
  std::size_t num_latent = 10;
  double sigma0 = 0.1;
  double sigma = 0.1;
};

struct SyntheticFeatureSettings {
  std::size_t num_classes = 20;
  std::size_t dim = 20;
  std::size_t rows_per_class = 50;
  double noise_sd = 0.3;
};

struct FeatureEnvSettings {
  // Empty: synthesize a table from `synthetic` with a seed derived from the
  // experiment seed.
  std::filesystem::path features;
  SyntheticFeatureSettings synthetic;
  FeatureEnvOptions options;
  std::size_t num_latent = 20;  // GMM components of the MixTS prior
  PriorFitConfig fit;
  // When set, MixTS, Exp4 and CorralExp4 use this prior instead of a fit.
  std::filesystem::path prior_file;
};

struct RiverSwimSettings {
  std::size_t num_states = 10;
  std::size_t horizon = 20;
  double concentration = 10.0;
};

struct EnvironmentSettings {
  EnvironmentKind kind = EnvironmentKind::kSynthetic;
  SyntheticEnvSettings synthetic;
  FeatureEnvSettings features;
  RiverSwimSettings riverswim;
};

// Linear agents: mixts, ts, units, exp4, corral, oracle.
// MDP agents: mixts, psrl, oracle.
struct ExperimentConfig {
  ExperimentSetting setting = ExperimentSetting::kLinear;
  EnvironmentSettings environment;
  std::vector<std::string> agents{"mixts"};
  std::size_t n = 1000;  // rounds (linear) or episodes (mdp)
  std::size_t replications = 1;
  std::uint64_t seed = 0;
  SweepAxis sweep_axis = SweepAxis::kNone;
  std::vector<double> sweep_values;
  std::filesystem::path output;
  bool diagnostics = false;
  std::size_t workers = 0;  // 0: hardware concurrency
  std::optional<double> exp4_learning_rate;
  std::optional<double> exp4_exploration;
};

// Throws ConfigError describing the first inconsistency found.
void validate(const ExperimentConfig& cfg);

ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Sweep values actually run: the configured grid, or {0} when there is no
// sweep axis.
std::vector<double> effective_sweep_values(const ExperimentConfig& cfg);

struct RegretRecord {
  double sweep = 0.0;
  std::size_t rep = 0;
  std::string agent;
  std::size_t t = 0;  // 1-based round or episode
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  std::vector<double> over_estimation;  // G per latent state; empty when not tracked
  std::optional<bool> true_latent_in_set;
};

struct ReplicationResult {
  std::size_t sweep_index = 0;
  double sweep_value = 0.0;
  std::size_t rep = 0;
  std::size_t true_latent = 0;
  std::vector<RegretRecord> records;  // agent-major, then t
};

struct RoundEvent {
  std::size_t sweep_index;
  double sweep_value;
  std::size_t rep;
  std::string_view agent;
  std::size_t t;
  std::size_t true_latent;
  // Latent posterior after the round's update; null for agents without one.
  const MixtureWeights* latent_weights;
};

struct RunOptions {
  // Called from worker threads after every round; must be thread safe.
  std::function<void(const RoundEvent&)> observer;
};

using ReplicationSink = std::function<void(const ReplicationResult&)>;

// Runs every (sweep value, replication) pair and hands results to `sink`
// on the calling thread in (sweep, replication) order. Output depends only
// on the configuration, not on the worker count.
void run_experiment(const ExperimentConfig& cfg, const ReplicationSink& sink,
                    const RunOptions& options = {});

std::vector<RegretRecord> run_experiment(const ExperimentConfig& cfg,
                                         const RunOptions& options = {});

// Number of G columns the CSV carries (0 without diagnostics).
std::size_t diagnostic_columns(const ExperimentConfig& cfg);

void write_csv_header(std::ostream& out, std::size_t diagnostic_columns);
void write_csv_records(std::ostream& out, const std::vector<RegretRecord>& records,
                       std::size_t diagnostic_columns);

// Runs the experiment and streams the CSV to `out`.
void run_experiment_to_csv(const ExperimentConfig& cfg, std::ostream& out,
                           const RunOptions& options = {});

struct AggregateRow {
  double sweep;
  std::string agent;
  std::size_t t;
  double mean;
  double stderr_;
  std::size_t replications;
  // Set when a single replication contributed; stderr_ is then 0 by convention.
  bool single_replication;
};

// Mean and standard error (sample sd / sqrt(reps)) of cumulative regret per
// (sweep, agent, t), ordered by first appearance of sweep and agent.
class RegretAggregator {
 public:
  void add(const RegretRecord& record);
  void add(const ReplicationResult& result);
  std::vector<AggregateRow> rows() const;

 private:
  struct Moments {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
  };
  struct Series {
    double sweep;
    std::string agent;
    std::vector<Moments> by_t;
  };
  std::vector<Series> series_;
};

std::vector<AggregateRow> aggregate(const std::vector<RegretRecord>& records);

// Seeds in use by the harness. Agents get a stream keyed on their name so
// a given agent behaves the same whichever other agents share the run.
std::uint64_t instance_stream_id(std::size_t sweep_index, std::size_t rep);
std::uint64_t round_stream_id(std::size_t sweep_index, std::size_t rep);
std::uint64_t agent_stream_id(std::size_t sweep_index, std::size_t rep, std::string_view agent);

}  // namespace mixts
