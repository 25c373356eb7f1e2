#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "mixts/errors.hpp"
#include "mixts/harness.hpp"
#include "oracles.hpp"

namespace {

using namespace mixts;

ExperimentConfig small_linear(std::vector<std::string> agents) {
  ExperimentConfig cfg;
  cfg.environment.synthetic = {5, 3, 0.1, 0.1};
  cfg.agents = std::move(agents);
  cfg.n = 40;
  cfg.replications = 4;
  cfg.seed = 17;
  cfg.workers = 1;
  return cfg;
}

ExperimentConfig small_river(std::vector<std::string> agents) {
  ExperimentConfig cfg;
  cfg.setting = ExperimentSetting::kMdp;
  cfg.environment.kind = EnvironmentKind::kRiverSwim;
  cfg.environment.riverswim = {5, 6, 10.0};
  cfg.agents = std::move(agents);
  cfg.n = 15;
  cfg.replications = 3;
  cfg.seed = 5;
  cfg.workers = 1;
  return cfg;
}

std::string csv(const ExperimentConfig& cfg) {
  std::ostringstream out;
  run_experiment_to_csv(cfg, out);
  return out.str();
}

void check_regret_shape(const std::vector<RegretRecord>& records) {
  std::map<std::pair<std::size_t, std::string>, double> running;
  for (const auto& r : records) {
    EXPECT_GE(r.inst_regret, -1e-12);
    auto& acc = running[{r.rep, r.agent}];
    acc += r.inst_regret;
    EXPECT_NEAR(r.cum_regret, acc, 1e-9);
  }
}

TEST(Harness, OracleHasNoRegret) {
  for (const auto& cfg : {small_linear({"oracle"}), small_river({"oracle"})}) {
    const auto records = run_experiment(cfg);
    ASSERT_EQ(records.size(), cfg.n * cfg.replications);
    for (const auto& r : records) EXPECT_NEAR(r.cum_regret, 0.0, 1e-12);
  }
}

TEST(Harness, CumulativeRegretIsPrefixSum) {
  check_regret_shape(run_experiment(small_linear({"mixts", "ts", "units", "exp4", "corral"})));
  check_regret_shape(run_experiment(small_river({"mixts", "psrl"})));
}

TEST(Harness, SyntheticRegretTakesTwoValues) {
  // Indicator actions and a narrow prior: each pull either hits the best
  // arm or loses roughly 0.8.
  auto cfg = small_linear({"mixts"});
  cfg.environment.synthetic.sigma0 = 1e-4;
  for (const auto& r : run_experiment(cfg)) {
    EXPECT_TRUE(std::abs(r.inst_regret) < 1e-2 || std::abs(r.inst_regret - 0.8) < 1e-2) << r.inst_regret;
  }
}

TEST(Harness, WorkerCountDoesNotChangeOutput) {
  auto cfg = small_linear({"mixts", "exp4"});
  cfg.diagnostics = true;
  const std::string one = csv(cfg);
  cfg.workers = 3;
  EXPECT_EQ(one, csv(cfg));
  auto river = small_river({"mixts", "psrl"});
  const std::string r1 = csv(river);
  river.workers = 2;
  EXPECT_EQ(r1, csv(river));
}

TEST(Harness, SeedControlsOutput) {
  auto cfg = small_linear({"mixts"});
  const std::string a = csv(cfg);
  EXPECT_EQ(a, csv(cfg));
  cfg.seed = 18;
  EXPECT_NE(a, csv(cfg));
}

TEST(Harness, AgentStreamsAreIndependentOfTheLineup) {
  const auto alone = run_experiment(small_linear({"mixts"}));
  const auto together = run_experiment(small_linear({"ts", "mixts"}));
  std::vector<double> a, b;
  for (const auto& r : alone) a.push_back(r.cum_regret);
  for (const auto& r : together)
    if (r.agent == "mixts") b.push_back(r.cum_regret);
  EXPECT_EQ(a, b);
}

TEST(Harness, DiagnosticsColumnsAndCoverage) {
  auto cfg = small_linear({"mixts", "ts"});
  cfg.diagnostics = true;
  EXPECT_EQ(diagnostic_columns(cfg), 3u);
  const std::string text = csv(cfg);
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "sweep,rep,agent,t,inst_regret,cum_regret,G_0,G_1,G_2,in_C");
  for (const auto& r : run_experiment(cfg)) {
    if (r.agent == "mixts") {
      EXPECT_EQ(r.over_estimation.size(), 3u);
      EXPECT_TRUE(r.true_latent_in_set.has_value());
    } else {
      EXPECT_TRUE(r.over_estimation.empty());
      EXPECT_FALSE(r.true_latent_in_set.has_value());
    }
  }
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9);
}

TEST(Harness, SweepValuesAppearInRecords) {
  auto cfg = small_linear({"mixts"});
  cfg.sweep_axis = SweepAxis::kNumLatent;
  cfg.sweep_values = {1, 2};
  cfg.replications = 1;
  const auto records = run_experiment(cfg);
  ASSERT_EQ(records.size(), 2 * cfg.n);
  EXPECT_EQ(records.front().sweep, 1.0);
  EXPECT_EQ(records.back().sweep, 2.0);
  EXPECT_EQ(effective_sweep_values(cfg), (std::vector<double>{1, 2}));
  cfg.sweep_axis = SweepAxis::kNone;
  cfg.sweep_values.clear();
  EXPECT_EQ(effective_sweep_values(cfg).size(), 1u);
}

TEST(Harness, ObserverSeesEveryRound) {
  auto cfg = small_linear({"mixts", "exp4"});
  cfg.workers = 2;
  std::mutex mu;
  std::size_t with_weights = 0, without = 0;
  RunOptions opts;
  opts.observer = [&](const RoundEvent& e) {
    std::lock_guard lock(mu);
    (e.latent_weights ? with_weights : without) += 1;
  };
  run_experiment(cfg, opts);
  EXPECT_EQ(with_weights, cfg.n * cfg.replications);
  EXPECT_EQ(without, cfg.n * cfg.replications);
}

TEST(Aggregate, TwoReplications) {
  std::vector<RegretRecord> rs(2);
  rs[0].agent = rs[1].agent = "a";
  rs[0].t = rs[1].t = 1;
  rs[1].rep = 1;
  rs[0].cum_regret = 1.0;
  rs[1].cum_regret = 3.0;
  const auto rows = aggregate(rs);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].mean, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].stderr_, 1.0);
  EXPECT_FALSE(rows[0].single_replication);
  rs.pop_back();
  const auto single = aggregate(rs);
  EXPECT_EQ(single[0].stderr_, 0.0);
  EXPECT_TRUE(single[0].single_replication);
}

TEST(Aggregate, MatchesQuadPrecision) {
  using oracle::Quad;
  RngStream rng(1, 1);
  std::vector<RegretRecord> rs;
  std::vector<double> values;
  for (std::size_t rep = 0; rep < 200; ++rep) {
    RegretRecord r;
    r.agent = "x";
    r.t = 1;
    r.rep = rep;
    r.cum_regret = 1e6 + rng.normal(0.0, 3.0);
    values.push_back(r.cum_regret);
    rs.push_back(r);
  }
  Quad mean = 0;
  for (double v : values) mean += v;
  mean /= 200;
  Quad ss = 0;
  for (double v : values) ss += (Quad(v) - mean) * (Quad(v) - mean);
  const Quad se = boost::multiprecision::sqrt(ss / 199) / boost::multiprecision::sqrt(Quad(200));
  const auto rows = aggregate(rs);
  EXPECT_NEAR(rows[0].mean, static_cast<double>(mean), 1e-9);
  EXPECT_NEAR(rows[0].stderr_, static_cast<double>(se), 1e-9);
}

TEST(Aggregate, OrderedByFirstAppearance) {
  std::vector<RegretRecord> rs;
  for (const char* agent : {"z", "a"}) {
    for (std::size_t t = 1; t <= 2; ++t) {
      RegretRecord r;
      r.agent = agent;
      r.t = t;
      rs.push_back(r);
    }
  }
  const auto rows = aggregate(rs);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].agent, "z");
  EXPECT_EQ(rows[2].agent, "a");
  EXPECT_EQ(rows[1].t, 2u);
}

TEST(Config, ParsesFullDocument) {
  const auto cfg = parse_experiment_config(R"({
    "setting": "linear",
    "environment": {"kind": "synthetic", "d": 6, "L": 4, "sigma0": 0.2, "sigma": 0.3},
    "agents": ["mixts", "ts"], "n": 50, "replications": 7, "seed": 3,
    "sweep": {"axis": "sigma0", "values": [0.1, 0.2]},
    "diagnostics": true, "workers": 2,
    "exp4": {"learning_rate": 0.1}
  })");
  EXPECT_EQ(cfg.environment.synthetic.d, 6u);
  EXPECT_EQ(cfg.environment.synthetic.num_latent, 4u);
  EXPECT_EQ(cfg.sweep_axis, SweepAxis::kSigma0);
  EXPECT_EQ(cfg.replications, 7u);
  EXPECT_EQ(cfg.exp4_learning_rate, 0.1);
  EXPECT_FALSE(cfg.exp4_exploration.has_value());
}

TEST(Config, RejectsInconsistentDocuments) {
  for (const char* text : {
           "{",
           R"({"setting": "linear", "bogus": 1})",
           R"({"setting": "linear", "environment": {"kind": "synthetic", "d": 2, "L": 3}})",
           R"({"setting": "linear", "environment": {"kind": "riverswim"}})",
           R"({"setting": "mdp", "environment": {"kind": "riverswim"}, "agents": ["ts"]})",
           R"({"setting": "linear", "agents": ["mixts", "mixts"]})",
           R"({"setting": "linear", "sweep": {"axis": "none", "values": [1]}})",
           R"({"setting": "linear", "sweep": {"axis": "concentration", "values": [1]}})",
           R"({"setting": "linear", "n": "ten"})",
           R"({"setting": "linear", "n": 0})",
       }) {
    EXPECT_THROW(parse_experiment_config(text), ConfigError) << text;
  }
}

TEST(StreamIds, DistinctPerPurpose) {
  EXPECT_NE(instance_stream_id(0, 0), round_stream_id(0, 0));
  EXPECT_NE(instance_stream_id(0, 1), instance_stream_id(1, 0));
  EXPECT_NE(agent_stream_id(0, 0, "mixts"), agent_stream_id(0, 0, "ts"));
}

}  // namespace
