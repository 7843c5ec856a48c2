#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pgbias/errors.hpp"
#include "pgbias/harness/config.hpp"
#include "pgbias/harness/experiments.hpp"
#include "pgbias/harness/output.hpp"
#include "pgbias/harness/training.hpp"

using namespace pgbias;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pgbias_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CommandResult {
  int status = 0;
  std::string err;
};

CommandResult run_cli(const std::string& args, const fs::path& dir) {
  const auto err_path = dir / "stderr.txt";
  const std::string cmd = std::string(PGBIAS_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                          err_path.string();
  const int raw = std::system(cmd.c_str());
  CommandResult out;
  out.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(err_path);
  std::stringstream ss;
  ss << in.rdbuf();
  out.err = ss.str();
  return out;
}

Dataset half_matching_dataset(std::size_t n) {
  Dataset d;
  d.n_trajectories = n;
  d.gamma = 0.9;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.state.x = {i % 2 == 0 ? 0.0 : 1.0, 0.0, 0.0};
    s.trajectory = i;
    d.samples.push_back(s);
  }
  return d;
}

}  // namespace

TEST(Config, RoundTripsThroughJson) {
  for (auto env : {EnvKind::Alias, EnvKind::Chain, EnvKind::Pendulum}) {
    auto c = ExperimentConfig::defaults(env);
    c.seeds = {3, 4};
    c.perturbation = PerturbationSpec{};
    c.correction.alpha = 0.5;
    const auto back = ExperimentConfig::from_json(c.to_json());
    EXPECT_EQ(back, c);
    EXPECT_EQ(config_hash(back), config_hash(c));
  }
}

TEST(Config, PendulumDefaults) {
  const auto c = ExperimentConfig::defaults(EnvKind::Pendulum);
  EXPECT_EQ(c.epochs, 100u);
  EXPECT_EQ(c.episodes_per_epoch, 10u);
  EXPECT_EQ(c.schedule, (LrSchedule{3e-4, 0.8, 30}));
  EXPECT_EQ(c.optimizer.algorithm, Algorithm::Sgd);
  EXPECT_EQ(c.correction.optimizer.algorithm, Algorithm::RmsProp);
  EXPECT_EQ(c.correction.regularizer, RegularizerKind::Kl);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ExperimentConfig::from_json({{"env", "chain"}, {"learning_rate", 0.1}}), Error);
  EXPECT_THROW(ExperimentConfig::from_json({{"env", "chain"}, {"gamma", 1.0}}), Error);
  EXPECT_THROW(ExperimentConfig::from_json({{"env", "moon"}}), Error);
  EXPECT_THROW(ExperimentConfig::from_json({{"env", "pendulum"}, {"gradient_mode", "exact"}}), Error);
  EXPECT_THROW(ExperimentConfig::from_json({{"seeds", "zero"}}), Error);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::array()), Error);
  const auto c = ExperimentConfig::from_json({{"env", "chain"}, {"schedule", {{"base_lr", 0.01}}}});
  EXPECT_EQ(c.schedule.base_lr, 0.01);
  EXPECT_EQ(c.schedule.decay_factor, ExperimentConfig::defaults(EnvKind::Chain).schedule.decay_factor);
}

TEST(Perturbation, MatchedDrawProbability) {
  const auto data = half_matching_dataset(1000);
  PerturbationSpec spec;
  Rng rng(1);
  std::size_t matched = 0, total = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto out = perturb_dataset(data, spec, rng);
    ASSERT_EQ(out.samples.size(), data.samples.size());
    for (const auto& s : out.samples) matched += spec.matches(s.state);
    total += out.samples.size();
  }
  EXPECT_NEAR(double(matched) / double(total), 5.0 / 6.0, 0.01 * 5.0 / 6.0);
}

TEST(Perturbation, WeightOneAndNoMatchResampleUniformly) {
  const auto data = half_matching_dataset(1000);
  for (const auto& spec : {PerturbationSpec{0, 0.01, {}, 1.0}, PerturbationSpec{0, -0.0, {}, 5.0}}) {
    Rng rng(2);
    std::size_t matched = 0, total = 0;
    for (int rep = 0; rep < 1000; ++rep) {
      for (const auto& s : perturb_dataset(data, spec, rng).samples) matched += s.state.x[0] == 0.0;
      total += data.samples.size();
    }
    EXPECT_NEAR(double(matched) / double(total), 0.5, 0.005);
  }
  EXPECT_THROW((PerturbationSpec{0, 0.01, {}, 0.5}.validate()), Error);
}

TEST(Perturbation, KeepsDatasetOrder) {
  const auto data = half_matching_dataset(200);
  Rng rng(3);
  const auto out = perturb_dataset(data, PerturbationSpec{}, rng);
  for (std::size_t i = 1; i < out.samples.size(); ++i) {
    EXPECT_LE(out.samples[i - 1].trajectory, out.samples[i].trajectory);
  }
}

TEST(Perturbation, TabularStatesById) {
  PerturbationSpec spec;
  spec.states = {1};
  EXPECT_TRUE(spec.matches(State{1, {}}));
  EXPECT_FALSE(spec.matches(State{0, {}}));
}

TEST(SlidingWindow, TrailingMean) {
  std::vector<BiasSpreadRecord> raw;
  for (std::size_t e = 0; e < 7; ++e) raw.push_back({e, double(e), 2.0 * e, e % 2 == 0 ? 0.5 : -0.5});
  const auto w = sliding_window(raw, 5);
  ASSERT_EQ(w.size(), 7u);
  EXPECT_DOUBLE_EQ(w[0].d1, 0.0);
  EXPECT_DOUBLE_EQ(w[1].d1, 0.5);
  EXPECT_DOUBLE_EQ(w[4].d1, 2.0);
  EXPECT_DOUBLE_EQ(w[6].d1, 4.0);
  EXPECT_DOUBLE_EQ(w[6].d2, 8.0);
  EXPECT_DOUBLE_EQ(w[6].d_pct, 0.1);
  EXPECT_THROW(sliding_window(raw, 0), Error);
}

TEST(Training, AliasExactFixedPoints) {
  auto c = ExperimentConfig::defaults(EnvKind::Alias);
  const auto variants = performance_variants(c);
  ASSERT_EQ(variants.size(), 4u);
  const auto unbiased = train_variant(c, variants[2], 0);
  const auto biased = train_variant(c, variants[0], 0);
  EXPECT_NEAR(unbiased.records.back().theta, 0.5, 0.02);
  EXPECT_NEAR(biased.records.back().theta, 9.0 / 19.0, 0.02);
}

TEST(Training, IdenticalVariantsAreBitIdentical) {
  auto c = ExperimentConfig::defaults(EnvKind::Chain);
  c.epochs = 5;
  const auto v = performance_variants(c)[0];
  const auto a = train_variant(c, v, 7);
  const auto b = train_variant(c, v, 7);
  EXPECT_EQ(metrics_csv(a), metrics_csv(b));
  EXPECT_NE(metrics_csv(a).find(kMetricsHeader), std::string::npos);
}

TEST(Training, VariantGridRespectsBiasFilter) {
  auto c = ExperimentConfig::defaults(EnvKind::Chain);
  c.bias = BiasFilter::BiasedOnly;
  const auto v = performance_variants(c);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].spec.state_weighting, StateWeighting::Undiscounted);
  EXPECT_EQ(v[1].spec.regularizer, RegularizerKind::Kl);
  EXPECT_EQ(v[1].optimizer.algorithm, Algorithm::RmsProp);
}

TEST(Offpolicy, PerturbedAliasShiftsBiasedFixedPoint) {
  auto c = ExperimentConfig::defaults(EnvKind::Alias);
  c.bias = BiasFilter::BiasedOnly;
  c.seeds = {0};
  PerturbationSpec p;
  p.states = {AliasMdp::kS2};
  p.weight = 5.0;
  c.perturbation = p;
  const auto result = run_offpolicy(c);
  const auto& baseline = result.runs.front();
  ASSERT_EQ(baseline.variant, "biased-baseline");
  // Stationary point of gamma (1 - theta) - 5 theta.
  const double expect = c.gamma / (c.gamma + 5.0);
  EXPECT_NEAR(baseline.records.back().theta, expect, 0.02);
  EXPECT_LT(baseline.records.back().theta, c.gamma / (1.0 + c.gamma));
}

TEST(BiasSpread, SelfTestZeroAndAliasPositive) {
  auto c = ExperimentConfig::defaults(EnvKind::Alias);
  c.gradient_mode = GradientMode::MonteCarlo;
  c.epochs = 20;
  c.episodes_per_epoch = 100;
  c.schedule = {1e-4, 1.0, 1};
  c.self_test = true;
  for (const auto& rec : bias_spread_seed(c, 0).raw) EXPECT_EQ(rec.d_pct, 0.0);
  c.self_test = false;
  c.init_theta = 0.5;
  for (const auto& rec : bias_spread_seed(c, 0).raw) EXPECT_GT(rec.d2, 0.0);
}

TEST(AliasToy, PredictedColumns) {
  AliasToyConfig cfg;
  cfg.epochs = 400;
  const auto rows = run_alias_toy({0.5, 0.9}, cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(rows[1].predicted_ratio, 0.997229916897, 1e-11);
  EXPECT_NEAR(rows[0].measured_biased, 1.0 / 3.0, 0.02);
  for (const auto& r : rows) EXPECT_NEAR(r.measured_ratio, r.predicted_ratio, 0.02);
  const auto csv = alias_toy_csv(rows);
  EXPECT_EQ(csv.rfind(kAliasToyHeader, 0), 0u);
}

TEST(Output, CsvRowsMatchHeaderWidth) {
  auto c = ExperimentConfig::defaults(EnvKind::Chain);
  c.epochs = 3;
  const auto run = train_variant(c, performance_variants(c)[0], 1);
  std::istringstream in(metrics_csv(run));
  std::string line;
  std::getline(in, line);
  const auto width = std::count(line.begin(), line.end(), ',');
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), width);
    ++rows;
  }
  EXPECT_EQ(rows, 3u);
}

TEST(Cli, BadConfigReportsJsonError) {
  const auto dir = temp_dir("cli");
  const auto cfg = dir / "bad.json";
  std::ofstream(cfg) << R"({"env": "chain", "gamma": 2.0})";
  const auto r = run_cli("validate-config --config " + cfg.string(), dir);
  EXPECT_EQ(r.status, 1);
  const auto doc = nlohmann::json::parse(r.err);
  ASSERT_TRUE(doc.contains("error"));
  EXPECT_EQ(doc["error"]["type"], "invalid_argument");
  EXPECT_FALSE(doc["error"]["message"].get<std::string>().empty());
}

TEST(Cli, MissingFileAndUsageErrors) {
  const auto dir = temp_dir("cli2");
  const auto missing = run_cli("validate-config --config " + (dir / "nope.json").string(), dir);
  EXPECT_EQ(missing.status, 1);
  EXPECT_EQ(nlohmann::json::parse(missing.err)["error"]["type"], "io");
  const auto usage = run_cli("run-performance --no-such-flag", dir);
  EXPECT_EQ(usage.status, 2);
  EXPECT_EQ(nlohmann::json::parse(usage.err)["error"]["type"], "usage");
}

TEST(Cli, ValidConfigPrintsCanonicalForm) {
  const auto dir = temp_dir("cli3");
  const auto cfg = dir / "ok.json";
  std::ofstream(cfg) << R"({"env": "alias", "epochs": 10})";
  const auto r = run_cli("validate-config --config " + cfg.string(), dir);
  EXPECT_EQ(r.status, 0);
  std::ifstream in(dir / "stdout.txt");
  const auto doc = nlohmann::json::parse(in);
  EXPECT_TRUE(doc["valid"].get<bool>());
  EXPECT_EQ(doc["config"]["epochs"], 10);
}
