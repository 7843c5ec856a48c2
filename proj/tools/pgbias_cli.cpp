// Command-line front end for the experiments and diagnostics.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pgbias/diagnostics/loss_surface.hpp"
#include "pgbias/diagnostics/pca.hpp"
#include "pgbias/diagnostics/plot.hpp"
#include "pgbias/diagnostics/score_model.hpp"
#include "pgbias/errors.hpp"
#include "pgbias/harness/config.hpp"
#include "pgbias/harness/experiments.hpp"
#include "pgbias/harness/output.hpp"
#include "pgbias/harness/training.hpp"

namespace fs = std::filesystem;
using namespace pgbias;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string env;
  std::string bias;
  std::string optimizer;
  std::string regularizer;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> lr;
  std::optional<double> gamma;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> workers;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "ExperimentConfig JSON file");
  cmd->add_option("--seed", o.seed, "run a single seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--env", o.env, "alias | chain | pendulum");
  cmd->add_option("--bias", o.bias, "on (biased variants only) | off (unbiased only) | both");
  cmd->add_option("--optimizer", o.optimizer, "baseline optimizer: sgd | momentum | rmsprop | adam");
  cmd->add_option("--regularizer", o.regularizer, "correction regularizer: none | kl | reverse-kl");
  cmd->add_option("--alpha", o.alpha, "KL coefficient of the correction");
  cmd->add_option("--beta", o.beta, "reverse-KL coefficient of the correction");
  cmd->add_option("--lr", o.lr, "base learning rate");
  cmd->add_option("--gamma", o.gamma, "discount factor");
  cmd->add_option("--epochs", o.epochs, "number of epochs");
  cmd->add_option("--workers", o.workers, "worker threads");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, "'" + path + "' is not valid JSON: " + e.what());
  }
}

ExperimentConfig resolve_config(const Overrides& o, bool offpolicy = false) {
  nlohmann::json doc = o.config_path.empty() ? nlohmann::json::object() : read_json(o.config_path);
  if (!o.env.empty()) doc["env"] = o.env;
  const bool has_correction = doc.contains("correction");
  ExperimentConfig c = ExperimentConfig::from_json(doc);
  if (offpolicy) {
    if (!c.perturbation) {
      PerturbationSpec p;
      if (c.env != EnvKind::Pendulum) p.states = {AliasMdp::kS2};
      c.perturbation = p;
    }
    if (!has_correction) c.correction.alpha = 0.5;
  }
  if (o.seed) c.seeds = {*o.seed};
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.bias.empty()) c.bias = bias_filter_from_string(o.bias);
  if (!o.optimizer.empty()) c.optimizer.algorithm = algorithm_from_string(o.optimizer);
  if (!o.regularizer.empty()) c.correction.regularizer = regularizer_from_string(o.regularizer);
  if (o.alpha) c.correction.alpha = *o.alpha;
  if (o.beta) c.correction.beta = *o.beta;
  if (o.lr) c.schedule.base_lr = *o.lr;
  if (o.gamma) c.gamma = *o.gamma;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.workers) c.workers = *o.workers;
  c.validate();
  return c;
}

void print_error(std::string_view type, const std::string& message) {
  nlohmann::json doc = {{"error", {{"type", type}, {"message", message}}}};
  std::cerr << doc.dump() << std::endl;
}

void report_runs(const std::vector<VariantRun>& runs) {
  for (const auto& r : runs) {
    std::cout << r.variant << " seed " << r.seed << ": ";
    if (r.records.empty()) {
      std::cout << "no epochs\n";
      continue;
    }
    std::cout << "final mean return " << r.records.back().mean_return;
    if (r.failed) std::cout << " (failed: " << r.error << ")";
    std::cout << "\n";
  }
}

/// Policy for the diag commands: a checkpoint if given, otherwise a fresh
/// unbiased-baseline training run under the config.
PolicyModel diag_policy(const ExperimentConfig& config, const std::string& checkpoint) {
  if (!checkpoint.empty()) {
    const auto doc = read_json(checkpoint);
    return PolicyModel::from_json(doc.contains("policy") ? doc["policy"] : doc);
  }
  VariantSpec v{"unbiased-baseline", config.spec, config.optimizer, 1.0};
  v.spec.state_weighting = StateWeighting::Discounted;
  auto run = train_variant(config, v, config.seeds.front());
  require(!run.failed, ErrorKind::Divergence, "training for the diagnostic failed: " + run.error);
  return *run.final_policy;
}

Dataset diag_dataset(const ExperimentConfig& config, const PolicyModel& policy, std::size_t episodes) {
  const Environment env(config);
  Rng rng(config.seeds.front(), 99);
  std::vector<Trajectory> batch;
  for (std::size_t i = 0; i < episodes; ++i) batch.push_back(env.sample(policy, rng));
  scale_rewards(batch, config.reward_scale);
  return make_dataset(batch, config.gamma);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-gradient bias experiments and diagnostics"};
  app.require_subcommand(1);

  Overrides perf, spread, offp, loss, pca;
  auto* cmd_perf = app.add_subcommand("run-performance", "biased/unbiased x baseline/experimental training");
  add_override_flags(cmd_perf, perf);
  auto* cmd_spread = app.add_subcommand("run-bias-spread", "four-fork bias-spread protocol");
  add_override_flags(cmd_spread, spread);
  auto* cmd_off = app.add_subcommand("run-offpolicy", "performance experiment on perturbed state distributions");
  add_override_flags(cmd_off, offp);

  auto* cmd_toy = app.add_subcommand("alias-toy", "alias MDP fixed points and performance decay");
  std::vector<double> gammas{0.3, 0.5, 0.7, 0.9};
  std::string toy_mode = "both";
  std::string toy_out = "runs/alias_toy";
  AliasToyConfig toy;
  cmd_toy->add_option("--gammas", gammas, "discount factors")->delimiter(',');
  cmd_toy->add_option("--mode", toy_mode, "exact | monte_carlo | both");
  cmd_toy->add_option("--epochs", toy.epochs, "epochs per run");
  cmd_toy->add_option("--episodes", toy.episodes_per_epoch, "episodes per epoch (monte_carlo)");
  cmd_toy->add_option("--seeds", toy.seeds, "seeds (monte_carlo)")->delimiter(',');
  cmd_toy->add_option("--workers", toy.workers, "worker threads");
  cmd_toy->add_option("--out", toy_out, "output directory");

  auto* cmd_diag = app.add_subcommand("diag", "diagnostics");
  cmd_diag->require_subcommand(1);
  auto* cmd_loss = cmd_diag->add_subcommand("loss-surface", "filter-normalized loss surface of a score model");
  add_override_flags(cmd_loss, loss);
  std::string loss_checkpoint;
  LossSurfaceConfig surface_cfg;
  std::size_t diag_episodes = 20;
  std::size_t score_epochs = 200;
  cmd_loss->add_option("--checkpoint", loss_checkpoint, "policy checkpoint JSON (otherwise trains one)");
  cmd_loss->add_option("--resolution", surface_cfg.resolution, "odd grid resolution");
  cmd_loss->add_option("--episodes", diag_episodes, "episodes sampled for the score model");
  cmd_loss->add_option("--score-epochs", score_epochs, "score model training epochs");
  cmd_loss->add_flag("--regularized", surface_cfg.regularized, "add alpha log pi to the loss");

  auto* cmd_pca = cmd_diag->add_subcommand("feature-pca", "2D PCA of hidden features vs actions");
  add_override_flags(cmd_pca, pca);
  std::string pca_checkpoint;
  int pca_layer = 2;
  std::size_t pca_episodes = 20;
  cmd_pca->add_option("--checkpoint", pca_checkpoint, "policy checkpoint JSON (otherwise trains one)");
  cmd_pca->add_option("--layer", pca_layer, "hidden layer (1 or 2)");
  cmd_pca->add_option("--episodes", pca_episodes, "episodes sampled for features");

  auto* cmd_validate = app.add_subcommand("validate-config", "check a config and print its canonical form");
  std::string validate_path;
  cmd_validate->add_option("--config", validate_path, "ExperimentConfig JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*cmd_perf) {
      const auto config = resolve_config(perf);
      const auto result = run_performance(config);
      write_performance_outputs("performance", config, result);
      report_runs(result.runs);
    } else if (*cmd_off) {
      const auto config = resolve_config(offp, true);
      const auto result = run_offpolicy(config);
      write_performance_outputs("offpolicy", config, result);
      report_runs(result.runs);
    } else if (*cmd_spread) {
      const auto config = resolve_config(spread);
      const auto runs = run_bias_spread(config);
      write_bias_spread_outputs(config, runs);
      for (const auto& r : runs) {
        double mean = 0.0;
        for (const auto& rec : r.raw) mean += rec.d_pct;
        if (!r.raw.empty()) mean /= static_cast<double>(r.raw.size());
        std::cout << "seed " << r.seed << ": mean d% " << mean << " over " << r.raw.size() << " epochs"
                  << (r.baseline.failed ? " (failed: " + r.baseline.error + ")" : "") << "\n";
      }
    } else if (*cmd_toy) {
      std::vector<GradientMode> modes;
      if (toy_mode == "both" || toy_mode == "exact") modes.push_back(GradientMode::Exact);
      if (toy_mode == "both" || toy_mode == "monte_carlo") modes.push_back(GradientMode::MonteCarlo);
      require(!modes.empty(), ErrorKind::InvalidArgument, "--mode must be exact, monte_carlo or both");
      std::vector<AliasToyRow> rows;
      for (auto m : modes) {
        toy.mode = m;
        const auto part = run_alias_toy(gammas, toy);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      nlohmann::json settings = {{"gammas", gammas},          {"mode", toy_mode},
                                 {"epochs", toy.epochs},      {"episodes_per_epoch", toy.episodes_per_epoch},
                                 {"seeds", toy.seeds},        {"schedule", toy.schedule.to_json()},
                                 {"init_theta", toy.init_theta}};
      write_alias_toy_outputs(toy_out, rows, settings);
      std::cout << alias_toy_csv(rows);
    } else if (*cmd_loss) {
      auto config = resolve_config(loss);
      const auto policy = diag_policy(config, loss_checkpoint);
      const auto data = diag_dataset(config, policy, diag_episodes);
      const auto sd = score_dataset(policy, data);
      ScoreFitConfig fit;
      fit.epochs = score_epochs;
      fit.seed = config.seeds.front();
      const auto model = fit_score_model(sd.inputs, sd.targets, fit);
      surface_cfg.alpha = config.correction.alpha;
      surface_cfg.seed = config.seeds.front();
      const auto surface = loss_surface(policy, model, sd.states, surface_cfg);
      const fs::path dir = config.output_dir;
      write_text(dir / "loss_surface.csv", loss_surface_csv(surface));
      write_text(dir / "plots" / "loss_surface.svg", svg_heatmap("loss surface", surface.axis, surface.grid));
      auto doc = manifest("loss-surface", config);
      doc["center_loss"] = surface.center_loss;
      doc["score_model_mse"] = model.final_mse;
      doc["regularized"] = surface_cfg.regularized;
      write_text(dir / "manifest.json", doc.dump(2) + "\n");
      std::cout << "center loss " << surface.center_loss << ", score model MSE " << model.final_mse << "\n";
    } else if (*cmd_pca) {
      auto config = resolve_config(pca);
      const auto policy = diag_policy(config, pca_checkpoint);
      require(policy.is_mlp(), ErrorKind::Unsupported, "feature-pca needs an MLP policy (pendulum)");
      const auto data = diag_dataset(config, policy, pca_episodes);
      Table features(data.samples.size(), PolicyModel::kHiddenWidth);
      std::vector<double> actions(data.samples.size());
      for (std::size_t r = 0; r < data.samples.size(); ++r) {
        const auto f = policy.features(data.samples[r].state, pca_layer);
        std::copy(f.begin(), f.end(), features.row(r).begin());
        const auto& a = data.samples[r].action;
        actions[r] = a.u.empty() ? static_cast<double>(a.id) : a.u[0];
      }
      const auto fit = pca_2d(features);
      const auto [rx, ry] = action_correlation(fit.projected, actions);
      const fs::path dir = config.output_dir;
      write_text(dir / "feature_pca.csv", projection_csv(fit.projected, actions));
      write_text(dir / "plots" / "feature_pca.svg", svg_scatter("hidden features (PCA)", fit.projected, actions));
      auto doc = manifest("feature-pca", config);
      doc["explained_variance"] = fit.explained;
      doc["correlation"] = {{"x", rx}, {"y", ry}};
      doc["layer"] = pca_layer;
      write_text(dir / "manifest.json", doc.dump(2) + "\n");
      std::cout << "r_x " << rx << ", r_y " << ry << "\n";
    } else if (*cmd_validate) {
      const auto config = load_config(validate_path);
      nlohmann::json doc = {{"valid", true}, {"config_hash", config_hash(config)}, {"config", config.to_json()}};
      std::cout << doc.dump(2) << "\n";
    }
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
