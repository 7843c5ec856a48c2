#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgbias/diagnostics/bias_spread.hpp"
#include "pgbias/estimator/estimator.hpp"
#include "pgbias/mdp/trajectory.hpp"
#include "pgbias/optim/optim.hpp"
#include "pgbias/optim/trainer.hpp"

namespace pgbias {

enum class EnvKind { Alias, Chain, Pendulum };
std::string_view to_string(EnvKind kind);
EnvKind env_kind_from_string(std::string_view name);

enum class GradientMode { Exact, MonteCarlo };
std::string_view to_string(GradientMode mode);
GradientMode gradient_mode_from_string(std::string_view name);

/// Which of the biased / unbiased variants an experiment trains.
enum class BiasFilter { Both, BiasedOnly, UnbiasedOnly };
std::string_view to_string(BiasFilter filter);
BiasFilter bias_filter_from_string(std::string_view name);

/// Up-weights matching states when a dataset is resampled. A state matches
/// when |x[coordinate]| < threshold (continuous states) or its id is listed
/// in `states` (tabular states).
struct PerturbationSpec {
  std::size_t coordinate = 0;
  double threshold = 0.01;
  std::vector<std::size_t> states;
  double weight = 5.0;

  bool matches(const State& state) const;
  void validate() const;
  nlohmann::json to_json() const;
  static PerturbationSpec from_json(const nlohmann::json& doc);

  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

struct ExperimentConfig {
  EnvKind env = EnvKind::Pendulum;
  double gamma = 0.99;
  std::size_t epochs = 100;
  std::size_t episodes_per_epoch = 10;
  std::size_t truncation = 200;
  /// Multiplies every sampled reward before returns are formed (reported
  /// returns stay unscaled).
  double reward_scale = 1.0;
  std::size_t chain_length = 5;
  /// Half-width of the pendulum's initial angle box (pi = full swing-up).
  double pendulum_init_angle = 3.141592653589793;
  LrSchedule schedule{3e-4, 0.8, 30};
  OptimizerConfig optimizer;
  SurrogateSpec spec;
  Correction correction;
  InnerLoop inner_loop;
  GradientMode gradient_mode = GradientMode::MonteCarlo;
  std::vector<std::uint64_t> seeds{0};
  std::optional<PerturbationSpec> perturbation;
  std::size_t probe_size = 10000;
  std::string output_dir = "runs";
  std::size_t workers = 1;
  BiasFilter bias = BiasFilter::Both;
  Fork continue_with = Fork::Unbiased;
  bool self_test = false;
  /// Starting probability for the tied alias policy.
  double init_theta = 0.1;
  double init_log_std = 0.0;

  /// Defaults per environment (pendulum follows the Inverted Pendulum row
  /// of the reference hyperparameters).
  static ExperimentConfig defaults(EnvKind env);

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys take the defaults of the document's `env`.
  static ExperimentConfig from_json(const nlohmann::json& doc);

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig load_config(const std::string& path);

/// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace pgbias
