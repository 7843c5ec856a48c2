#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgbias/mdp/tabular_mdp.hpp"
#include "pgbias/policy/policy_model.hpp"

namespace pgbias {

enum class Algorithm { Sgd, Momentum, RmsProp, Adam };

std::string_view to_string(Algorithm algorithm);
Algorithm algorithm_from_string(std::string_view name);

/// Defaults follow the common framework defaults (RMSProp smoothing 0.99,
/// Adam betas 0.9/0.999, delta 1e-8).
struct OptimizerConfig {
  Algorithm algorithm = Algorithm::Sgd;
  double momentum = 0.9;
  double rmsprop_smoothing = 0.99;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double delta = 1e-8;
  bool adam_bias_correction = true;

  void validate() const;
  nlohmann::json to_json() const;
  static OptimizerConfig from_json(const nlohmann::json& doc);

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// Optimizer accumulators. Everything here is ascent: parameters move along
/// the supplied gradient.
struct OptimState {
  OptimizerConfig config;
  double lr = 1e-3;
  std::vector<double> second_moment;  ///< G (RMSProp) or v (Adam); always >= 0
  std::vector<double> first_moment;   ///< momentum buffer / Adam m
  std::size_t step = 0;

  static OptimState fresh(const OptimizerConfig& config, std::size_t n_params, double lr);

  nlohmann::json to_json() const;
  static OptimState from_json(const nlohmann::json& doc);
};

/// One ascent step.
///   sgd:      theta += lr g
///   momentum: m = mu m + g; theta += lr m
///   rmsprop:  G = rho G + (1 - rho) g^2; theta += lr g / sqrt(G + delta)
///   adam:     bias-corrected m, v; theta += lr m_hat / (sqrt(v_hat) + delta)
void optimizer_step(OptimState& state, std::span<double> params, std::span<const double> gradient);

/// base_lr * d^floor(epoch / e).
struct LrSchedule {
  double base_lr = 1e-3;
  double decay_factor = 1.0;
  std::size_t decay_every = 1;

  double lr_at(std::size_t epoch) const;
  void validate() const;
  nlohmann::json to_json() const;
  static LrSchedule from_json(const nlohmann::json& doc);

  friend bool operator==(const LrSchedule&, const LrSchedule&) = default;
};

inline double lr_at(const LrSchedule& schedule, std::size_t epoch) { return schedule.lr_at(epoch); }

/// Fisher information E_s E_a [score score^T] and its diagonal.
struct FimMatrix {
  Table full;
  std::vector<double> diagonal;
};

/// Exact expectation over an enumerable (tabular) policy. `state_dist` is a
/// normalized distribution over the policy's states.
FimMatrix exact_fim(const PolicyModel& policy, std::span<const double> state_dist);

/// g_i / sqrt(F_ii + delta): the diagonal-Fisher preconditioner written in
/// the same form RMSProp divides by.
std::vector<double> fim_precondition(std::span<const double> gradient, std::span<const double> fim_diag,
                                     double delta);

}  // namespace pgbias
