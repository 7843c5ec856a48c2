#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgbias/mdp/tabular_mdp.hpp"
#include "pgbias/mdp/trajectory.hpp"
#include "pgbias/policy/mlp.hpp"
#include "pgbias/rng.hpp"

namespace pgbias {

enum class PolicyKind { TabularSoftmax, TiedAlias, MlpSoftmax, MlpGaussian };

std::string_view to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view name);

struct SampledAction {
  Action action;
  double log_prob;
};

/// Differentiable policy pi_theta(a|s) over one flat parameter vector.
///
/// - TabularSoftmax: one logit per (state, action), row-major.
/// - TiedAlias: a single probability theta shared by every state; action 0
///   has probability theta, action 1 has 1 - theta.
/// - MlpSoftmax: input -> 16 -> 16 -> n_actions logits, ReLU hidden units.
/// - MlpGaussian: same body producing the action mean, followed by one
///   state-independent log-std per action dimension (clamped to [-5, 2] when
///   evaluated).
///
/// Scores (gradients of log pi) are computed analytically; the MLP kinds
/// back-propagate through the network.
class PolicyModel {
 public:
  static constexpr std::size_t kHiddenWidth = 16;
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;
  static constexpr double kTiedMin = 1e-6;
  static constexpr double kTiedMax = 1.0 - 1e-6;

  static PolicyModel tabular_softmax(std::size_t n_states, std::size_t n_actions);
  static PolicyModel tied_alias(double theta);
  static PolicyModel mlp_softmax(std::size_t obs_dim, std::size_t n_actions, Rng& rng);
  static PolicyModel mlp_gaussian(std::size_t obs_dim, std::size_t action_dim, Rng& rng, double init_log_std = 0.0);

  PolicyKind kind() const { return kind_; }
  bool is_discrete() const { return kind_ != PolicyKind::MlpGaussian; }
  bool is_tabular() const { return kind_ == PolicyKind::TabularSoftmax || kind_ == PolicyKind::TiedAlias; }
  bool is_mlp() const { return !is_tabular(); }
  /// Number of discrete actions, or the action dimension for the Gaussian head.
  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_states() const { return n_states_; }
  std::size_t obs_dim() const { return is_mlp() ? net_.input_dim() : 0; }
  const Mlp& network() const { return net_; }

  std::size_t num_params() const { return params_.size(); }
  std::span<const double> params() const { return params_; }
  void set_params(std::span<const double> params);
  /// Keeps the tied-alias probability inside [1e-6, 1 - 1e-6]; no-op otherwise.
  void project();

  double log_prob(const State& state, const Action& action) const;
  std::vector<double> grad_log_prob(const State& state, const Action& action) const;
  /// Adds scale * grad log pi(a|s) into `grad` and returns log pi(a|s).
  double accumulate_grad_log_prob(const State& state, const Action& action, double scale,
                                  std::span<double> grad) const;

  SampledAction sample_action(const State& state, Rng& rng) const;

  /// pi(.|s) for discrete kinds.
  std::vector<double> action_probs(const State& state) const;
  /// Gaussian head mean and (clamped) standard deviation.
  std::vector<double> gaussian_mean(const State& state) const;
  std::vector<double> gaussian_std() const;

  /// Post-ReLU activations after hidden layer 1 or 2.
  std::vector<double> features(const State& state, int layer) const;

  /// Probability table [state][action] for tabular kinds over `n_states`.
  Table table(std::size_t n_states) const;

  nlohmann::json to_json() const;
  static PolicyModel from_json(const nlohmann::json& doc);

 private:
  PolicyModel() = default;

  void check_state(const State& state) const;
  void check_action(const Action& action) const;
  double clamped_log_std(std::size_t i) const;

  PolicyKind kind_ = PolicyKind::TabularSoftmax;
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  Mlp net_;
  std::vector<double> params_;
};

}  // namespace pgbias
