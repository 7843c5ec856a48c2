#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgbias/mdp/tabular_mdp.hpp"
#include "pgbias/mdp/trajectory.hpp"
#include "pgbias/policy/policy_model.hpp"

namespace pgbias {

enum class RegularizerKind { None, Kl, ReverseKl };

std::string_view to_string(RegularizerKind kind);
RegularizerKind regularizer_from_string(std::string_view name);
std::string_view to_string(StateWeighting weighting);
StateWeighting state_weighting_from_string(std::string_view name);

/// Which surrogate is optimized. With the ratio on and no regularizer,
/// discounted weighting is the unbiased iterative objective and undiscounted
/// weighting is the common biased one.
struct SurrogateSpec {
  StateWeighting state_weighting = StateWeighting::Discounted;
  RegularizerKind regularizer = RegularizerKind::None;
  double alpha = 0.0;  ///< KL(pi_t || pi) coefficient
  double beta = 0.0;   ///< KL(pi || pi_t) coefficient
  bool use_importance_ratio = true;

  void validate() const;
  nlohmann::json to_json() const;
  static SurrogateSpec from_json(const nlohmann::json& doc);

  friend bool operator==(const SurrogateSpec&, const SurrogateSpec&) = default;
};

struct GradEstimate {
  std::vector<double> gradient;
  /// Per-coordinate standard error of the mean over trajectories.
  std::vector<double> std_error;
  std::size_t n_trajectories = 0;
  double objective_value = 0.0;
  std::size_t clamped_ratios = 0;

  nlohmann::json to_json() const;
};

/// Discounted reward-to-go q_k = sum_{j>=k} gamma^{j-k} r_j, one backward pass.
std::vector<double> mc_returns(const Trajectory& trajectory, double gamma);

/// One flattened (s, a) entry of a batch together with everything the
/// surrogate needs.
struct Sample {
  State state;
  Action action;
  double q_hat = 0.0;
  double behavior_log_prob = 0.0;
  double discount = 1.0;  ///< gamma^k
  std::size_t timestep = 0;
  std::size_t trajectory = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t n_trajectories = 0;
  double gamma = 0.0;
};

Dataset make_dataset(std::span<const Trajectory> batch, double gamma);

inline constexpr double kLogRatioClamp = 20.0;

/// Full-batch surrogate gradient at `policy`, averaged over trajectories:
///   (1/N) sum_samples w_k grad[ ratio q_k + reg_k ]
/// with w_k = gamma^k (discounted) or 1, ratio = pi / pi_t from the recorded
/// behavior log-probs, reg_k = alpha log pi (KL) or
/// beta ratio (log pi_t - log pi) (reverse KL). `behavior` is pi_t; its
/// parameter space must match `policy`.
GradEstimate estimate_gradient(const Dataset& data, const PolicyModel& policy, const PolicyModel& behavior,
                               const SurrogateSpec& spec);
GradEstimate estimate_gradient(std::span<const Trajectory> batch, const PolicyModel& policy,
                               const PolicyModel& behavior, const SurrogateSpec& spec, double gamma);

/// estimate_gradient without the behavior-policy consistency check.
GradEstimate surrogate_gradient(const Dataset& data, const PolicyModel& policy, const SurrogateSpec& spec);

/// Same per-sample terms averaged over the chosen samples (minibatch steps).
/// Adds the number of clamped ratios to `clamped` when given.
std::vector<double> minibatch_gradient(const Dataset& data, std::span<const std::size_t> indices,
                                       const PolicyModel& policy, const SurrogateSpec& spec,
                                       std::size_t* clamped = nullptr);

/// Ground-truth gradient sum_s d(s) sum_a grad pi(a|s) q_pi(s, a) for tabular
/// policies. `state_scale`, when non-empty, multiplies d(s) per state (used
/// to model a perturbed state distribution).
std::vector<double> exact_pg(const TabularMdp& mdp, const PolicyModel& policy, StateWeighting mode,
                             std::span<const double> state_scale = {});

using Objective = std::function<double(std::span<const double>)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
std::vector<double> finite_diff_grad(const Objective& objective, std::span<const double> params, double h);

}  // namespace pgbias
