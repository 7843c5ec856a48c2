#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgbias/diagnostics/score_model.hpp"
#include "pgbias/mdp/tabular_mdp.hpp"
#include "pgbias/policy/policy_model.hpp"
#include "pgbias/rng.hpp"

namespace pgbias {

struct LossSurfaceConfig {
  std::size_t resolution = 21;  ///< odd, so (0, 0) is a grid point
  bool regularized = false;
  double alpha = 0.0;
  std::size_t actions_per_state = 1;
  std::uint64_t seed = 0;
};

struct LossSurface {
  std::vector<double> axis;  ///< linspace(-1, 1, R) for both a and b
  Table grid;                ///< grid(i, j) = loss at a = axis[i], b = axis[j]
  std::vector<double> direction1;
  std::vector<double> direction2;
  double center_loss = 0.0;
};

/// Parameter groups used by filter normalization: one group per output unit
/// of each dense layer (its incoming weight row plus its bias), the log-std
/// vector as one group, one row of logits per state for tabular policies.
std::vector<std::vector<std::size_t>> filter_groups(const PolicyModel& policy);

/// Gaussian direction rescaled group-wise to the norms of the current
/// parameters.
std::vector<double> filter_normalized_direction(const PolicyModel& policy, Rng& rng);

/// L(theta) = -mean_s mean_{a ~ pi_theta} [ T(s, a) + alpha log pi_theta(a|s) ]
/// (the log term only when regularized). Actions come from a fresh stream
/// seeded with `seed`, so equal seeds give equal draws.
double surrogate_loss(const PolicyModel& policy, const ScoreModel& model, std::span<const State> states,
                      const LossSurfaceConfig& config);

LossSurface loss_surface(const PolicyModel& policy, const ScoreModel& model, std::span<const State> states,
                         const LossSurfaceConfig& config);

/// Same grid along caller-supplied directions.
LossSurface loss_surface_along(const PolicyModel& policy, const ScoreModel& model, std::span<const State> states,
                               std::span<const double> direction1, std::span<const double> direction2,
                               const LossSurfaceConfig& config);

}  // namespace pgbias
