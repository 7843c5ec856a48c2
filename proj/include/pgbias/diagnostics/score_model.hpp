#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgbias/estimator/estimator.hpp"
#include "pgbias/mdp/tabular_mdp.hpp"
#include "pgbias/policy/mlp.hpp"
#include "pgbias/policy/policy_model.hpp"

namespace pgbias {

/// Regression network (2 x 16 ReLU body) from a (state, action) encoding to
/// a predicted return. Inputs and targets are standardized with the
/// training-set statistics.
struct ScoreModel {
  Mlp network;
  std::vector<double> params;
  std::vector<double> input_mean;
  std::vector<double> input_std;
  double target_mean = 0.0;
  double target_std = 1.0;
  double initial_mse = 0.0;
  double final_mse = 0.0;  ///< in target units

  double predict(std::span<const double> input) const;

  nlohmann::json to_json() const;
  static ScoreModel from_json(const nlohmann::json& doc);
};

struct ScoreFitConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

/// Adam on the mean squared error. Throws Divergence when the epoch loss
/// exceeds ten times the initial loss.
ScoreModel fit_score_model(const Table& inputs, std::span<const double> targets, const ScoreFitConfig& config);

/// (state, action) encoding shared by training data and loss surfaces:
/// observation (or one-hot state id) followed by the action vector (or
/// one-hot action id).
std::vector<double> score_input(const PolicyModel& policy, const State& state, const Action& action);

/// Rows of (state, action) encodings with their Monte Carlo returns.
struct ScoreDataset {
  Table inputs;
  std::vector<double> targets;
  std::vector<State> states;
};
ScoreDataset score_dataset(const PolicyModel& policy, const Dataset& data);

}  // namespace pgbias
