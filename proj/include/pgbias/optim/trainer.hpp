#pragma once

#include <cstddef>

#include <nlohmann/json.hpp>

#include "pgbias/estimator/estimator.hpp"
#include "pgbias/optim/optim.hpp"
#include "pgbias/policy/policy_model.hpp"
#include "pgbias/rng.hpp"

namespace pgbias {

/// Minibatch schedule inside one epoch. `steps == 0` means one step per
/// sample in the dataset (one step in full-batch mode). Each step uses
/// lr_epoch * lr_scale / steps. Full-batch steps use the per-trajectory mean
/// over the whole dataset instead of a sampled minibatch.
struct InnerLoop {
  std::size_t steps = 0;
  std::size_t batch_size = 1;
  double lr_scale = 1000.0;
  bool full_batch = false;

  std::size_t resolved_steps(std::size_t dataset_size) const {
    if (steps != 0) return steps;
    return full_batch ? 1 : dataset_size;
  }
  double step_lr(double lr_epoch, std::size_t dataset_size) const;

  void validate() const;
  nlohmann::json to_json() const;
  static InnerLoop from_json(const nlohmann::json& doc);

  friend bool operator==(const InnerLoop&, const InnerLoop&) = default;
};

struct EpochStats {
  std::size_t steps = 0;
  std::size_t clamped_ratios = 0;
};

/// Runs the inner loop on a frozen dataset collected under the behavior
/// policy whose log-probs the samples carry. Minibatch indices are drawn
/// uniformly with replacement from `rng`. Throws NonFinite if the
/// parameters blow up.
EpochStats train_epoch(PolicyModel& policy, OptimState& optim, const Dataset& data, const SurrogateSpec& spec,
                       const InnerLoop& inner, double lr_epoch, Rng& rng);

}  // namespace pgbias
