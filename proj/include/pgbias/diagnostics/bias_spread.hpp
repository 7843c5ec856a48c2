#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pgbias/diagnostics/eard.hpp"
#include "pgbias/estimator/estimator.hpp"
#include "pgbias/optim/optim.hpp"
#include "pgbias/optim/trainer.hpp"
#include "pgbias/policy/policy_model.hpp"

namespace pgbias {

struct BiasSpreadRecord {
  std::size_t epoch = 0;
  double d1 = 0.0;  ///< EARD between the two corrected forks
  double d2 = 0.0;  ///< EARD between the two uncorrected forks
  double d_pct = 0.0;

  nlohmann::json to_json() const;
};

/// (d1 - d2) / (d1 + d2), or 0 when d1 + d2 < 1e-12.
double percentage_distance(double d1, double d2);

/// What turns a plain trainer into a corrected one.
struct Correction {
  OptimizerConfig optimizer{Algorithm::RmsProp};
  RegularizerKind regularizer = RegularizerKind::Kl;
  double alpha = 0.3;
  double beta = 0.0;
  double lr_multiplier = 1.0;

  SurrogateSpec apply(SurrogateSpec spec) const;
  void validate() const;
  nlohmann::json to_json() const;
  static Correction from_json(const nlohmann::json& doc);

  friend bool operator==(const Correction&, const Correction&) = default;
};

enum class Fork { Unbiased = 0, Biased = 1, UnbiasedCorrected = 2, BiasedCorrected = 3 };
std::string_view to_string(Fork fork);
Fork fork_from_string(std::string_view name);

struct BiasSpreadConfig {
  InnerLoop inner;
  double lr_epoch = 1e-3;
  Correction correction;
  std::size_t probe_size = 10000;
  /// Wires the plain unbiased trainer into all four slots.
  bool self_test = false;
};

struct BiasSpreadResult {
  BiasSpreadRecord record;
  std::array<PolicyModel, 4> forks;
  std::array<OptimState, 4> optim;
  EardResult eard_corrected;
  EardResult eard_plain;
};

/// Trains four one-epoch forks from `baseline` on the same dataset with the
/// same minibatch stream: plain forks start from `plain_optim`, corrected
/// forks from `corrected_optim` (both copied). d1 compares the corrected
/// pair, d2 the plain pair, on probe pairs taken from the dataset.
BiasSpreadResult bias_spread_step(const PolicyModel& baseline, const Dataset& data, const BiasSpreadConfig& config,
                                  const OptimState& plain_optim, const OptimState& corrected_optim,
                                  std::uint64_t seed, std::size_t epoch = 0);

}  // namespace pgbias
