#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pgbias/estimator/estimator.hpp"
#include "pgbias/harness/config.hpp"
#include "pgbias/mdp/pendulum.hpp"
#include "pgbias/mdp/tabular_mdp.hpp"
#include "pgbias/mdp/trajectory.hpp"
#include "pgbias/optim/optim.hpp"
#include "pgbias/policy/policy_model.hpp"
#include "pgbias/rng.hpp"

namespace pgbias {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Environment selected by a config, with the matching policy family.
class Environment {
 public:
  explicit Environment(const ExperimentConfig& config);

  EnvKind kind() const { return kind_; }
  bool is_tabular() const { return mdp_.has_value(); }
  const TabularMdp& mdp() const { return *mdp_; }

  /// Same initial policy for every variant that shares `seed`.
  PolicyModel initial_policy(std::uint64_t seed) const;
  Trajectory sample(const PolicyModel& policy, Rng& rng) const;

 private:
  EnvKind kind_;
  std::size_t truncation_;
  double init_theta_;
  double init_log_std_;
  std::optional<TabularMdp> mdp_;
  PendulumEnv pendulum_;
};

/// One training configuration inside an experiment.
struct VariantSpec {
  std::string name;
  SurrogateSpec spec;
  OptimizerConfig optimizer;
  double lr_multiplier = 1.0;
};

/// The {biased, unbiased} x {baseline, experimental} grid, filtered by
/// `config.bias`.
std::vector<VariantSpec> performance_variants(const ExperimentConfig& config);

struct RunRecord {
  std::size_t epoch = 0;
  double mean_return = 0.0;   ///< undiscounted, unscaled episode return of the epoch's batch
  double exact_return = kNaN; ///< tabular environments only
  double lr_used = 0.0;
  double theta = kNaN;        ///< tied alias probability
  double update_eard = kNaN;  ///< EARD(pi_{t+1}, pi_t) on the epoch's probe
  std::size_t clamped_ratios = 0;
  double wall_time = 0.0;     ///< seconds; written to the timings file only
};

struct VariantRun {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<RunRecord> records;
  bool failed = false;
  std::string error;
  std::optional<PolicyModel> final_policy;
  std::optional<OptimState> final_optim;
};

/// Resamples entries with replacement, matched states carrying weight
/// `spec.weight` and the rest weight 1; the size is preserved and entries
/// are kept in dataset order so trajectory runs stay contiguous.
Dataset perturb_dataset(const Dataset& data, const PerturbationSpec& spec, Rng& rng);

/// Scales rewards in place.
void scale_rewards(std::vector<Trajectory>& batch, double scale);

/// Trains one variant for `config.epochs` epochs. Non-finite parameters
/// mark the run failed instead of throwing.
VariantRun train_variant(const ExperimentConfig& config, const VariantSpec& variant, std::uint64_t seed);

/// Distinct rng streams per purpose.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSampling = 2;
inline constexpr std::uint64_t kMinibatch = 3;
inline constexpr std::uint64_t kPerturb = 4;
inline constexpr std::uint64_t kProbe = 5;
inline constexpr std::uint64_t kForks = 6;
}  // namespace streams

}  // namespace pgbias
