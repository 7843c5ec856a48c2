#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pgbias/diagnostics/bias_spread.hpp"
#include "pgbias/harness/config.hpp"
#include "pgbias/harness/training.hpp"

namespace pgbias {

/// Runs the jobs on up to `workers` threads. Jobs must not share mutable
/// state; the first exception (in job order) is rethrown after all finish.
void run_jobs(std::vector<std::function<void()>>& jobs, std::size_t workers);

struct PerformanceResult {
  std::vector<VariantRun> runs;  ///< variant-major, then seed
};

PerformanceResult run_performance(const ExperimentConfig& config);

/// Requires a perturbation; every gradient batch is resampled through it.
PerformanceResult run_offpolicy(const ExperimentConfig& config);

struct BiasSpreadRun {
  std::uint64_t seed = 0;
  std::vector<BiasSpreadRecord> raw;
  std::vector<BiasSpreadRecord> smoothed;  ///< trailing 5-epoch mean of d1, d2, d_pct
  VariantRun baseline;
};

BiasSpreadRun bias_spread_seed(const ExperimentConfig& config, std::uint64_t seed);
std::vector<BiasSpreadRun> run_bias_spread(const ExperimentConfig& config);

/// Trailing mean over at most `window` records ending at each epoch.
std::vector<BiasSpreadRecord> sliding_window(const std::vector<BiasSpreadRecord>& raw, std::size_t window);

struct AliasToyConfig {
  GradientMode mode = GradientMode::Exact;
  std::size_t epochs = 2000;
  LrSchedule schedule{0.5, 0.5, 200};
  std::size_t episodes_per_epoch = 200;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  double init_theta = 0.1;
  std::size_t workers = 1;
};

struct AliasToyRow {
  double gamma = 0.0;
  GradientMode mode = GradientMode::Exact;
  double measured_unbiased = 0.0;  ///< mean over seeds of the final theta
  double measured_biased = 0.0;
  double predicted_unbiased = 0.0;
  double predicted_biased = 0.0;
  double measured_ratio = 0.0;  ///< exact return at the biased theta over that at the unbiased theta
  double predicted_ratio = 0.0;
};

std::vector<AliasToyRow> run_alias_toy(const std::vector<double>& gammas, const AliasToyConfig& config);

}  // namespace pgbias
