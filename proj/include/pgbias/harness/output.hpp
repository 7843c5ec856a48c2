#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgbias/diagnostics/loss_surface.hpp"
#include "pgbias/diagnostics/pca.hpp"
#include "pgbias/harness/experiments.hpp"

namespace pgbias {

inline constexpr const char* kVersion = "1.0.0";

inline constexpr const char* kMetricsHeader = "epoch,mean_return,exact_return,lr_used,theta,update_eard,clamped_ratios";
inline constexpr const char* kBiasSpreadHeader = "epoch,d1,d2,d_pct,d1_window,d2_window,d_pct_window";
inline constexpr const char* kAliasToyHeader =
    "gamma,mode,measured_unbiased,predicted_unbiased,measured_biased,predicted_biased,measured_ratio,predicted_ratio";

/// Metrics rows are deterministic; wall-clock times go to a separate file.
std::string metrics_csv(const VariantRun& run);
std::string timings_csv(const VariantRun& run);
std::string bias_spread_csv(const BiasSpreadRun& run);
std::string alias_toy_csv(const std::vector<AliasToyRow>& rows);
std::string loss_surface_csv(const LossSurface& surface);
std::string projection_csv(const Table& projected, const std::vector<double>& actions);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Everything an experiment run leaves behind: per-run CSVs, checkpoints,
/// cross-seed summaries and plots, and manifest.json.
void write_performance_outputs(const std::string& experiment, const ExperimentConfig& config,
                               const PerformanceResult& result);
void write_bias_spread_outputs(const ExperimentConfig& config, const std::vector<BiasSpreadRun>& runs);
void write_alias_toy_outputs(const std::filesystem::path& dir, const std::vector<AliasToyRow>& rows,
                             const nlohmann::json& settings);

nlohmann::json manifest(const std::string& experiment, const ExperimentConfig& config);

}  // namespace pgbias
