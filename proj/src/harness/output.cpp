#include "pgbias/harness/output.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pgbias/diagnostics/plot.hpp"
#include "pgbias/errors.hpp"

namespace pgbias {
namespace {

namespace fs = std::filesystem;

std::string fmt(double v) { return format_double(v); }

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  m.n = xs.size();
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

nlohmann::json checkpoint(const VariantRun& run) {
  nlohmann::json doc = {{"variant", run.variant}, {"seed", run.seed}, {"failed", run.failed}};
  if (run.final_policy) doc["policy"] = run.final_policy->to_json();
  if (run.final_optim) doc["optimizer"] = run.final_optim->to_json();
  if (run.failed) doc["error"] = run.error;
  return doc;
}

nlohmann::json run_entry(const VariantRun& run, const std::string& metrics_file) {
  nlohmann::json e = {{"variant", run.variant},
                      {"seed", run.seed},
                      {"status", run.failed ? "failed" : "ok"},
                      {"epochs_completed", run.records.size()},
                      {"metrics", metrics_file}};
  if (run.failed) e["error"] = run.error;
  return e;
}

}  // namespace

std::string metrics_csv(const VariantRun& run) {
  std::ostringstream os;
  os << kMetricsHeader << "\n";
  for (const auto& r : run.records) {
    os << r.epoch << "," << fmt(r.mean_return) << "," << fmt(r.exact_return) << "," << fmt(r.lr_used) << ","
       << fmt(r.theta) << "," << fmt(r.update_eard) << "," << r.clamped_ratios << "\n";
  }
  return os.str();
}

std::string timings_csv(const VariantRun& run) {
  std::ostringstream os;
  os << "epoch,wall_time\n";
  for (const auto& r : run.records) os << r.epoch << "," << fmt(r.wall_time) << "\n";
  return os.str();
}

std::string bias_spread_csv(const BiasSpreadRun& run) {
  std::ostringstream os;
  os << kBiasSpreadHeader << "\n";
  for (std::size_t i = 0; i < run.raw.size(); ++i) {
    const auto& r = run.raw[i];
    const auto& w = run.smoothed[i];
    os << r.epoch << "," << fmt(r.d1) << "," << fmt(r.d2) << "," << fmt(r.d_pct) << "," << fmt(w.d1) << ","
       << fmt(w.d2) << "," << fmt(w.d_pct) << "\n";
  }
  return os.str();
}

std::string alias_toy_csv(const std::vector<AliasToyRow>& rows) {
  std::ostringstream os;
  os << kAliasToyHeader << "\n";
  for (const auto& r : rows) {
    os << fmt(r.gamma) << "," << to_string(r.mode) << "," << fmt(r.measured_unbiased) << ","
       << fmt(r.predicted_unbiased) << "," << fmt(r.measured_biased) << "," << fmt(r.predicted_biased) << ","
       << fmt(r.measured_ratio) << "," << fmt(r.predicted_ratio) << "\n";
  }
  return os.str();
}

std::string loss_surface_csv(const LossSurface& surface) {
  std::ostringstream os;
  os << "a,b,loss\n";
  for (std::size_t i = 0; i < surface.axis.size(); ++i) {
    for (std::size_t j = 0; j < surface.axis.size(); ++j) {
      os << fmt(surface.axis[i]) << "," << fmt(surface.axis[j]) << "," << fmt(surface.grid(i, j)) << "\n";
    }
  }
  return os.str();
}

std::string projection_csv(const Table& projected, const std::vector<double>& actions) {
  std::ostringstream os;
  os << "x,y,action\n";
  for (std::size_t r = 0; r < projected.rows(); ++r) {
    os << fmt(projected(r, 0)) << "," << fmt(projected(r, 1)) << "," << fmt(actions[r]) << "\n";
  }
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
  require(out.good(), ErrorKind::Io, "write failed for '" + path.string() + "'");
}

nlohmann::json manifest(const std::string& experiment, const ExperimentConfig& config) {
  return {{"experiment", experiment},
          {"config", config.to_json()},
          {"config_hash", config_hash(config)},
          {"seeds", config.seeds},
          {"versions",
           {{"pgbias", kVersion},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"cxx", static_cast<long>(__cplusplus)}}},
          {"environment_note", config.env == EnvKind::Pendulum
                                   ? "native pendulum stand-in; directional comparison only, not a reproduction "
                                     "of continuous-control benchmark numbers"
                                   : "native tabular environment"}};
}

void write_performance_outputs(const std::string& experiment, const ExperimentConfig& config,
                               const PerformanceResult& result) {
  const fs::path dir = config.output_dir;
  ensure_dir(dir / "checkpoints");
  auto doc = manifest(experiment, config);
  doc["runs"] = nlohmann::json::array();

  std::map<std::string, std::vector<const VariantRun*>> by_variant;
  std::vector<std::string> order;
  for (const auto& run : result.runs) {
    const std::string stem = run.variant + "_" + std::to_string(run.seed);
    write_text(dir / ("metrics_" + stem + ".csv"), metrics_csv(run));
    write_text(dir / ("timings_" + stem + ".csv"), timings_csv(run));
    write_text(dir / "checkpoints" / (stem + ".json"), checkpoint(run).dump(2) + "\n");
    doc["runs"].push_back(run_entry(run, "metrics_" + stem + ".csv"));
    if (!by_variant.count(run.variant)) order.push_back(run.variant);
    by_variant[run.variant].push_back(&run);
  }

  std::ostringstream summary;
  summary << "variant,epoch,n_seeds,mean_return_mean,mean_return_std\n";
  std::vector<BandSeries> series;
  for (const auto& name : order) {
    const auto& runs = by_variant[name];
    std::size_t epochs = 0;
    for (const auto* r : runs) epochs = std::max(epochs, r->records.size());
    BandSeries s{name, {}, {}, {}};
    for (std::size_t e = 0; e < epochs; ++e) {
      std::vector<double> values;
      for (const auto* r : runs) {
        if (e < r->records.size()) values.push_back(r->records[e].mean_return);
      }
      const auto m = mean_std(values);
      summary << name << "," << e << "," << m.n << "," << fmt(m.mean) << "," << fmt(m.std) << "\n";
      s.x.push_back(static_cast<double>(e));
      s.mean.push_back(m.mean);
      s.std.push_back(m.std);
    }
    series.push_back(std::move(s));
  }
  write_text(dir / "summary.csv", summary.str());
  write_text(dir / "plots" / "returns.svg",
             svg_band_plot(experiment + " (" + std::string(to_string(config.env)) + ")", "epoch",
                           "mean episode return", series));
  write_text(dir / "manifest.json", doc.dump(2) + "\n");
}

void write_bias_spread_outputs(const ExperimentConfig& config, const std::vector<BiasSpreadRun>& runs) {
  const fs::path dir = config.output_dir;
  ensure_dir(dir / "checkpoints");
  auto doc = manifest("bias-spread", config);
  doc["runs"] = nlohmann::json::array();
  std::size_t epochs = 0;
  for (const auto& run : runs) {
    const std::string stem = "baseline_" + std::to_string(run.seed);
    write_text(dir / ("metrics_" + stem + ".csv"), metrics_csv(run.baseline));
    write_text(dir / ("timings_" + stem + ".csv"), timings_csv(run.baseline));
    write_text(dir / ("bias_spread_" + std::to_string(run.seed) + ".csv"), bias_spread_csv(run));
    write_text(dir / "checkpoints" / (stem + ".json"), checkpoint(run.baseline).dump(2) + "\n");
    auto entry = run_entry(run.baseline, "metrics_" + stem + ".csv");
    entry["bias_spread"] = "bias_spread_" + std::to_string(run.seed) + ".csv";
    doc["runs"].push_back(entry);
    epochs = std::max(epochs, run.raw.size());
  }

  std::ostringstream summary;
  summary << "epoch,n_seeds,d_pct_window_mean,d_pct_window_std,d1_window_mean,d2_window_mean\n";
  BandSeries pct{"d% (5-epoch window)", {}, {}, {}};
  BandSeries d1{"d1 corrected pair", {}, {}, {}};
  BandSeries d2{"d2 plain pair", {}, {}, {}};
  for (std::size_t e = 0; e < epochs; ++e) {
    std::vector<double> p, a, b;
    for (const auto& run : runs) {
      if (e < run.smoothed.size()) {
        p.push_back(run.smoothed[e].d_pct);
        a.push_back(run.smoothed[e].d1);
        b.push_back(run.smoothed[e].d2);
      }
    }
    const auto mp = mean_std(p), ma = mean_std(a), mb = mean_std(b);
    summary << e << "," << mp.n << "," << fmt(mp.mean) << "," << fmt(mp.std) << "," << fmt(ma.mean) << ","
            << fmt(mb.mean) << "\n";
    const auto x = static_cast<double>(e);
    pct.x.push_back(x), pct.mean.push_back(mp.mean), pct.std.push_back(mp.std);
    d1.x.push_back(x), d1.mean.push_back(ma.mean), d1.std.push_back(ma.std);
    d2.x.push_back(x), d2.mean.push_back(mb.mean), d2.std.push_back(mb.std);
  }
  write_text(dir / "summary.csv", summary.str());
  write_text(dir / "plots" / "bias_spread_pct.svg", svg_band_plot("percentage distance", "epoch", "d%", {pct}));
  write_text(dir / "plots" / "bias_spread_eard.svg", svg_band_plot("fork distances", "epoch", "EARD", {d1, d2}));
  write_text(dir / "manifest.json", doc.dump(2) + "\n");
}

void write_alias_toy_outputs(const fs::path& dir, const std::vector<AliasToyRow>& rows,
                             const nlohmann::json& settings) {
  ensure_dir(dir);
  write_text(dir / "alias_toy.csv", alias_toy_csv(rows));
  nlohmann::json doc = {{"experiment", "alias-toy"}, {"settings", settings}, {"versions", {{"pgbias", kVersion}}}};
  write_text(dir / "manifest.json", doc.dump(2) + "\n");
}

}  // namespace pgbias
