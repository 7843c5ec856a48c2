#include "pgbias/diagnostics/bias_spread.hpp"

#include <cmath>
#include <string>

#include "pgbias/errors.hpp"

namespace pgbias {

nlohmann::json BiasSpreadRecord::to_json() const {
  return {{"epoch", epoch}, {"d1", d1}, {"d2", d2}, {"d_pct", d_pct}};
}

double percentage_distance(double d1, double d2) {
  const double sum = d1 + d2;
  if (sum < 1e-12) return 0.0;
  return (d1 - d2) / sum;
}

SurrogateSpec Correction::apply(SurrogateSpec spec) const {
  spec.regularizer = regularizer;
  spec.alpha = alpha;
  spec.beta = beta;
  return spec;
}

void Correction::validate() const {
  optimizer.validate();
  require(std::isfinite(alpha) && alpha >= 0.0 && std::isfinite(beta) && beta >= 0.0, ErrorKind::InvalidArgument,
          "correction coefficients must be nonnegative");
  require(std::isfinite(lr_multiplier) && lr_multiplier > 0.0, ErrorKind::InvalidArgument,
          "correction lr multiplier must be positive");
}

nlohmann::json Correction::to_json() const {
  return {{"optimizer", optimizer.to_json()},
          {"regularizer", to_string(regularizer)},
          {"alpha", alpha},
          {"beta", beta},
          {"lr_multiplier", lr_multiplier}};
}

Correction Correction::from_json(const nlohmann::json& doc) {
  Correction c;
  try {
    if (doc.contains("optimizer")) c.optimizer = OptimizerConfig::from_json(doc["optimizer"]);
    if (doc.contains("regularizer")) c.regularizer = regularizer_from_string(doc["regularizer"].get<std::string>());
    c.alpha = doc.value("alpha", c.alpha);
    c.beta = doc.value("beta", c.beta);
    c.lr_multiplier = doc.value("lr_multiplier", c.lr_multiplier);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed correction: ") + e.what());
  }
  c.validate();
  return c;
}

std::string_view to_string(Fork fork) {
  switch (fork) {
    case Fork::Unbiased: return "unbiased";
    case Fork::Biased: return "biased";
    case Fork::UnbiasedCorrected: return "unbiased-corrected";
    case Fork::BiasedCorrected: return "biased-corrected";
  }
  return "unbiased";
}

Fork fork_from_string(std::string_view name) {
  for (auto f : {Fork::Unbiased, Fork::Biased, Fork::UnbiasedCorrected, Fork::BiasedCorrected}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown fork '" + std::string(name) + "'");
}

namespace {

constexpr std::uint64_t kMinibatchStream = 11;
constexpr std::uint64_t kProbeStream = 12;

}  // namespace

BiasSpreadResult bias_spread_step(const PolicyModel& baseline, const Dataset& data, const BiasSpreadConfig& config,
                                  const OptimState& plain_optim, const OptimState& corrected_optim,
                                  std::uint64_t seed, std::size_t epoch) {
  config.correction.validate();
  SurrogateSpec unbiased;
  unbiased.state_weighting = StateWeighting::Discounted;
  SurrogateSpec biased;
  biased.state_weighting = StateWeighting::Undiscounted;

  std::array<SurrogateSpec, 4> specs{unbiased, biased, config.correction.apply(unbiased),
                                     config.correction.apply(biased)};
  std::array<OptimState, 4> optim{plain_optim, plain_optim, corrected_optim, corrected_optim};
  std::array<double, 4> lr{config.lr_epoch, config.lr_epoch, config.lr_epoch * config.correction.lr_multiplier,
                           config.lr_epoch * config.correction.lr_multiplier};
  if (config.self_test) {
    specs.fill(unbiased);
    optim.fill(plain_optim);
    lr.fill(config.lr_epoch);
  }

  BiasSpreadResult out{{}, {baseline, baseline, baseline, baseline}, optim, {}, {}};
  for (std::size_t f = 0; f < 4; ++f) {
    Rng rng(seed, kMinibatchStream);
    train_epoch(out.forks[f], out.optim[f], data, specs[f], config.inner, lr[f], rng);
  }

  Rng probe_rng(seed, kProbeStream);
  const auto probe = probe_from_dataset(data, config.probe_size, probe_rng);
  out.eard_plain = eard(probe, out.forks[0], out.forks[1]);
  out.eard_corrected = eard(probe, out.forks[2], out.forks[3]);
  out.record.epoch = epoch;
  out.record.d1 = out.eard_corrected.value;
  out.record.d2 = out.eard_plain.value;
  out.record.d_pct = percentage_distance(out.record.d1, out.record.d2);
  return out;
}

}  // namespace pgbias
