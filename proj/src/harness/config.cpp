#include "pgbias/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pgbias/errors.hpp"

namespace pgbias {

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::Alias: return "alias";
    case EnvKind::Chain: return "chain";
    case EnvKind::Pendulum: return "pendulum";
  }
  return "alias";
}

EnvKind env_kind_from_string(std::string_view name) {
  for (auto k : {EnvKind::Alias, EnvKind::Chain, EnvKind::Pendulum}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown env '" + std::string(name) + "' (alias, chain, pendulum)");
}

std::string_view to_string(GradientMode mode) { return mode == GradientMode::Exact ? "exact" : "monte_carlo"; }

GradientMode gradient_mode_from_string(std::string_view name) {
  if (name == "exact") return GradientMode::Exact;
  if (name == "monte_carlo" || name == "monte-carlo" || name == "mc") return GradientMode::MonteCarlo;
  throw Error(ErrorKind::InvalidArgument, "unknown gradient mode '" + std::string(name) + "'");
}

std::string_view to_string(BiasFilter filter) {
  switch (filter) {
    case BiasFilter::Both: return "both";
    case BiasFilter::BiasedOnly: return "on";
    case BiasFilter::UnbiasedOnly: return "off";
  }
  return "both";
}

BiasFilter bias_filter_from_string(std::string_view name) {
  if (name == "both") return BiasFilter::Both;
  if (name == "on" || name == "biased") return BiasFilter::BiasedOnly;
  if (name == "off" || name == "unbiased") return BiasFilter::UnbiasedOnly;
  throw Error(ErrorKind::InvalidArgument, "bias filter must be on, off or both");
}

bool PerturbationSpec::matches(const State& state) const {
  if (!states.empty() || state.x.empty()) {
    return std::find(states.begin(), states.end(), state.id) != states.end();
  }
  return coordinate < state.x.size() && std::abs(state.x[coordinate]) < threshold;
}

void PerturbationSpec::validate() const {
  require(std::isfinite(weight) && weight >= 1.0, ErrorKind::InvalidArgument, "perturbation weight must be >= 1");
  require(threshold >= 0.0, ErrorKind::InvalidArgument, "perturbation threshold must be nonnegative");
}

nlohmann::json PerturbationSpec::to_json() const {
  return {{"coordinate", coordinate}, {"threshold", threshold}, {"states", states}, {"weight", weight}};
}

PerturbationSpec PerturbationSpec::from_json(const nlohmann::json& doc) {
  PerturbationSpec p;
  try {
    p.coordinate = doc.value("coordinate", p.coordinate);
    p.threshold = doc.value("threshold", p.threshold);
    p.states = doc.value("states", p.states);
    p.weight = doc.value("weight", p.weight);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed perturbation: ") + e.what());
  }
  p.validate();
  return p;
}

ExperimentConfig ExperimentConfig::defaults(EnvKind env) {
  ExperimentConfig c;
  c.env = env;
  switch (env) {
    case EnvKind::Alias:
      c.gamma = 0.9;
      c.epochs = 2000;
      c.episodes_per_epoch = 200;
      c.schedule = {0.5, 0.5, 200};
      c.gradient_mode = GradientMode::Exact;
      c.inner_loop = {1, 1, 1.0, true};
      break;
    case EnvKind::Chain:
      c.gamma = 0.9;
      c.epochs = 200;
      c.episodes_per_epoch = 20;
      c.schedule = {1e-3, 0.9, 50};
      break;
    case EnvKind::Pendulum:
      c.gamma = 0.9;
      c.epochs = 100;
      c.episodes_per_epoch = 10;
      c.reward_scale = 0.1;
      c.schedule = {3e-4, 0.8, 30};
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  require(gamma > 0.0 && gamma < 1.0, ErrorKind::InvalidArgument, "gamma must lie in (0, 1)");
  require(epochs > 0, ErrorKind::InvalidArgument, "epochs must be positive");
  require(episodes_per_epoch > 0, ErrorKind::InvalidArgument, "episodes_per_epoch must be positive");
  require(truncation > 0, ErrorKind::InvalidArgument, "truncation must be positive");
  require(std::isfinite(reward_scale) && reward_scale > 0.0, ErrorKind::InvalidArgument,
          "reward_scale must be positive");
  require(chain_length >= 1, ErrorKind::InvalidArgument, "chain_length must be positive");
  require(pendulum_init_angle >= 0.0 && pendulum_init_angle <= 3.141592653589793, ErrorKind::InvalidArgument,
          "pendulum_init_angle must lie in [0, pi]");
  require(!seeds.empty(), ErrorKind::InvalidArgument, "seeds must not be empty");
  require(probe_size > 0, ErrorKind::InvalidArgument, "probe_size must be positive");
  require(workers > 0, ErrorKind::InvalidArgument, "workers must be positive");
  require(!output_dir.empty(), ErrorKind::InvalidArgument, "output_dir must not be empty");
  require(init_theta > 0.0 && init_theta < 1.0, ErrorKind::InvalidArgument, "init_theta must lie in (0, 1)");
  require(gradient_mode == GradientMode::MonteCarlo || env != EnvKind::Pendulum, ErrorKind::InvalidArgument,
          "exact gradients need a tabular environment");
  schedule.validate();
  optimizer.validate();
  spec.validate();
  correction.validate();
  inner_loop.validate();
  if (perturbation) perturbation->validate();
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json doc = {{"env", to_string(env)},
                        {"gamma", gamma},
                        {"epochs", epochs},
                        {"episodes_per_epoch", episodes_per_epoch},
                        {"truncation", truncation},
                        {"reward_scale", reward_scale},
                        {"chain_length", chain_length},
                        {"pendulum_init_angle", pendulum_init_angle},
                        {"schedule", schedule.to_json()},
                        {"optimizer", optimizer.to_json()},
                        {"spec", spec.to_json()},
                        {"correction", correction.to_json()},
                        {"inner_loop", inner_loop.to_json()},
                        {"gradient_mode", to_string(gradient_mode)},
                        {"seeds", seeds},
                        {"probe_size", probe_size},
                        {"output_dir", output_dir},
                        {"workers", workers},
                        {"bias", to_string(bias)},
                        {"continue_with", to_string(continue_with)},
                        {"self_test", self_test},
                        {"init_theta", init_theta},
                        {"init_log_std", init_log_std}};
  doc["perturbation"] = perturbation ? perturbation->to_json() : nlohmann::json(nullptr);
  return doc;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
  require(doc.is_object(), ErrorKind::InvalidArgument, "config must be a JSON object");
  try {
    const EnvKind env = doc.contains("env") ? env_kind_from_string(doc["env"].get<std::string>()) : EnvKind::Pendulum;
    ExperimentConfig c = defaults(env);
    static const std::vector<std::string> known = {
        "env",         "gamma",        "epochs",        "episodes_per_epoch", "truncation", "reward_scale",
        "chain_length", "pendulum_init_angle", "schedule",    "optimizer",     "spec",               "correction", "inner_loop",
        "gradient_mode", "seeds",      "perturbation",  "probe_size",         "output_dir", "workers",
        "bias",        "continue_with", "self_test",    "init_theta",         "init_log_std"};
    for (const auto& [key, value] : doc.items()) {
      require(std::find(known.begin(), known.end(), key) != known.end(), ErrorKind::InvalidArgument,
              "unknown config key '" + key + "'");
    }
    c.gamma = doc.value("gamma", c.gamma);
    c.epochs = doc.value("epochs", c.epochs);
    c.episodes_per_epoch = doc.value("episodes_per_epoch", c.episodes_per_epoch);
    c.truncation = doc.value("truncation", c.truncation);
    c.reward_scale = doc.value("reward_scale", c.reward_scale);
    c.chain_length = doc.value("chain_length", c.chain_length);
    c.pendulum_init_angle = doc.value("pendulum_init_angle", c.pendulum_init_angle);
    if (doc.contains("schedule")) {
      auto merged = c.schedule.to_json();
      merged.update(doc["schedule"]);
      c.schedule = LrSchedule::from_json(merged);
    }
    if (doc.contains("optimizer")) c.optimizer = OptimizerConfig::from_json(doc["optimizer"]);
    if (doc.contains("spec")) c.spec = SurrogateSpec::from_json(doc["spec"]);
    if (doc.contains("correction")) c.correction = Correction::from_json(doc["correction"]);
    if (doc.contains("inner_loop")) {
      auto merged = c.inner_loop.to_json();
      merged.update(doc["inner_loop"]);
      c.inner_loop = InnerLoop::from_json(merged);
    }
    if (doc.contains("gradient_mode")) c.gradient_mode = gradient_mode_from_string(doc["gradient_mode"].get<std::string>());
    if (doc.contains("seeds")) c.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    if (doc.contains("perturbation") && !doc["perturbation"].is_null()) {
      c.perturbation = PerturbationSpec::from_json(doc["perturbation"]);
    }
    c.probe_size = doc.value("probe_size", c.probe_size);
    c.output_dir = doc.value("output_dir", c.output_dir);
    c.workers = doc.value("workers", c.workers);
    if (doc.contains("bias")) c.bias = bias_filter_from_string(doc["bias"].get<std::string>());
    if (doc.contains("continue_with")) c.continue_with = fork_from_string(doc["continue_with"].get<std::string>());
    c.self_test = doc.value("self_test", c.self_test);
    c.init_theta = doc.value("init_theta", c.init_theta);
    c.init_log_std = doc.value("init_log_std", c.init_log_std);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, "config '" + path + "' is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(doc);
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config.to_json().dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pgbias
