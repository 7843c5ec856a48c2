#include "pgbias/optim/optim.hpp"

#include <cmath>
#include <string>

#include "pgbias/errors.hpp"

namespace pgbias {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Sgd: return "sgd";
    case Algorithm::Momentum: return "momentum";
    case Algorithm::RmsProp: return "rmsprop";
    case Algorithm::Adam: return "adam";
  }
  return "sgd";
}

Algorithm algorithm_from_string(std::string_view name) {
  for (auto a : {Algorithm::Sgd, Algorithm::Momentum, Algorithm::RmsProp, Algorithm::Adam}) {
    if (to_string(a) == name) return a;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown optimizer '" + std::string(name) + "'");
}

void OptimizerConfig::validate() const {
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::InvalidArgument, "momentum must lie in [0, 1)");
  require(rmsprop_smoothing >= 0.0 && rmsprop_smoothing < 1.0, ErrorKind::InvalidArgument,
          "RMSProp smoothing must lie in [0, 1)");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
          ErrorKind::InvalidArgument, "Adam betas must lie in [0, 1)");
  require(delta >= 0.0 && std::isfinite(delta), ErrorKind::InvalidArgument, "delta must be finite and nonnegative");
}

nlohmann::json OptimizerConfig::to_json() const {
  return {{"algorithm", to_string(algorithm)},   {"momentum", momentum},     {"rmsprop_smoothing", rmsprop_smoothing},
          {"adam_beta1", adam_beta1},             {"adam_beta2", adam_beta2}, {"delta", delta},
          {"adam_bias_correction", adam_bias_correction}};
}

OptimizerConfig OptimizerConfig::from_json(const nlohmann::json& doc) {
  OptimizerConfig c;
  try {
    if (doc.is_string()) {
      c.algorithm = algorithm_from_string(doc.get<std::string>());
      return c;
    }
    if (doc.contains("algorithm")) c.algorithm = algorithm_from_string(doc["algorithm"].get<std::string>());
    c.momentum = doc.value("momentum", c.momentum);
    c.rmsprop_smoothing = doc.value("rmsprop_smoothing", c.rmsprop_smoothing);
    c.adam_beta1 = doc.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = doc.value("adam_beta2", c.adam_beta2);
    c.delta = doc.value("delta", c.delta);
    c.adam_bias_correction = doc.value("adam_bias_correction", c.adam_bias_correction);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed optimizer config: ") + e.what());
  }
  c.validate();
  return c;
}

OptimState OptimState::fresh(const OptimizerConfig& config, std::size_t n_params, double lr) {
  config.validate();
  OptimState s;
  s.config = config;
  s.lr = lr;
  s.second_moment.assign(n_params, 0.0);
  s.first_moment.assign(n_params, 0.0);
  return s;
}

nlohmann::json OptimState::to_json() const {
  return {{"config", config.to_json()},
          {"lr", lr},
          {"second_moment", second_moment},
          {"first_moment", first_moment},
          {"step", step}};
}

OptimState OptimState::from_json(const nlohmann::json& doc) {
  try {
    OptimState s;
    s.config = OptimizerConfig::from_json(doc.at("config"));
    s.lr = doc.at("lr").get<double>();
    s.second_moment = doc.at("second_moment").get<std::vector<double>>();
    s.first_moment = doc.at("first_moment").get<std::vector<double>>();
    s.step = doc.at("step").get<std::size_t>();
    require(s.second_moment.size() == s.first_moment.size(), ErrorKind::InvalidArgument,
            "optimizer accumulators have different lengths");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed optimizer state: ") + e.what());
  }
}

void optimizer_step(OptimState& state, std::span<double> params, std::span<const double> gradient) {
  require(std::isfinite(state.lr) && state.lr > 0.0, ErrorKind::InvalidArgument, "learning rate must be positive");
  require(params.size() == gradient.size() && state.second_moment.size() == params.size() &&
              state.first_moment.size() == params.size(),
          ErrorKind::InvalidArgument, "optimizer state, parameters and gradient differ in length");
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    require(std::isfinite(gradient[i]), ErrorKind::NonFinite, "non-finite gradient component " + std::to_string(i));
  }
  const auto& c = state.config;
  const double lr = state.lr;
  ++state.step;
  switch (c.algorithm) {
    case Algorithm::Sgd:
      for (std::size_t i = 0; i < params.size(); ++i) params[i] += lr * gradient[i];
      break;
    case Algorithm::Momentum:
      for (std::size_t i = 0; i < params.size(); ++i) {
        state.first_moment[i] = c.momentum * state.first_moment[i] + gradient[i];
        params[i] += lr * state.first_moment[i];
      }
      break;
    case Algorithm::RmsProp: {
      const double rho = c.rmsprop_smoothing;
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = gradient[i];
        state.second_moment[i] = rho * state.second_moment[i] + (1.0 - rho) * (g * g);
        if (g != 0.0) params[i] += lr * g / std::sqrt(state.second_moment[i] + c.delta);
      }
      break;
    }
    case Algorithm::Adam: {
      const double b1 = c.adam_beta1;
      const double b2 = c.adam_beta2;
      const auto t = static_cast<double>(state.step);
      const double c1 = c.adam_bias_correction ? 1.0 - std::pow(b1, t) : 1.0;
      const double c2 = c.adam_bias_correction ? 1.0 - std::pow(b2, t) : 1.0;
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = gradient[i];
        state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * g;
        state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * (g * g);
        const double m_hat = state.first_moment[i] / c1;
        const double v_hat = state.second_moment[i] / c2;
        if (m_hat != 0.0) params[i] += lr * m_hat / (std::sqrt(v_hat) + c.delta);
      }
      break;
    }
  }
}

double LrSchedule::lr_at(std::size_t epoch) const {
  const auto steps = static_cast<double>(epoch / decay_every);
  return base_lr * std::pow(decay_factor, steps);
}

void LrSchedule::validate() const {
  require(std::isfinite(base_lr) && base_lr > 0.0, ErrorKind::InvalidArgument, "base learning rate must be positive");
  require(decay_factor > 0.0 && decay_factor <= 1.0, ErrorKind::InvalidArgument, "decay factor must lie in (0, 1]");
  require(decay_every >= 1, ErrorKind::InvalidArgument, "decay interval must be at least one epoch");
}

nlohmann::json LrSchedule::to_json() const {
  return {{"base_lr", base_lr}, {"decay_factor", decay_factor}, {"decay_every", decay_every}};
}

LrSchedule LrSchedule::from_json(const nlohmann::json& doc) {
  LrSchedule s;
  try {
    s.base_lr = doc.value("base_lr", s.base_lr);
    s.decay_factor = doc.value("decay_factor", s.decay_factor);
    s.decay_every = doc.value("decay_every", s.decay_every);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed schedule: ") + e.what());
  }
  s.validate();
  return s;
}

FimMatrix exact_fim(const PolicyModel& policy, std::span<const double> state_dist) {
  require(policy.is_tabular(), ErrorKind::Unsupported, "exact_fim needs an enumerable (tabular) policy");
  double mass = 0.0;
  for (double d : state_dist) {
    require(d >= 0.0 && std::isfinite(d), ErrorKind::InvalidArgument, "state distribution must be nonnegative");
    mass += d;
  }
  require(std::abs(mass - 1.0) < 1e-9, ErrorKind::InvalidArgument, "state distribution must be normalized");
  const std::size_t n = policy.num_params();
  FimMatrix out{Table(n, n), std::vector<double>(n, 0.0)};
  std::vector<double> score(n);
  for (std::size_t s = 0; s < state_dist.size(); ++s) {
    if (state_dist[s] == 0.0) continue;
    const State state{s, {}};
    const auto probs = policy.action_probs(state);
    for (std::size_t a = 0; a < probs.size(); ++a) {
      const double w = state_dist[s] * probs[a];
      if (w == 0.0) continue;
      std::fill(score.begin(), score.end(), 0.0);
      policy.accumulate_grad_log_prob(state, Action{a, {}}, 1.0, score);
      for (std::size_t i = 0; i < n; ++i) {
        if (score[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) out.full(i, j) += w * score[i] * score[j];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.diagonal[i] = out.full(i, i);
  return out;
}

std::vector<double> fim_precondition(std::span<const double> gradient, std::span<const double> fim_diag,
                                     double delta) {
  require(gradient.size() == fim_diag.size(), ErrorKind::InvalidArgument, "gradient and FIM diagonal differ in length");
  std::vector<double> out(gradient.size());
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    require(fim_diag[i] >= 0.0, ErrorKind::InvalidArgument, "FIM diagonal must be nonnegative");
    out[i] = gradient[i] == 0.0 ? 0.0 : gradient[i] / std::sqrt(fim_diag[i] + delta);
  }
  return out;
}

}  // namespace pgbias
