#include "pgbias/estimator/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pgbias/errors.hpp"

namespace pgbias {

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::None: return "none";
    case RegularizerKind::Kl: return "kl";
    case RegularizerKind::ReverseKl: return "reverse-kl";
  }
  return "none";
}

RegularizerKind regularizer_from_string(std::string_view name) {
  if (name == "none") return RegularizerKind::None;
  if (name == "kl") return RegularizerKind::Kl;
  if (name == "reverse-kl" || name == "reverse_kl") return RegularizerKind::ReverseKl;
  throw Error(ErrorKind::InvalidArgument, "unknown regularizer '" + std::string(name) + "'");
}

std::string_view to_string(StateWeighting weighting) {
  return weighting == StateWeighting::Discounted ? "discounted" : "undiscounted";
}

StateWeighting state_weighting_from_string(std::string_view name) {
  if (name == "discounted") return StateWeighting::Discounted;
  if (name == "undiscounted") return StateWeighting::Undiscounted;
  throw Error(ErrorKind::InvalidArgument, "unknown state weighting '" + std::string(name) + "'");
}

void SurrogateSpec::validate() const {
  require(std::isfinite(alpha) && alpha >= 0.0, ErrorKind::InvalidArgument, "alpha must be finite and nonnegative");
  require(std::isfinite(beta) && beta >= 0.0, ErrorKind::InvalidArgument, "beta must be finite and nonnegative");
}

nlohmann::json SurrogateSpec::to_json() const {
  return {{"state_weighting", to_string(state_weighting)},
          {"regularizer", to_string(regularizer)},
          {"alpha", alpha},
          {"beta", beta},
          {"use_importance_ratio", use_importance_ratio}};
}

SurrogateSpec SurrogateSpec::from_json(const nlohmann::json& doc) {
  SurrogateSpec s;
  try {
    if (doc.contains("state_weighting")) s.state_weighting = state_weighting_from_string(doc["state_weighting"].get<std::string>());
    if (doc.contains("regularizer")) s.regularizer = regularizer_from_string(doc["regularizer"].get<std::string>());
    if (doc.contains("alpha")) s.alpha = doc["alpha"].get<double>();
    if (doc.contains("beta")) s.beta = doc["beta"].get<double>();
    if (doc.contains("use_importance_ratio")) s.use_importance_ratio = doc["use_importance_ratio"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed surrogate spec: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json GradEstimate::to_json() const {
  return {{"gradient", gradient},
          {"std_error", std_error},
          {"n_trajectories", n_trajectories},
          {"objective_value", objective_value},
          {"clamped_ratios", clamped_ratios}};
}

std::vector<double> mc_returns(const Trajectory& trajectory, double gamma) {
  std::vector<double> q(trajectory.steps.size());
  double running = 0.0;
  for (std::size_t k = q.size(); k-- > 0;) {
    running = trajectory.steps[k].reward + gamma * running;
    q[k] = running;
  }
  return q;
}

Dataset make_dataset(std::span<const Trajectory> batch, double gamma) {
  Dataset data;
  data.n_trajectories = batch.size();
  data.gamma = gamma;
  std::size_t total = 0;
  for (const auto& t : batch) total += t.size();
  data.samples.reserve(total);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    validate_trajectory(batch[i]);
    const auto q = mc_returns(batch[i], gamma);
    double discount = 1.0;
    for (std::size_t k = 0; k < batch[i].size(); ++k) {
      const auto& step = batch[i].steps[k];
      data.samples.push_back(Sample{step.state, step.action, q[k], step.behavior_log_prob, discount, k, i});
      discount *= gamma;
    }
  }
  return data;
}

namespace {

// Adds scale * grad_theta[ w (ratio q + reg) ] for one sample and returns the
// sample's surrogate value w (ratio q + reg).
double accumulate_sample(const Sample& s, const PolicyModel& policy, const SurrogateSpec& spec, double scale,
                         std::span<double> grad, std::size_t& clamped) {
  const double w = spec.state_weighting == StateWeighting::Discounted ? s.discount : 1.0;
  const bool needs_log_prob = spec.use_importance_ratio || spec.regularizer == RegularizerKind::ReverseKl;
  if (!needs_log_prob) {
    // grad[q log pi + alpha log pi] only needs the score.
    const double alpha = spec.regularizer == RegularizerKind::Kl ? spec.alpha : 0.0;
    const double lp = policy.accumulate_grad_log_prob(s.state, s.action, scale * w * (s.q_hat + alpha), grad);
    return w * (s.q_hat + alpha) * lp;
  }
  const double lp = policy.log_prob(s.state, s.action);
  double log_ratio = lp - s.behavior_log_prob;
  if (std::abs(log_ratio) > kLogRatioClamp) {
    ++clamped;
    log_ratio = std::clamp(log_ratio, -kLogRatioClamp, kLogRatioClamp);
  }
  const double ratio = std::exp(log_ratio);
  const double q_ratio = spec.use_importance_ratio ? ratio : 1.0;
  // d/dtheta of each term, written as coefficient * grad log pi.
  double coeff = q_ratio * s.q_hat;
  double value = spec.use_importance_ratio ? ratio * s.q_hat : s.q_hat * lp;
  switch (spec.regularizer) {
    case RegularizerKind::None:
      break;
    case RegularizerKind::Kl:
      coeff += spec.alpha;
      value += spec.alpha * lp;
      break;
    case RegularizerKind::ReverseKl: {
      const double gap = s.behavior_log_prob - lp;
      coeff += spec.beta * ratio * (gap - 1.0);
      value += spec.beta * ratio * gap;
      break;
    }
  }
  policy.accumulate_grad_log_prob(s.state, s.action, scale * w * coeff, grad);
  return w * value;
}

void check_behavior(const Dataset& data, const PolicyModel& policy, const PolicyModel& behavior) {
  require(policy.kind() == behavior.kind() && policy.num_params() == behavior.num_params(),
          ErrorKind::InvalidArgument, "policy and behavior must share a parameter space");
  if (data.samples.empty()) return;
  const auto& first = data.samples.front();
  const double lp = behavior.log_prob(first.state, first.action);
  require(std::abs(lp - first.behavior_log_prob) <= 1e-9 * (1.0 + std::abs(lp)), ErrorKind::InvalidArgument,
          "recorded behavior log-probs were not produced by the given behavior policy");
}

}  // namespace

GradEstimate estimate_gradient(const Dataset& data, const PolicyModel& policy, const PolicyModel& behavior,
                               const SurrogateSpec& spec) {
  require(data.n_trajectories > 0, ErrorKind::EmptyInput, "estimate_gradient: empty dataset");
  check_behavior(data, policy, behavior);
  return surrogate_gradient(data, policy, spec);
}

GradEstimate surrogate_gradient(const Dataset& data, const PolicyModel& policy, const SurrogateSpec& spec) {
  spec.validate();
  require(data.n_trajectories > 0, ErrorKind::EmptyInput, "estimate_gradient: empty dataset");

  const std::size_t dim = policy.num_params();
  const double n = static_cast<double>(data.n_trajectories);
  GradEstimate out;
  out.n_trajectories = data.n_trajectories;
  out.gradient.assign(dim, 0.0);
  std::vector<double> sum_sq(dim, 0.0);
  std::vector<double> unit(dim, 0.0);

  // Contiguous runs of one trajectory form one unit of the mean; their sums
  // give the standard error.
  auto flush = [&] {
    for (std::size_t i = 0; i < dim; ++i) {
      out.gradient[i] += unit[i];
      sum_sq[i] += unit[i] * unit[i];
      unit[i] = 0.0;
    }
  };
  double objective = 0.0;
  std::size_t current = data.samples.empty() ? 0 : data.samples.front().trajectory;
  for (const auto& s : data.samples) {
    if (s.trajectory != current) {
      flush();
      current = s.trajectory;
    }
    objective += accumulate_sample(s, policy, spec, 1.0, unit, out.clamped_ratios);
  }
  flush();

  out.std_error.assign(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    const double mean = out.gradient[i] / n;
    out.gradient[i] = mean;
    if (data.n_trajectories > 1) {
      const double var = std::max(0.0, (sum_sq[i] / n - mean * mean) * n / (n - 1.0));
      out.std_error[i] = std::sqrt(var / n);
    }
    require(std::isfinite(mean), ErrorKind::NonFinite, "non-finite gradient component " + std::to_string(i));
  }
  out.objective_value = objective / n;
  return out;
}

GradEstimate estimate_gradient(std::span<const Trajectory> batch, const PolicyModel& policy,
                               const PolicyModel& behavior, const SurrogateSpec& spec, double gamma) {
  require(!batch.empty(), ErrorKind::EmptyInput, "estimate_gradient: empty dataset");
  return estimate_gradient(make_dataset(batch, gamma), policy, behavior, spec);
}

std::vector<double> minibatch_gradient(const Dataset& data, std::span<const std::size_t> indices,
                                       const PolicyModel& policy, const SurrogateSpec& spec, std::size_t* clamped) {
  require(!indices.empty(), ErrorKind::EmptyInput, "minibatch_gradient: empty minibatch");
  std::vector<double> grad(policy.num_params(), 0.0);
  std::size_t local = 0;
  const double scale = 1.0 / static_cast<double>(indices.size());
  for (std::size_t idx : indices) {
    require(idx < data.samples.size(), ErrorKind::InvalidArgument, "minibatch index out of range");
    accumulate_sample(data.samples[idx], policy, spec, scale, grad, local);
  }
  for (double g : grad) require(std::isfinite(g), ErrorKind::NonFinite, "non-finite minibatch gradient");
  if (clamped != nullptr) *clamped += local;
  return grad;
}

std::vector<double> exact_pg(const TabularMdp& mdp, const PolicyModel& policy, StateWeighting mode,
                             std::span<const double> state_scale) {
  require(policy.is_tabular(), ErrorKind::Unsupported, "exact_pg needs a tabular or tied-alias policy");
  require(state_scale.empty() || state_scale.size() == mdp.n_states(), ErrorKind::InvalidArgument,
          "state scale must have one entry per state");
  const Table pi = policy.table(mdp.n_states());
  const auto d = occupancy(mdp, pi, mode);
  const Table q = exact_q(mdp, pi);
  std::vector<double> grad(policy.num_params(), 0.0);
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    if (s == mdp.terminal()) continue;
    const double weight = d.weights[s] * (state_scale.empty() ? 1.0 : state_scale[s]);
    if (weight == 0.0) continue;
    const State state{s, {}};
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      // grad pi = pi grad log pi
      if (pi(s, a) == 0.0) continue;
      policy.accumulate_grad_log_prob(state, Action{a, {}}, weight * pi(s, a) * q(s, a), grad);
    }
  }
  return grad;
}

std::vector<double> finite_diff_grad(const Objective& objective, std::span<const double> params, double h) {
  require(h > 0.0, ErrorKind::InvalidArgument, "finite-difference step must be positive");
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = objective(x);
    x[i] = orig - h;
    const double down = objective(x);
    x[i] = orig;
    require(std::isfinite(up) && std::isfinite(down), ErrorKind::NonFinite,
            "objective is non-finite near coordinate " + std::to_string(i));
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace pgbias
