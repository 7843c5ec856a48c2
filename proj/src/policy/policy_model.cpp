#include "pgbias/policy/policy_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pgbias/errors.hpp"

namespace pgbias {
namespace {

// log-softmax of `logits` at index `a`; fills `probs` with the softmax.
double log_softmax(std::span<const double> logits, std::size_t a, std::vector<double>& probs) {
  const double max = *std::max_element(logits.begin(), logits.end());
  probs.resize(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - max);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return logits[a] - max - std::log(total);
}

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::TabularSoftmax: return "tabular-softmax";
    case PolicyKind::TiedAlias: return "tied-alias";
    case PolicyKind::MlpSoftmax: return "mlp-softmax";
    case PolicyKind::MlpGaussian: return "mlp-gaussian";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(std::string_view name) {
  for (auto k : {PolicyKind::TabularSoftmax, PolicyKind::TiedAlias, PolicyKind::MlpSoftmax, PolicyKind::MlpGaussian}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown policy kind '" + std::string(name) + "'");
}

PolicyModel PolicyModel::tabular_softmax(std::size_t n_states, std::size_t n_actions) {
  require(n_states > 0 && n_actions > 0, ErrorKind::InvalidArgument, "tabular policy needs states and actions");
  PolicyModel p;
  p.kind_ = PolicyKind::TabularSoftmax;
  p.n_states_ = n_states;
  p.n_actions_ = n_actions;
  p.params_.assign(n_states * n_actions, 0.0);
  return p;
}

PolicyModel PolicyModel::tied_alias(double theta) {
  require(theta >= 0.0 && theta <= 1.0, ErrorKind::Domain, "tied-alias theta must lie in [0, 1]");
  PolicyModel p;
  p.kind_ = PolicyKind::TiedAlias;
  p.n_states_ = 3;
  p.n_actions_ = 2;
  p.params_ = {theta};
  return p;
}

PolicyModel PolicyModel::mlp_softmax(std::size_t obs_dim, std::size_t n_actions, Rng& rng) {
  PolicyModel p;
  p.kind_ = PolicyKind::MlpSoftmax;
  p.n_actions_ = n_actions;
  p.net_ = Mlp({obs_dim, kHiddenWidth, kHiddenWidth, n_actions});
  p.params_ = p.net_.init_params(rng);
  return p;
}

PolicyModel PolicyModel::mlp_gaussian(std::size_t obs_dim, std::size_t action_dim, Rng& rng, double init_log_std) {
  PolicyModel p;
  p.kind_ = PolicyKind::MlpGaussian;
  p.n_actions_ = action_dim;
  p.net_ = Mlp({obs_dim, kHiddenWidth, kHiddenWidth, action_dim});
  p.params_ = p.net_.init_params(rng);
  p.params_.insert(p.params_.end(), action_dim, init_log_std);
  return p;
}

void PolicyModel::set_params(std::span<const double> params) {
  require(params.size() == params_.size(), ErrorKind::InvalidArgument,
          "parameter vector has length " + std::to_string(params.size()) + ", expected " +
              std::to_string(params_.size()));
  std::copy(params.begin(), params.end(), params_.begin());
}

void PolicyModel::project() {
  if (kind_ == PolicyKind::TiedAlias) params_[0] = std::clamp(params_[0], kTiedMin, kTiedMax);
}

void PolicyModel::check_state(const State& state) const {
  if (is_tabular()) {
    require(state.id < n_states_, ErrorKind::InvalidArgument,
            "state index " + std::to_string(state.id) + " out of range for " + std::string(to_string(kind_)));
  } else {
    require(state.x.size() == net_.input_dim(), ErrorKind::InvalidArgument,
            "observation has dimension " + std::to_string(state.x.size()) + ", expected " +
                std::to_string(net_.input_dim()));
  }
}

void PolicyModel::check_action(const Action& action) const {
  if (is_discrete()) {
    require(action.id < n_actions_, ErrorKind::InvalidArgument, "action index out of range");
  } else {
    require(action.u.size() == n_actions_, ErrorKind::InvalidArgument, "continuous action has the wrong dimension");
  }
}

double PolicyModel::clamped_log_std(std::size_t i) const {
  return std::clamp(params_[net_.num_params() + i], kLogStdMin, kLogStdMax);
}

double PolicyModel::log_prob(const State& state, const Action& action) const {
  check_state(state);
  check_action(action);
  switch (kind_) {
    case PolicyKind::TabularSoftmax: {
      std::vector<double> probs;
      return log_softmax(std::span(params_).subspan(state.id * n_actions_, n_actions_), action.id, probs);
    }
    case PolicyKind::TiedAlias:
      return action.id == 0 ? std::log(params_[0]) : std::log1p(-params_[0]);
    case PolicyKind::MlpSoftmax: {
      Mlp::Cache cache;
      net_.forward(params_, state.x, cache);
      std::vector<double> probs;
      return log_softmax(cache.output(), action.id, probs);
    }
    case PolicyKind::MlpGaussian: {
      Mlp::Cache cache;
      net_.forward(params_, state.x, cache);
      double lp = 0.0;
      for (std::size_t i = 0; i < n_actions_; ++i) {
        const double ls = clamped_log_std(i);
        const double z = (action.u[i] - cache.output()[i]) * std::exp(-ls);
        lp += -0.5 * z * z - ls - kHalfLog2Pi;
      }
      return lp;
    }
  }
  return 0.0;
}

double PolicyModel::accumulate_grad_log_prob(const State& state, const Action& action, double scale,
                                             std::span<double> grad) const {
  check_state(state);
  check_action(action);
  require(grad.size() == params_.size(), ErrorKind::InvalidArgument, "gradient buffer has the wrong length");
  switch (kind_) {
    case PolicyKind::TabularSoftmax: {
      std::vector<double> probs;
      const std::size_t row = state.id * n_actions_;
      const double lp = log_softmax(std::span(params_).subspan(row, n_actions_), action.id, probs);
      for (std::size_t b = 0; b < n_actions_; ++b) grad[row + b] += scale * ((b == action.id ? 1.0 : 0.0) - probs[b]);
      return lp;
    }
    case PolicyKind::TiedAlias: {
      const double theta = params_[0];
      if (action.id == 0) {
        grad[0] += scale / theta;
        return std::log(theta);
      }
      grad[0] -= scale / (1.0 - theta);
      return std::log1p(-theta);
    }
    case PolicyKind::MlpSoftmax: {
      Mlp::Cache cache;
      net_.forward(params_, state.x, cache);
      std::vector<double> probs;
      const double lp = log_softmax(cache.output(), action.id, probs);
      for (std::size_t b = 0; b < n_actions_; ++b) probs[b] = (b == action.id ? 1.0 : 0.0) - probs[b];
      net_.backward(params_, cache, probs, scale, grad);
      return lp;
    }
    case PolicyKind::MlpGaussian: {
      Mlp::Cache cache;
      net_.forward(params_, state.x, cache);
      std::vector<double> d_mean(n_actions_);
      double lp = 0.0;
      const std::size_t ls_offset = net_.num_params();
      for (std::size_t i = 0; i < n_actions_; ++i) {
        const double raw = params_[ls_offset + i];
        const double ls = clamped_log_std(i);
        const double inv_std = std::exp(-ls);
        const double z = (action.u[i] - cache.output()[i]) * inv_std;
        lp += -0.5 * z * z - ls - kHalfLog2Pi;
        d_mean[i] = z * inv_std;
        if (raw >= kLogStdMin && raw <= kLogStdMax) grad[ls_offset + i] += scale * (z * z - 1.0);
      }
      net_.backward(params_, cache, d_mean, scale, grad);
      return lp;
    }
  }
  return 0.0;
}

std::vector<double> PolicyModel::grad_log_prob(const State& state, const Action& action) const {
  std::vector<double> grad(params_.size(), 0.0);
  accumulate_grad_log_prob(state, action, 1.0, grad);
  return grad;
}

std::vector<double> PolicyModel::action_probs(const State& state) const {
  require(is_discrete(), ErrorKind::Unsupported, "action_probs needs a discrete policy");
  check_state(state);
  std::vector<double> probs;
  switch (kind_) {
    case PolicyKind::TabularSoftmax:
      log_softmax(std::span(params_).subspan(state.id * n_actions_, n_actions_), 0, probs);
      break;
    case PolicyKind::TiedAlias:
      probs = {params_[0], 1.0 - params_[0]};
      break;
    case PolicyKind::MlpSoftmax: {
      Mlp::Cache cache;
      net_.forward(params_, state.x, cache);
      log_softmax(cache.output(), 0, probs);
      break;
    }
    case PolicyKind::MlpGaussian:
      break;
  }
  return probs;
}

std::vector<double> PolicyModel::gaussian_mean(const State& state) const {
  require(kind_ == PolicyKind::MlpGaussian, ErrorKind::Unsupported, "gaussian_mean needs an mlp-gaussian policy");
  check_state(state);
  Mlp::Cache cache;
  net_.forward(params_, state.x, cache);
  return {cache.output().begin(), cache.output().end()};
}

std::vector<double> PolicyModel::gaussian_std() const {
  require(kind_ == PolicyKind::MlpGaussian, ErrorKind::Unsupported, "gaussian_std needs an mlp-gaussian policy");
  std::vector<double> out(n_actions_);
  for (std::size_t i = 0; i < n_actions_; ++i) out[i] = std::exp(clamped_log_std(i));
  return out;
}

SampledAction PolicyModel::sample_action(const State& state, Rng& rng) const {
  SampledAction out;
  if (is_discrete()) {
    out.action.id = rng.categorical(action_probs(state));
  } else {
    const auto mean = gaussian_mean(state);
    out.action.u.resize(n_actions_);
    for (std::size_t i = 0; i < n_actions_; ++i) out.action.u[i] = mean[i] + std::exp(clamped_log_std(i)) * rng.normal();
  }
  out.log_prob = log_prob(state, out.action);
  return out;
}

std::vector<double> PolicyModel::features(const State& state, int layer) const {
  require(is_mlp(), ErrorKind::Unsupported, "features are only defined for MLP policies");
  require(layer == 1 || layer == 2, ErrorKind::InvalidArgument, "feature layer must be 1 or 2");
  check_state(state);
  Mlp::Cache cache;
  net_.forward(params_, state.x, cache);
  return cache.post[static_cast<std::size_t>(layer)];
}

Table PolicyModel::table(std::size_t n_states) const {
  require(is_tabular(), ErrorKind::Unsupported, "probability tables need a tabular policy");
  require(kind_ == PolicyKind::TiedAlias || n_states == n_states_, ErrorKind::InvalidArgument,
          "policy table size does not match the policy");
  Table t(n_states, n_actions_);
  for (std::size_t s = 0; s < n_states; ++s) {
    const auto probs = action_probs(State{kind_ == PolicyKind::TiedAlias ? 0 : s, {}});
    for (std::size_t a = 0; a < n_actions_; ++a) t(s, a) = probs[a];
  }
  return t;
}

nlohmann::json PolicyModel::to_json() const {
  nlohmann::json arch;
  switch (kind_) {
    case PolicyKind::TabularSoftmax:
      arch = {{"n_states", n_states_}, {"n_actions", n_actions_}};
      break;
    case PolicyKind::TiedAlias:
      arch = {{"n_states", n_states_}, {"n_actions", n_actions_}};
      break;
    case PolicyKind::MlpSoftmax:
    case PolicyKind::MlpGaussian:
      arch = {{"layers", net_.sizes()}, {"activation", "relu"}, {"n_actions", n_actions_}};
      break;
  }
  return {{"kind", to_string(kind_)}, {"architecture", arch}, {"params", params_}};
}

PolicyModel PolicyModel::from_json(const nlohmann::json& doc) {
  try {
    const auto kind = policy_kind_from_string(doc.at("kind").get<std::string>());
    const auto& arch = doc.at("architecture");
    PolicyModel p;
    p.kind_ = kind;
    p.n_actions_ = arch.at("n_actions").get<std::size_t>();
    std::size_t expected = 0;
    if (kind == PolicyKind::TabularSoftmax || kind == PolicyKind::TiedAlias) {
      p.n_states_ = arch.at("n_states").get<std::size_t>();
      expected = kind == PolicyKind::TiedAlias ? 1 : p.n_states_ * p.n_actions_;
    } else {
      p.net_ = Mlp(arch.at("layers").get<std::vector<std::size_t>>());
      require(p.net_.output_dim() == p.n_actions_, ErrorKind::InvalidArgument,
              "checkpoint head size does not match n_actions");
      expected = p.net_.num_params() + (kind == PolicyKind::MlpGaussian ? p.n_actions_ : 0);
    }
    p.params_ = doc.at("params").get<std::vector<double>>();
    require(p.params_.size() == expected, ErrorKind::InvalidArgument, "checkpoint parameter count mismatch");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed policy checkpoint: ") + e.what());
  }
}

}  // namespace pgbias
