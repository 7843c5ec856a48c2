#include "pgbias/diagnostics/loss_surface.hpp"

#include <cmath>
#include <numeric>

#include "pgbias/errors.hpp"

namespace pgbias {
namespace {

constexpr std::uint64_t kActionStream = 41;
constexpr std::uint64_t kDirectionStream = 42;

}  // namespace

std::vector<std::vector<std::size_t>> filter_groups(const PolicyModel& policy) {
  std::vector<std::vector<std::size_t>> groups;
  if (policy.kind() == PolicyKind::TabularSoftmax) {
    for (std::size_t s = 0; s < policy.n_states(); ++s) {
      std::vector<std::size_t> g(policy.n_actions());
      std::iota(g.begin(), g.end(), s * policy.n_actions());
      groups.push_back(std::move(g));
    }
    return groups;
  }
  if (policy.kind() == PolicyKind::TiedAlias) return {{0}};
  const Mlp& net = policy.network();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const std::size_t in = net.sizes()[l];
    const std::size_t out = net.sizes()[l + 1];
    for (std::size_t j = 0; j < out; ++j) {
      std::vector<std::size_t> g(in);
      std::iota(g.begin(), g.end(), net.weight_offset(l) + j * in);
      g.push_back(net.bias_offset(l) + j);
      groups.push_back(std::move(g));
    }
  }
  if (policy.num_params() > net.num_params()) {
    std::vector<std::size_t> g(policy.num_params() - net.num_params());
    std::iota(g.begin(), g.end(), net.num_params());
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<double> filter_normalized_direction(const PolicyModel& policy, Rng& rng) {
  std::vector<double> d(policy.num_params());
  for (double& x : d) x = rng.normal();
  const auto theta = policy.params();
  for (const auto& group : filter_groups(policy)) {
    double dn = 0.0, tn = 0.0;
    for (auto i : group) {
      dn += d[i] * d[i];
      tn += theta[i] * theta[i];
    }
    const double factor = dn > 0.0 ? std::sqrt(tn / dn) : 0.0;
    for (auto i : group) d[i] *= factor;
  }
  return d;
}

double surrogate_loss(const PolicyModel& policy, const ScoreModel& model, std::span<const State> states,
                      const LossSurfaceConfig& config) {
  require(!states.empty(), ErrorKind::EmptyInput, "surrogate_loss: no states");
  require(config.actions_per_state >= 1, ErrorKind::InvalidArgument, "actions_per_state must be at least 1");
  Rng rng(config.seed, kActionStream);
  const double alpha = config.regularized ? config.alpha : 0.0;
  double total = 0.0;
  for (const auto& s : states) {
    for (std::size_t k = 0; k < config.actions_per_state; ++k) {
      const auto sampled = policy.sample_action(s, rng);
      double value = model.predict(score_input(policy, s, sampled.action));
      if (config.regularized) value += alpha * sampled.log_prob;
      total += value;
    }
  }
  return -total / static_cast<double>(states.size() * config.actions_per_state);
}

LossSurface loss_surface_along(const PolicyModel& policy, const ScoreModel& model, std::span<const State> states,
                               std::span<const double> direction1, std::span<const double> direction2,
                               const LossSurfaceConfig& config) {
  const std::size_t r = config.resolution;
  require(r >= 3 && r % 2 == 1, ErrorKind::InvalidArgument, "grid resolution must be odd and at least 3");
  require(direction1.size() == policy.num_params() && direction2.size() == policy.num_params(),
          ErrorKind::InvalidArgument, "directions must match the parameter count");
  LossSurface out;
  out.direction1.assign(direction1.begin(), direction1.end());
  out.direction2.assign(direction2.begin(), direction2.end());
  out.axis.resize(r);
  for (std::size_t i = 0; i < r; ++i) out.axis[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(r - 1);
  out.center_loss = surrogate_loss(policy, model, states, config);
  out.grid = Table(r, r);

  const auto theta = policy.params();
  std::vector<double> shifted(theta.size());
  PolicyModel probe = policy;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      for (std::size_t k = 0; k < theta.size(); ++k) {
        shifted[k] = theta[k] + out.axis[i] * direction1[k] + out.axis[j] * direction2[k];
      }
      probe.set_params(shifted);
      probe.project();
      out.grid(i, j) = surrogate_loss(probe, model, states, config);
    }
  }
  return out;
}

LossSurface loss_surface(const PolicyModel& policy, const ScoreModel& model, std::span<const State> states,
                         const LossSurfaceConfig& config) {
  Rng rng(config.seed, kDirectionStream);
  const auto d1 = filter_normalized_direction(policy, rng);
  const auto d2 = filter_normalized_direction(policy, rng);
  return loss_surface_along(policy, model, states, d1, d2, config);
}

}  // namespace pgbias
