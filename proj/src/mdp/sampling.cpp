#include "pgbias/mdp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "pgbias/errors.hpp"
#include "pgbias/policy/policy_model.hpp"

namespace pgbias {
namespace {

void check_log_prob(double lp, std::size_t k) {
  if (!std::isfinite(lp)) {
    throw Error(ErrorKind::NonFinite, "non-finite behavior log-prob at step " + std::to_string(k));
  }
}

}  // namespace

Trajectory sample_episode(const TabularMdp& mdp, const PolicyModel& policy, Rng& rng, std::size_t max_steps) {
  require(policy.is_tabular() && policy.is_discrete(), ErrorKind::Unsupported,
          "tabular environments need a tabular policy");
  require(policy.n_actions() == mdp.n_actions(), ErrorKind::InvalidArgument,
          "policy and MDP disagree on the number of actions");
  Trajectory out;
  std::size_t s = rng.categorical(mdp.initial_dist());
  for (std::size_t k = 0; k < max_steps; ++k) {
    if (s == mdp.terminal()) return out;
    State state{s, {}};
    auto sampled = policy.sample_action(state, rng);
    check_log_prob(sampled.log_prob, k);
    const std::size_t a = sampled.action.id;
    const double reward = mdp.reward(s, a);
    out.steps.push_back(Step{std::move(state), std::move(sampled.action), reward, sampled.log_prob, k});
    s = rng.categorical(std::span<const double>(mdp.transition_row(s, a), mdp.n_states()));
  }
  out.truncated = s != mdp.terminal();
  return out;
}

double discrete_torque(const PendulumEnv& env, std::size_t action, std::size_t n_actions) {
  const double max = env.params().max_torque;
  if (n_actions <= 1) return 0.0;
  return -max + 2.0 * max * static_cast<double>(action) / static_cast<double>(n_actions - 1);
}

Trajectory sample_episode(const PendulumEnv& env, const PolicyModel& policy, Rng& rng, std::size_t max_steps) {
  require(policy.is_mlp(), ErrorKind::Unsupported, "the pendulum needs an MLP policy");
  require(policy.obs_dim() == PendulumEnv::kObservationDim, ErrorKind::InvalidArgument,
          "policy input size does not match the pendulum observation");
  require(policy.is_discrete() || policy.n_actions() == PendulumEnv::kActionDim, ErrorKind::InvalidArgument,
          "pendulum torque is one-dimensional");
  const std::size_t horizon = std::min(max_steps, env.params().max_steps);
  Trajectory out;
  auto phys = env.reset(rng);
  for (std::size_t k = 0; k < horizon; ++k) {
    State state{0, PendulumEnv::observe(phys)};
    auto sampled = policy.sample_action(state, rng);
    check_log_prob(sampled.log_prob, k);
    const double torque =
        policy.is_discrete() ? discrete_torque(env, sampled.action.id, policy.n_actions()) : sampled.action.u[0];
    const auto tr = env.step(phys, torque);
    if (!std::isfinite(tr.next.angle) || !std::isfinite(tr.next.velocity)) {
      throw Error(ErrorKind::NonFinite, "non-finite pendulum state at step " + std::to_string(k));
    }
    out.steps.push_back(Step{std::move(state), std::move(sampled.action), tr.reward, sampled.log_prob, k});
    phys = tr.next;
  }
  out.truncated = true;
  return out;
}

}  // namespace pgbias
