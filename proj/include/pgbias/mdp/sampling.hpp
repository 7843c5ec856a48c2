#pragma once

#include <cstddef>

#include "pgbias/mdp/pendulum.hpp"
#include "pgbias/mdp/tabular_mdp.hpp"
#include "pgbias/mdp/trajectory.hpp"
#include "pgbias/rng.hpp"

namespace pgbias {

class PolicyModel;

inline constexpr std::size_t kDefaultMaxSteps = 200;

/// Rolls out one episode, alternating a ~ pi(.|s) and s' ~ P(.|s, a). Stops at
/// the terminal state or after `max_steps` (then `truncated` is set).
Trajectory sample_episode(const TabularMdp& mdp, const PolicyModel& policy, Rng& rng,
                          std::size_t max_steps = kDefaultMaxSteps);

/// Pendulum rollouts never terminate, so every episode is truncated. Discrete
/// policies select among evenly spaced torques in [-max_torque, max_torque].
Trajectory sample_episode(const PendulumEnv& env, const PolicyModel& policy, Rng& rng,
                          std::size_t max_steps = kDefaultMaxSteps);

/// Torque applied for a discrete action index out of `n_actions` levels.
double discrete_torque(const PendulumEnv& env, std::size_t action, std::size_t n_actions);

}  // namespace pgbias
