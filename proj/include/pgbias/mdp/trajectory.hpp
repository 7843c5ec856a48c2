#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace pgbias {

/// A state as seen by a policy: tabular environments fill `id`, continuous
/// ones fill the observation vector `x`.
struct State {
  std::size_t id = 0;
  std::vector<double> x;

  friend bool operator==(const State&, const State&) = default;
};

/// Discrete actions use `id`; continuous actions use the vector `u`.
struct Action {
  std::size_t id = 0;
  std::vector<double> u;

  friend bool operator==(const Action&, const Action&) = default;
};

struct Step {
  State state;
  Action action;
  double reward = 0.0;
  double behavior_log_prob = 0.0;
  std::size_t timestep = 0;
};

struct Trajectory {
  std::vector<Step> steps;
  bool truncated = false;

  std::size_t size() const { return steps.size(); }
  double total_reward() const;
  double discounted_return(double gamma) const;
};

/// Throws if timesteps are not 0..len-1 or a behavior log-prob is non-finite.
void validate_trajectory(const Trajectory& trajectory);

nlohmann::json to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const nlohmann::json& doc);

/// One JSON document per line.
void write_trajectories_jsonl(std::ostream& out, std::span<const Trajectory> batch);
std::vector<Trajectory> read_trajectories_jsonl(std::istream& in);

}  // namespace pgbias
