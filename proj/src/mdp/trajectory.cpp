#include "pgbias/mdp/trajectory.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "pgbias/errors.hpp"

namespace pgbias {

double Trajectory::total_reward() const {
  double total = 0.0;
  for (const auto& step : steps) total += step.reward;
  return total;
}

double Trajectory::discounted_return(double gamma) const {
  double total = 0.0;
  for (std::size_t k = steps.size(); k-- > 0;) total = steps[k].reward + gamma * total;
  return total;
}

void validate_trajectory(const Trajectory& trajectory) {
  for (std::size_t k = 0; k < trajectory.steps.size(); ++k) {
    const auto& step = trajectory.steps[k];
    require(step.timestep == k, ErrorKind::InvalidArgument, "trajectory timesteps are not consecutive");
    require(std::isfinite(step.behavior_log_prob), ErrorKind::NonFinite,
            "behavior log-prob is non-finite at step " + std::to_string(k));
  }
}

nlohmann::json to_json(const Trajectory& trajectory) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& step : trajectory.steps) {
    nlohmann::json s = {{"k", step.timestep},
                        {"state", step.state.id},
                        {"action", step.action.id},
                        {"reward", step.reward},
                        {"behavior_log_prob", step.behavior_log_prob}};
    if (!step.state.x.empty()) s["x"] = step.state.x;
    if (!step.action.u.empty()) s["u"] = step.action.u;
    steps.push_back(std::move(s));
  }
  return {{"steps", std::move(steps)}, {"truncated", trajectory.truncated}};
}

Trajectory trajectory_from_json(const nlohmann::json& doc) {
  try {
    Trajectory t;
    t.truncated = doc.at("truncated").get<bool>();
    for (const auto& s : doc.at("steps")) {
      Step step;
      step.timestep = s.at("k").get<std::size_t>();
      step.state.id = s.at("state").get<std::size_t>();
      step.action.id = s.at("action").get<std::size_t>();
      step.reward = s.at("reward").get<double>();
      step.behavior_log_prob = s.at("behavior_log_prob").get<double>();
      if (s.contains("x")) step.state.x = s["x"].get<std::vector<double>>();
      if (s.contains("u")) step.action.u = s["u"].get<std::vector<double>>();
      t.steps.push_back(std::move(step));
    }
    validate_trajectory(t);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed trajectory document: ") + e.what());
  }
}

void write_trajectories_jsonl(std::ostream& out, std::span<const Trajectory> batch) {
  for (const auto& t : batch) out << to_json(t).dump() << '\n';
}

std::vector<Trajectory> read_trajectories_jsonl(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidArgument, std::string("bad trajectory log line: ") + e.what());
    }
    out.push_back(trajectory_from_json(doc));
  }
  return out;
}

}  // namespace pgbias
