#include "pgbias/mdp/pendulum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pgbias {

double PendulumEnv::wrap_angle(double angle) {
  constexpr double pi = std::numbers::pi;
  double wrapped = std::fmod(angle + pi, 2.0 * pi);
  if (wrapped < 0.0) wrapped += 2.0 * pi;
  return wrapped - pi;
}

PendulumEnv::PhysState PendulumEnv::reset(Rng& rng) const {
  PhysState s;
  s.angle = rng.uniform(-params_.init_angle, params_.init_angle);
  s.velocity = rng.uniform(-params_.init_velocity, params_.init_velocity);
  return s;
}

PendulumEnv::Transition PendulumEnv::step(const PhysState& state, double torque) const {
  const auto& p = params_;
  const double u = std::clamp(torque, -p.max_torque, p.max_torque);
  const double cost = state.angle * state.angle + 0.1 * state.velocity * state.velocity + 0.001 * u * u;
  double velocity = state.velocity + (3.0 * p.gravity / (2.0 * p.length) * std::sin(state.angle) +
                                      3.0 / (p.mass * p.length * p.length) * u) * p.dt;
  velocity = std::clamp(velocity, -p.max_speed, p.max_speed);
  const double angle = wrap_angle(state.angle + velocity * p.dt);
  return {{angle, velocity}, -cost};
}

std::vector<double> PendulumEnv::observe(const PhysState& state) {
  return {std::cos(state.angle), std::sin(state.angle), state.velocity};
}

}  // namespace pgbias
