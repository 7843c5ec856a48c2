#pragma once

#include <cstddef>
#include <vector>

#include "pgbias/rng.hpp"

namespace pgbias {

/// Classical torque-limited pendulum swing-up. Angle 0 is upright. The
/// dynamics are deterministic; only the initial state is random.
class PendulumEnv {
 public:
  struct Params {
    double gravity = 10.0;
    double mass = 1.0;
    double length = 1.0;
    double dt = 0.05;
    double max_torque = 2.0;
    double max_speed = 8.0;
    std::size_t max_steps = 200;
    /// Reset draws angle ~ U[-init_angle, init_angle], velocity ~
    /// U[-init_velocity, init_velocity].
    double init_angle = 3.141592653589793;
    double init_velocity = 1.0;
  };

  struct PhysState {
    double angle = 0.0;  ///< radians, wrapped to [-pi, pi]
    double velocity = 0.0;
  };

  struct Transition {
    PhysState next;
    double reward;
  };

  PendulumEnv() = default;
  explicit PendulumEnv(Params params) : params_(params) {}

  const Params& params() const { return params_; }
  static constexpr std::size_t kObservationDim = 3;
  static constexpr std::size_t kActionDim = 1;

  /// Uniform angle and velocity inside the configured reset box.
  PhysState reset(Rng& rng) const;
  /// The torque is clipped to +-max_torque before it acts.
  Transition step(const PhysState& state, double torque) const;
  /// (cos angle, sin angle, velocity).
  static std::vector<double> observe(const PhysState& state);

  static double wrap_angle(double angle);

 private:
  Params params_;
};

}  // namespace pgbias
