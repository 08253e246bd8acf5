// Copyright 2026 The mdrive Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Discrete-time lateral and longitudinal PID tracking of a planned trajectory.

#ifndef MDRIVE_CONTROLLER_HPP_
#define MDRIVE_CONTROLLER_HPP_

#include "mdrive/planner.hpp"
#include "mdrive/world.hpp"

namespace mdrive {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double cap = 1.0;
  friend bool operator==(const PidGains&, const PidGains&) = default;
};

inline constexpr PidGains kLateralGains{0.8, 0.0, 0.2, kSteerCap};
inline constexpr PidGains kLongitudinalGains{0.5, 0.05, 0.0, 1.0};
inline constexpr double kHeadingErrorWeight = 0.5;

struct PidState {
  PidGains gains;
  double integral = 0.0;
  double previous_error = 0.0;
  bool has_previous = false;
  friend bool operator==(const PidState&, const PidState&) = default;
};

inline PidState make_pid(const PidGains& gains) { return PidState{gains, 0.0, 0.0, false}; }

/// Returns the clamped output and updates the integral (clamped to
/// +-cap / max(ki, eps)) and the error history. The derivative term is zero on
/// the first call.
double pid_step(PidState& state, double error, double dt);

/// Cross-track offset of the reference seen from the ego (positive when the
/// reference lies to the left) plus 0.5 times the heading error.
double lateral_error(const VehicleState& ego, const Vec2& ref_point, double ref_heading);
double longitudinal_error(const VehicleState& ego, double ref_speed);

struct TrackingState {
  PidState lateral = make_pid(kLateralGains);
  PidState longitudinal = make_pid(kLongitudinalGains);
  friend bool operator==(const TrackingState&, const TrackingState&) = default;
};

/// Samples the reference at t (held at the final point past the horizon) and
/// steps both PIDs. The longitudinal command is additionally clamped to
/// [lon_min, lon_max].
ControlAction track(const PlannedTrajectory& traj, const VehicleState& ego, TrackingState& pids,
                    double t, double dt, double lon_min = -1.0, double lon_max = 1.0);

}  // namespace mdrive

#endif  // MDRIVE_CONTROLLER_HPP_
