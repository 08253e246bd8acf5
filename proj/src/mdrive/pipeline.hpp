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

// The decision-to-control map g_s: local map, decoding, safety cap, planning
// and PID tracking, plus the bookkeeping that lets any emitted control be
// recomputed from its decision.

#ifndef MDRIVE_PIPELINE_HPP_
#define MDRIVE_PIPELINE_HPP_

#include <memory>
#include <optional>
#include <string>

#include "mdrive/controller.hpp"
#include "mdrive/decision.hpp"
#include "mdrive/planner.hpp"
#include "mdrive/world.hpp"

namespace mdrive {

struct DriverOptions {
  PidGains lateral = kLateralGains;
  PidGains longitudinal = kLongitudinalGains;
  int decision_period = 10;  // control ticks per decision
  double lon_min = -1.0;
  double lon_max = 1.0;
  bool safety_cap = true;
};

/// Longitudinal limits that keep |a| <= 2 m/s^2.
DriverOptions comfort_options();

/// Used when the requested decision cannot be planned.
inline constexpr Decision kFallbackDecision{Lateral::kKeepLane, kLongitudinalBins - 1, 0};

struct PlanResult {
  Decision decision;  // as planned, after any fallback substitution
  GoalState goal;
  PlannedTrajectory trajectory;
  bool substituted = false;
};

/// Deterministic first half of g_s. Throws kState when the ego is off route
/// and kInfeasible when neither the decision nor the fallback can be planned.
PlanResult plan_for_decision(const World& world, const Decision& d, const DriverOptions& options);

/// Inputs that determine one control of a held plan.
struct ReplayContext {
  std::shared_ptr<const World> decision_world;
  Decision decision;
  VehicleState ego;
  TrackingState pids;  // before the control was computed
  double plan_time = 0.0;
  double dt = kDefaultDt;
};

ControlAction replay_control(const ReplayContext& ctx, const DriverOptions& options);

/// Holds the current plan and PID state between decisions. PID state carries
/// over across plans.
class ModularDriver {
 public:
  explicit ModularDriver(DriverOptions options = {});

  void reset();
  const DriverOptions& options() const { return options_; }

  /// True without a plan, after `decision_period` ticks, or once the plan's
  /// horizon has elapsed.
  bool needs_decision() const;
  void set_decision(const World& world, const Decision& d);
  /// Tracks the held plan for one tick. When `ctx` is given it receives the
  /// replay inputs of this control.
  ControlAction control(const World& world, ReplayContext* ctx = nullptr);

  const std::optional<PlanResult>& plan() const { return plan_; }
  int ticks_since_decision() const { return ticks_; }

 private:
  DriverOptions options_;
  TrackingState pids_;
  std::optional<PlanResult> plan_;
  Decision requested_;
  std::shared_ptr<const World> decision_world_;
  double plan_time_ = 0.0;
  int ticks_ = 0;
};

/// Uniform interface for everything that can drive the ego.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual void reset(const World& world) = 0;
  virtual ControlAction act(const World& world) = 0;
  virtual std::string name() const = 0;
};

}  // namespace mdrive

#endif  // MDRIVE_PIPELINE_HPP_
