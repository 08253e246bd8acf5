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

// Rule-based decision maker: a small finite state machine over RSS-style
// longitudinal safe distances, and the scripted expert built on it.

#ifndef MDRIVE_RULES_HPP_
#define MDRIVE_RULES_HPP_

#include <array>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "mdrive/decision.hpp"
#include "mdrive/local_map.hpp"
#include "mdrive/pipeline.hpp"

namespace mdrive {

struct RssParams {
  double response_time = 0.5;
  double max_accel = 3.0;
  double min_brake = 4.0;
  double max_brake = 8.0;
  void validate() const;
};

/// Minimum bumper gap a rear vehicle must keep to a front vehicle.
double rss_safe_distance(double v_rear, double v_front, const RssParams& p = {});

enum class FsmMode { kFollow, kLeftPrepare, kLeftExecute, kRightPrepare, kRightExecute, kMerge };
inline constexpr int kFsmModeCount = 6;
std::string_view fsm_mode_name(FsmMode mode);

struct FsmState {
  FsmMode mode = FsmMode::kFollow;
  int entry_tick = 0;
  int entry_lane = -1;      // lane occupied when the current mode was entered
  bool return_right = false;  // an overtake is pending its return change
  friend bool operator==(const FsmState&, const FsmState&) = default;
};

/// Static transition table; self-loops are always allowed.
bool fsm_transition_allowed(FsmMode from, FsmMode to);
/// Modes reachable from kFollow through the table.
std::vector<FsmMode> fsm_reachable_modes();

/// Nearest vehicle in front of or behind the ego along one lane chain.
struct LaneOccupant {
  double gap = 0.0;    // bumper-to-bumper, along the lane
  double speed = 0.0;  // velocity component along the lane
};

struct LaneTraffic {
  std::optional<LaneOccupant> front;
  std::optional<LaneOccupant> rear;
};

LaneTraffic lane_traffic(const LocalMap& map, const LaneChain& chain);

/// What the rule maker saw about the lead vehicle when it chose.
struct RssRecord {
  bool has_lead = false;
  double gap = 0.0;
  double ego_speed = 0.0;
  double lead_speed = 0.0;
  double chosen_speed = 0.0;      // target of the selected bin
  bool any_bin_safe = true;       // some bin satisfies the gap
};

struct RuleOutput {
  Decision decision;
  FsmState state;
  RssRecord rss;
};

/// Follow: fastest speed bin whose target keeps the lead gap at least the
/// RSS distance. Lane changes are taken only when both gaps in the target
/// lane exceed their RSS distances.
RuleOutput rule_based_decision(const LocalMap& map, const FsmState& fsm, int tick, const RssParams& p = {});

/// Rule maker plus the shared planner and controller.
class RuleAgent : public Agent {
 public:
  explicit RuleAgent(DriverOptions options = {}, RssParams rss = {});
  void reset(const World& world) override;
  ControlAction act(const World& world) override;
  std::string name() const override { return "rule"; }

  const std::vector<RssRecord>& rss_log() const { return rss_log_; }
  const std::vector<std::pair<int, FsmMode>>& mode_log() const { return mode_log_; }
  const ModularDriver& driver() const { return driver_; }
  const FsmState& fsm() const { return fsm_; }

 private:
  ModularDriver driver_;
  RssParams rss_;
  FsmState fsm_;
  std::vector<RssRecord> rss_log_;
  std::vector<std::pair<int, FsmMode>> mode_log_;
};

/// The rule agent under comfort limits on the longitudinal command.
class ScriptedExpert : public RuleAgent {
 public:
  ScriptedExpert() : RuleAgent(comfort_options()) {}
  std::string name() const override { return "expert"; }
};

}  // namespace mdrive

#endif  // MDRIVE_RULES_HPP_
