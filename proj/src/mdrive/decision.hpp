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

// Factored categorical decision space and its grounding into a planner goal.

#ifndef MDRIVE_DECISION_HPP_
#define MDRIVE_DECISION_HPP_

#include <array>
#include <span>
#include <string>

#include "mdrive/local_map.hpp"
#include "mdrive/mlp.hpp"
#include "mdrive/random.hpp"

namespace mdrive {

enum class Lateral { kChangeLeft = 0, kKeepLane = 1, kChangeRight = 2 };

inline constexpr int kLateralChoices = 3;
inline constexpr int kLongitudinalBins = 4;
inline constexpr int kSpeedBins = 4;
inline constexpr int kDecisionCount = kLateralChoices * kLongitudinalBins * kSpeedBins;
inline constexpr int kPolicyOutputs = kLateralChoices + kLongitudinalBins + kSpeedBins;
inline constexpr double kLongitudinalStep = 10.0;           // meters per bin
inline constexpr double kAllowedSpeed = 40.0 / 3.6;         // m/s

struct Decision {
  Lateral lateral = Lateral::kKeepLane;
  int longitudinal_bin = 0;
  int speed_bin = 0;
  friend bool operator==(const Decision&, const Decision&) = default;
};

/// Dense index in [0, 48): lateral major, speed minor.
int decision_index(const Decision& d);
Decision decision_from_index(int index);
std::string decision_to_string(const Decision& d);

struct GoalState {
  Vec2 point;
  double heading = 0.0;
  double speed = 0.0;
  Lateral lateral = Lateral::kKeepLane;  // after illegal-lane substitution
  friend bool operator==(const GoalState&, const GoalState&) = default;
};

/// Midpoint of the speed basket `bin` over [0, kAllowedSpeed].
double speed_bin_target(int bin);

/// Grounds a decision on the local map. A lateral choice without a legal lane
/// falls back to keeping the current lane.
GoalState decode_decision(const Decision& d, const LocalMap& map);

struct PolicyDistribution {
  std::array<double, kLateralChoices> lateral{};
  std::array<double, kLongitudinalBins> longitudinal{};
  std::array<double, kSpeedBins> speed{};
};

/// Per-head softmax over the 3 + 4 + 4 logits.
PolicyDistribution distribution_from_logits(std::span<const double> logits);

/// Normalizes the observation, runs the policy network and applies the heads.
PolicyDistribution policy_forward(const MlpParams& params, const ObservationVector& obs);

Decision sample_decision(const PolicyDistribution& dist, Rng& rng);
/// Per-head argmax, lowest index on ties.
Decision mode_decision(const PolicyDistribution& dist);

inline constexpr double kProbabilityFloor = 1e-12;

double decision_log_prob(const PolicyDistribution& dist, const Decision& d);
double decision_prob(const PolicyDistribution& dist, const Decision& d);
double decision_entropy(const PolicyDistribution& dist);

}  // namespace mdrive

#endif  // MDRIVE_DECISION_HPP_
