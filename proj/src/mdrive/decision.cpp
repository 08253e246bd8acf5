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

#include "mdrive/decision.hpp"

#include <algorithm>
#include <cmath>

#include "mdrive/error.hpp"

namespace mdrive {
namespace {

template <std::size_t N>
std::array<double, N> softmax(std::span<const double> logits) {
  std::array<double, N> out{};
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = std::exp(logits[i] - max);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

template <std::size_t N>
int draw(const std::array<double, N>& p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding left u above the final partial sum; take the last nonzero entry.
  for (std::size_t i = N; i-- > 0;) {
    if (p[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

template <std::size_t N>
int argmax(const std::array<double, N>& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

template <std::size_t N>
double entropy(const std::array<double, N>& p) {
  double h = 0.0;
  for (double q : p) {
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

void check_decision(const Decision& d) {
  const int lat = static_cast<int>(d.lateral);
  if (lat < 0 || lat >= kLateralChoices || d.longitudinal_bin < 0 ||
      d.longitudinal_bin >= kLongitudinalBins || d.speed_bin < 0 || d.speed_bin >= kSpeedBins) {
    throw Error(ErrorCode::kInvalidArgument, "decision out of range");
  }
}

}  // namespace

int decision_index(const Decision& d) {
  check_decision(d);
  return static_cast<int>(d.lateral) * kLongitudinalBins * kSpeedBins +
         d.longitudinal_bin * kSpeedBins + d.speed_bin;
}

Decision decision_from_index(int index) {
  if (index < 0 || index >= kDecisionCount) {
    throw Error(ErrorCode::kInvalidArgument, "decision index out of range");
  }
  Decision d;
  d.lateral = static_cast<Lateral>(index / (kLongitudinalBins * kSpeedBins));
  d.longitudinal_bin = (index / kSpeedBins) % kLongitudinalBins;
  d.speed_bin = index % kSpeedBins;
  return d;
}

std::string decision_to_string(const Decision& d) {
  static constexpr const char* kNames[] = {"left", "keep", "right"};
  return std::string(kNames[static_cast<int>(d.lateral)]) + "/lon" +
         std::to_string(d.longitudinal_bin) + "/spd" + std::to_string(d.speed_bin);
}

double speed_bin_target(int bin) {
  if (bin < 0 || bin >= kSpeedBins) throw Error(ErrorCode::kInvalidArgument, "speed bin out of range");
  return (bin + 0.5) * kAllowedSpeed / kSpeedBins;
}

GoalState decode_decision(const Decision& d, const LocalMap& map) {
  check_decision(d);
  Lateral lateral = d.lateral;
  if (!map.target_lanes[static_cast<std::size_t>(lateral)]) lateral = Lateral::kKeepLane;
  const auto& chain = map.target_lanes[static_cast<std::size_t>(lateral)];
  if (!chain) throw Error(ErrorCode::kState, "local map has no current lane");

  const double station = chain->centerline.project(map.ego_pose.position()).station +
                         kLongitudinalStep * (d.longitudinal_bin + 1);
  GoalState goal;
  goal.point = chain->centerline.point_at(station);
  goal.heading = chain->centerline.heading_at(station);
  goal.speed = speed_bin_target(d.speed_bin);
  goal.lateral = lateral;
  return goal;
}

PolicyDistribution distribution_from_logits(std::span<const double> logits) {
  if (logits.size() != static_cast<std::size_t>(kPolicyOutputs)) {
    throw Error(ErrorCode::kDimensionMismatch, "policy expects 11 logits");
  }
  PolicyDistribution dist;
  dist.lateral = softmax<kLateralChoices>(logits.subspan(0, kLateralChoices));
  dist.longitudinal = softmax<kLongitudinalBins>(logits.subspan(kLateralChoices, kLongitudinalBins));
  dist.speed = softmax<kSpeedBins>(logits.subspan(kLateralChoices + kLongitudinalBins, kSpeedBins));
  return dist;
}

PolicyDistribution policy_forward(const MlpParams& params, const ObservationVector& obs) {
  if (params.input_dim() != kObservationDim || params.output_dim() != kPolicyOutputs) {
    throw Error(ErrorCode::kDimensionMismatch, "policy network must map 82 inputs to 11 logits");
  }
  const std::vector<double> x = normalize_observation(obs);
  return distribution_from_logits(mlp_predict(params, x));
}

Decision sample_decision(const PolicyDistribution& dist, Rng& rng) {
  Decision d;
  d.lateral = static_cast<Lateral>(draw(dist.lateral, rng));
  d.longitudinal_bin = draw(dist.longitudinal, rng);
  d.speed_bin = draw(dist.speed, rng);
  return d;
}

Decision mode_decision(const PolicyDistribution& dist) {
  Decision d;
  d.lateral = static_cast<Lateral>(argmax(dist.lateral));
  d.longitudinal_bin = argmax(dist.longitudinal);
  d.speed_bin = argmax(dist.speed);
  return d;
}

double decision_log_prob(const PolicyDistribution& dist, const Decision& d) {
  check_decision(d);
  return std::log(std::max(dist.lateral[static_cast<std::size_t>(d.lateral)], kProbabilityFloor)) +
         std::log(std::max(dist.longitudinal[static_cast<std::size_t>(d.longitudinal_bin)], kProbabilityFloor)) +
         std::log(std::max(dist.speed[static_cast<std::size_t>(d.speed_bin)], kProbabilityFloor));
}

double decision_prob(const PolicyDistribution& dist, const Decision& d) {
  check_decision(d);
  return dist.lateral[static_cast<std::size_t>(d.lateral)] *
         dist.longitudinal[static_cast<std::size_t>(d.longitudinal_bin)] *
         dist.speed[static_cast<std::size_t>(d.speed_bin)];
}

double decision_entropy(const PolicyDistribution& dist) {
  return entropy(dist.lateral) + entropy(dist.longitudinal) + entropy(dist.speed);
}

}  // namespace mdrive
