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

#include "mdrive/geometry.hpp"

#include <algorithm>
#include <limits>

#include "mdrive/error.hpp"

namespace mdrive {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kSingular: return "singular";
    case ErrorCode::kState: return "state";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kNumeric: return "numeric";
  }
  return "unknown";
}

double normalize_angle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Vec2 rotate_to_local(const Pose2D& frame, Vec2 v) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

Vec2 to_local(const Pose2D& frame, Vec2 p) {
  return rotate_to_local(frame, p - frame.position());
}

Vec2 to_world(const Pose2D& frame, Vec2 p) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {frame.x + c * p.x - s * p.y, frame.y + s * p.x + c * p.y};
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "polyline needs at least 2 points");
  }
  stations_.resize(points_.size());
  stations_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double d = (points_[i] - points_[i - 1]).norm();
    if (!(d > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "polyline has coincident consecutive points");
    }
    stations_[i] = stations_[i - 1] + d;
  }
}

std::size_t Polyline::segment_index(double s) const {
  // Last index i with stations_[i] <= s, limited to the final segment.
  auto it = std::upper_bound(stations_.begin(), stations_.end(), s);
  std::size_t i = it == stations_.begin() ? 0 : static_cast<std::size_t>(it - stations_.begin()) - 1;
  return std::min(i, points_.size() - 2);
}

Vec2 Polyline::point_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t i = segment_index(s);
  const double seg = stations_[i + 1] - stations_[i];
  const double t = (s - stations_[i]) / seg;
  return points_[i] + t * (points_[i + 1] - points_[i]);
}

double Polyline::heading_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t i = segment_index(s);
  const Vec2 d = points_[i + 1] - points_[i];
  return std::atan2(d.y, d.x);
}

Projection Polyline::project(Vec2 p) const {
  return project_window(p, -std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity());
}

Projection Polyline::project_window(Vec2 p, double lo, double hi) const {
  Projection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    if (stations_[i + 1] < lo || stations_[i] > hi) continue;
    const Vec2 a = points_[i];
    const Vec2 ab = points_[i + 1] - a;
    const double seg = stations_[i + 1] - stations_[i];
    double t = std::clamp((p - a).dot(ab) / (seg * seg), 0.0, 1.0);
    const double s = std::clamp(stations_[i] + t * seg, lo, hi);
    t = (s - stations_[i]) / seg;
    const Vec2 q = a + t * ab;
    const Vec2 r = p - q;
    const double d2 = r.dot(r);
    if (d2 < best_d2) {
      best_d2 = d2;
      best.station = s;
      best.point = q;
      best.heading = std::atan2(ab.y, ab.x);
      best.lateral = ab.cross(r) / seg;
    }
  }
  return best;
}

Polyline Polyline::offset(double distance) const {
  std::vector<Vec2> out;
  out.reserve(points_.size());
  const std::size_t n = points_.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 tangent;
    if (i == 0) {
      tangent = points_[1] - points_[0];
    } else if (i + 1 == n) {
      tangent = points_[n - 1] - points_[n - 2];
    } else {
      const Vec2 t0 = points_[i] - points_[i - 1];
      const Vec2 t1 = points_[i + 1] - points_[i];
      tangent = (1.0 / t0.norm()) * t0 + (1.0 / t1.norm()) * t1;
    }
    const double len = tangent.norm();
    const Vec2 normal{-tangent.y / len, tangent.x / len};
    out.push_back(points_[i] + distance * normal);
  }
  return Polyline(std::move(out));
}

Polyline Polyline::concatenated(const Polyline& next) const {
  if (empty()) return next;
  if (next.empty()) return *this;
  std::vector<Vec2> pts(points_.begin(), points_.end());
  auto src = next.points();
  std::size_t start = 0;
  if ((src.front() - pts.back()).norm() < 1e-6) start = 1;
  pts.insert(pts.end(), src.begin() + static_cast<std::ptrdiff_t>(start), src.end());
  return Polyline(std::move(pts));
}

Polyline make_arc(Vec2 center, double radius, double start_angle, double sweep,
                  double max_step) {
  const int n = std::max(2, static_cast<int>(std::ceil(std::abs(sweep) * radius / max_step)) + 1);
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = start_angle + sweep * static_cast<double>(i) / (n - 1);
    pts.push_back(center + radius * unit_from_angle(a));
  }
  return Polyline(std::move(pts));
}

Polyline make_segment(Vec2 from, Vec2 to, double max_step) {
  const double len = (to - from).norm();
  const int n = std::max(2, static_cast<int>(std::ceil(len / max_step)) + 1);
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    pts.push_back(from + t * (to - from));
  }
  return Polyline(std::move(pts));
}

}  // namespace mdrive
