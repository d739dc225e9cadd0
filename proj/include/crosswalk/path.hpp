// Copyright 2026 The occluded-crosswalk Authors
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

#ifndef CROSSWALK__PATH_HPP_
#define CROSSWALK__PATH_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace crosswalk {

/// Inertial position. North/East in metres.
struct NorthEast {
  double north = 0.0;
  double east = 0.0;
};

/// Heading convention used throughout: psi = 0 points north and grows
/// counter-clockwise, so a left turn has r > 0 and moves the car west (-east).
inline double heading_of(double d_north, double d_east) { return std::atan2(-d_east, d_north); }

/// Arc-length parameterised polyline with uniform sample spacing (the final
/// segment may be shorter).
class Path {
 public:
  Path() = default;

  /// Resamples an arbitrary polyline at `spacing` metres of arc length.
  static Path from_polyline(const std::vector<NorthEast>& polyline, double spacing = 0.25) {
    if (polyline.size() < 2) throw std::invalid_argument("path needs at least two points");
    if (!(spacing > 0.0)) throw std::invalid_argument("path spacing must be positive");
    std::vector<double> arc(polyline.size(), 0.0);
    for (std::size_t i = 1; i < polyline.size(); ++i) {
      arc[i] = arc[i - 1] + std::hypot(polyline[i].north - polyline[i - 1].north,
                                       polyline[i].east - polyline[i - 1].east);
    }
    const double total = arc.back();
    if (!(total > 0.0)) throw std::invalid_argument("path has zero length");

    Path path;
    path.spacing_ = spacing;
    std::size_t seg = 0;
    auto sample = [&](double s) {
      while (seg + 2 < arc.size() && arc[seg + 1] < s) ++seg;
      const double len = arc[seg + 1] - arc[seg];
      const double t = len > 0.0 ? std::clamp((s - arc[seg]) / len, 0.0, 1.0) : 0.0;
      return NorthEast{polyline[seg].north + t * (polyline[seg + 1].north - polyline[seg].north),
                       polyline[seg].east + t * (polyline[seg + 1].east - polyline[seg].east)};
    };
    const auto n_full = static_cast<std::size_t>(std::floor(total / spacing + 1e-9));
    for (std::size_t k = 0; k <= n_full; ++k) path.points_.push_back(sample(static_cast<double>(k) * spacing));
    if (total - static_cast<double>(n_full) * spacing > 1e-9) path.points_.push_back(polyline.back());
    path.rebuild_arc();
    return path;
  }

  /// Straight path heading `psi` from `start`.
  static Path straight(double length, double spacing = 0.25, NorthEast start = {}, double psi = 0.0) {
    return from_polyline({start, {start.north + length * std::cos(psi), start.east - length * std::sin(psi)}}, spacing);
  }

  const std::vector<NorthEast>& points() const { return points_; }
  const std::vector<double>& arc_lengths() const { return arc_; }
  double length() const { return arc_.empty() ? 0.0 : arc_.back(); }
  double spacing() const { return spacing_; }
  std::size_t size() const { return points_.size(); }

  /// Index of the segment containing arc length s (clamped to the path).
  std::size_t segment_at(double s) const {
    if (points_.size() < 2) throw std::logic_error("empty path");
    const auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
    const auto idx = static_cast<std::size_t>(std::distance(arc_.begin(), it));
    return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, points_.size() - 2);
  }

  NorthEast point_at(double s) const {
    s = std::clamp(s, 0.0, length());
    const auto i = segment_at(s);
    const double len = arc_[i + 1] - arc_[i];
    const double t = len > 0.0 ? (s - arc_[i]) / len : 0.0;
    return {points_[i].north + t * (points_[i + 1].north - points_[i].north),
            points_[i].east + t * (points_[i + 1].east - points_[i].east)};
  }

  double heading_at(double s) const {
    const auto i = segment_at(std::clamp(s, 0.0, length()));
    return heading_of(points_[i + 1].north - points_[i].north, points_[i + 1].east - points_[i].east);
  }

 private:
  void rebuild_arc() {
    arc_.assign(points_.size(), 0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      arc_[i] = arc_[i - 1] + std::hypot(points_[i].north - points_[i - 1].north, points_[i].east - points_[i - 1].east);
    }
  }

  std::vector<NorthEast> points_;
  std::vector<double> arc_;
  double spacing_ = 0.25;
};

/// Result of projecting a point onto a path. `clamped` is set when the
/// nearest point is an end of the path and the query lies beyond it.
struct PathProjection {
  double s = 0.0;
  double e = 0.0;
  bool clamped = false;
};

/// Nearest-point projection onto the piecewise-linear path. e is positive to
/// the left of the direction of travel.
inline PathProjection path_project(double north, double east, const Path& path) {
  const auto& pts = path.points();
  const auto& arc = path.arc_lengths();
  if (pts.size() < 2) throw std::invalid_argument("path needs at least two points");
  if (!std::isfinite(north) || !std::isfinite(east)) throw std::domain_error("path_project: non-finite point");

  double best_d2 = std::numeric_limits<double>::infinity();
  PathProjection best;
  const std::size_t last = pts.size() - 2;
  for (std::size_t i = 0; i <= last; ++i) {
    const double tn = pts[i + 1].north - pts[i].north;
    const double te = pts[i + 1].east - pts[i].east;
    const double len2 = tn * tn + te * te;
    const double rn = north - pts[i].north;
    const double re = east - pts[i].east;
    const double raw_t = len2 > 0.0 ? (rn * tn + re * te) / len2 : 0.0;
    const double t = std::clamp(raw_t, 0.0, 1.0);
    const double dn = rn - t * tn;
    const double de = re - t * te;
    const double d2 = dn * dn + de * de;
    if (d2 < best_d2) {
      best_d2 = d2;
      const double len = std::sqrt(len2);
      best.s = arc[i] + t * len;
      // left normal of (tn, te) in north/east coordinates is (te, -tn)
      best.e = len > 0.0 ? (rn * te - re * tn) / len : 0.0;
      best.clamped = (i == 0 && raw_t < 0.0) || (i == last && raw_t > 1.0);
    }
  }
  return best;
}

}  // namespace crosswalk

#endif  // CROSSWALK__PATH_HPP_
