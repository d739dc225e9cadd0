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

#ifndef CROSSWALK__OCCLUSION_WORLD_HPP_
#define CROSSWALK__OCCLUSION_WORLD_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crosswalk/config.hpp"
#include "crosswalk/path.hpp"

namespace crosswalk {

/// Road frame: origin at the start of the path, x along the road (north),
/// y to the left (west). north = x, east = -y.
struct RoadPoint {
  double x = 0.0;
  double y = 0.0;
};

inline RoadPoint to_road(const NorthEast& p) { return {p.north, -p.east}; }
inline NorthEast to_north_east(const RoadPoint& p) { return {p.x, -p.y}; }

/// Oriented rectangle in the road frame; heading is measured counter-clockwise
/// from the road x axis, length runs along the heading.
/// Boundary slack for footprint tests: points on an edge up to rounding count
/// as inside.
inline constexpr double kGeometryEps = 1e-9;

struct OrientedRect {
  double cx = 0.0;
  double cy = 0.0;
  double length = 0.0;
  double width = 0.0;
  double heading = 0.0;

  RoadPoint to_local(RoadPoint p) const {
    const double dx = p.x - cx, dy = p.y - cy;
    const double c = std::cos(heading), s = std::sin(heading);
    return {c * dx + s * dy, -s * dx + c * dy};
  }
  bool contains(RoadPoint p) const {
    const auto q = to_local(p);
    return std::abs(q.x) <= 0.5 * length + kGeometryEps && std::abs(q.y) <= 0.5 * width + kGeometryEps;
  }
  std::array<RoadPoint, 4> corners() const {
    const double c = std::cos(heading), s = std::sin(heading);
    const double hl = 0.5 * length, hw = 0.5 * width;
    std::array<RoadPoint, 4> out;
    const double sx[4] = {hl, hl, -hl, -hl};
    const double sy[4] = {hw, -hw, -hw, hw};
    for (int k = 0; k < 4; ++k) out[k] = {cx + c * sx[k] - s * sy[k], cy + s * sx[k] + c * sy[k]};
    return out;
  }
  double min_x() const {
    double m = cx;
    for (const auto& p : corners()) m = std::min(m, p.x);
    return m;
  }
  double max_x() const {
    double m = cx;
    for (const auto& p : corners()) m = std::max(m, p.x);
    return m;
  }
  double max_y() const {
    double m = cy;
    for (const auto& p : corners()) m = std::max(m, p.y);
    return m;
  }
};

/// Closed segment/rectangle intersection by slab clipping in the rectangle
/// frame. Touching an edge or corner counts as intersecting.
inline bool segment_intersects_rect(RoadPoint a, RoadPoint b, const OrientedRect& rect) {
  const auto p = rect.to_local(a);
  const auto q = rect.to_local(b);
  const double d[2] = {q.x - p.x, q.y - p.y};
  const double o[2] = {p.x, p.y};
  const double half[2] = {0.5 * rect.length + kGeometryEps, 0.5 * rect.width + kGeometryEps};
  double t0 = 0.0, t1 = 1.0;
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (o[k] < -half[k] || o[k] > half[k]) return false;
      continue;
    }
    double ta = (-half[k] - o[k]) / d[k];
    double tb = (half[k] - o[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

struct Crosswalk {
  double start_x = 40.0;  ///< the stop line; the band is [start_x, start_x + width]
  double width = 3.0;
};

struct Pedestrian {
  double x = 0.0;
  double y = 0.0;
  bool present = false;
};

struct RoadBounds {
  double right_y = -3.0;  ///< right curb
  double left_y = 5.0;    ///< left curb
  double lane_width = 3.5;
  bool offroad_occupied = false;  ///< label cells beyond the curbs occupied (not drivable)
};

struct Scene {
  std::vector<OrientedRect> occluders;
  Crosswalk crosswalk;
  Pedestrian pedestrian;
  RoadBounds road;
  double path_length = 60.0;

  void validate() const {
    if (!(crosswalk.start_x >= 0.0 && crosswalk.start_x <= path_length)) {
      throw std::invalid_argument("crosswalk must lie within the path extent");
    }
    if (!(crosswalk.width > 0.0)) throw std::invalid_argument("crosswalk width must be positive");
    if (!(road.left_y > road.right_y)) throw std::invalid_argument("road bounds are inverted");
    for (const auto& o : occluders) {
      if (!(o.length > 0.0 && o.width > 0.0)) throw std::invalid_argument("occluder dimensions must be positive");
    }
    if (pedestrian.present) {
      const bool in_band = pedestrian.x >= crosswalk.start_x && pedestrian.x <= crosswalk.start_x + crosswalk.width &&
                           pedestrian.y >= road.right_y && pedestrian.y <= road.left_y;
      if (!in_band) throw std::invalid_argument("pedestrian must stand inside the crosswalk band");
    }
  }
};

/// Scene file keys (road frame, metres, degrees for headings):
///   occluder = cx cy length width [heading_deg]   (repeatable)
///   crosswalk_start_m, crosswalk_width_m
///   pedestrian = x y            (omit or pedestrian_present = false for none)
///   road_right_y_m, road_left_y_m, lane_width_m, path_length_m
///   offroad_occupied          (true: cells beyond the curbs are occupied)
inline Scene scene_from_config(const KeyValueConfig& cfg) {
  Scene scene;
  for (const auto& v : cfg.number_lists("occluder")) {
    if (v.size() != 4 && v.size() != 5) {
      throw ConfigError(cfg.source() + ": occluder needs 'cx cy length width [heading_deg]'");
    }
    constexpr double kDeg = 3.14159265358979323846 / 180.0;
    scene.occluders.push_back({v[0], v[1], v[2], v[3], v.size() == 5 ? v[4] * kDeg : 0.0});
  }
  scene.crosswalk.start_x = cfg.number_or("crosswalk_start_m", scene.crosswalk.start_x);
  scene.crosswalk.width = cfg.number_or("crosswalk_width_m", scene.crosswalk.width);
  scene.road.right_y = cfg.number_or("road_right_y_m", scene.road.right_y);
  scene.road.left_y = cfg.number_or("road_left_y_m", scene.road.left_y);
  scene.road.lane_width = cfg.number_or("lane_width_m", scene.road.lane_width);
  scene.road.offroad_occupied = cfg.boolean_or("offroad_occupied", scene.road.offroad_occupied);
  scene.path_length = cfg.number_or("path_length_m", scene.path_length);
  if (cfg.has("pedestrian")) {
    const auto v = cfg.number_lists("pedestrian").back();
    if (v.size() != 2) throw ConfigError(cfg.source() + ": pedestrian needs 'x y'");
    scene.pedestrian = {v[0], v[1], cfg.boolean_or("pedestrian_present", true)};
  }
  scene.validate();
  return scene;
}

inline constexpr int kGridRows = 210;        // forward cells
inline constexpr int kGridCols = 48;         // lateral cells
inline constexpr int kEgoCol = 24;
inline constexpr double kCellsPerMeter = 3.0;
inline constexpr int kGridCells = kGridRows * kGridCols;

enum class Cell : std::uint8_t { kFree = 0, kOccupied = 1, kUnobservable = 2 };

/// Ego pose in the road frame. The grid ignores heading (it is road aligned).
struct EgoPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

inline EgoPose ego_pose_from(double north, double east, double psi) { return {north, -east, psi}; }

/// 210 x 48 road-aligned ternary grid. Row i covers x in
/// [ego.x + i/3, ego.x + (i+1)/3); column j covers y in
/// [ego.y + (j-24)/3, ego.y + (j-23)/3), so the ego sits in cell (0, 24) and
/// column index grows to the left.
class OccupancyGrid {
 public:
  OccupancyGrid() : cells_(kGridCells, Cell::kFree) {}
  explicit OccupancyGrid(EgoPose ego) : cells_(kGridCells, Cell::kFree), ego_(ego) {}

  static constexpr int rows() { return kGridRows; }
  static constexpr int cols() { return kGridCols; }

  Cell at(int row, int col) const { return cells_.at(static_cast<std::size_t>(row * kGridCols + col)); }
  void set(int row, int col, Cell c) { cells_.at(static_cast<std::size_t>(row * kGridCols + col)) = c; }
  const std::vector<Cell>& cells() const { return cells_; }
  const EgoPose& ego() const { return ego_; }

  RoadPoint cell_center(int row, int col) const {
    return {ego_.x + (row + 0.5) / kCellsPerMeter, ego_.y + (col - kEgoCol + 0.5) / kCellsPerMeter};
  }

  /// Cell containing p, if p lies inside the grid window.
  std::optional<std::array<int, 2>> cell_of(RoadPoint p) const {
    const double fr = std::floor((p.x - ego_.x) * kCellsPerMeter);
    const double fc = std::floor((p.y - ego_.y) * kCellsPerMeter) + kEgoCol;
    if (fr < 0 || fr >= kGridRows || fc < 0 || fc >= kGridCols) return std::nullopt;
    return std::array<int, 2>{static_cast<int>(fr), static_cast<int>(fc)};
  }

  int count(Cell c) const { return static_cast<int>(std::count(cells_.begin(), cells_.end(), c)); }

  friend bool operator==(const OccupancyGrid& a, const OccupancyGrid& b) { return a.cells_ == b.cells_; }

 private:
  std::vector<Cell> cells_;
  EgoPose ego_;
};

inline bool in_sensor_window(const EgoPose& ego, RoadPoint p) { return OccupancyGrid(ego).cell_of(p).has_value(); }

inline bool line_of_sight(const Scene& scene, RoadPoint from, RoadPoint to) {
  for (const auto& o : scene.occluders) {
    if (segment_intersects_rect(from, to, o)) return false;
  }
  return true;
}

/// True iff a pedestrian is present, inside the forward window and not
/// hidden behind any occluder.
inline bool pedestrian_visible(const Scene& scene, const EgoPose& ego) {
  if (!scene.pedestrian.present) return false;
  const RoadPoint ped{scene.pedestrian.x, scene.pedestrian.y};
  return in_sensor_window(ego, ped) && line_of_sight(scene, {ego.x, ego.y}, ped);
}

/// Ray casts one segment per cell centre. Cells whose centre lies inside an
/// occluder (or beyond the curbs, when the scene asks for it) are occupied,
/// cells whose ray touches an occluder are unobservable. A visible
/// pedestrian marks its own cell occupied.
inline OccupancyGrid build_grid(const Scene& scene, const EgoPose& ego) {
  if (!std::isfinite(ego.x) || !std::isfinite(ego.y)) throw std::domain_error("build_grid: non-finite ego pose");
  OccupancyGrid grid(ego);
  const RoadPoint origin{ego.x, ego.y};

  // occluders entirely behind the window or beyond its far edge cannot
  // touch any ray; skip them
  std::vector<const OrientedRect*> relevant;
  const double x_max = ego.x + kGridRows / kCellsPerMeter;
  for (const auto& o : scene.occluders) {
    if (o.max_x() < ego.x || o.min_x() > x_max) continue;
    relevant.push_back(&o);
  }
  const bool mask = scene.road.offroad_occupied;
  if (!relevant.empty() || mask) {
    for (int i = 0; i < kGridRows; ++i) {
      for (int j = 0; j < kGridCols; ++j) {
        const auto c = grid.cell_center(i, j);
        Cell label = Cell::kFree;
        if (mask && (c.y < scene.road.right_y || c.y > scene.road.left_y)) {
          grid.set(i, j, Cell::kOccupied);
          continue;
        }
        for (const auto* o : relevant) {
          if (o->contains(c)) {
            label = Cell::kOccupied;
            break;
          }
          if (segment_intersects_rect(origin, c, *o)) label = Cell::kUnobservable;
        }
        grid.set(i, j, label);
      }
    }
  }
  if (pedestrian_visible(scene, ego)) {
    const auto rc = grid.cell_of({scene.pedestrian.x, scene.pedestrian.y});
    grid.set((*rc)[0], (*rc)[1], Cell::kOccupied);
  }
  return grid;
}

inline int count_unobservable(const OccupancyGrid& grid) { return grid.count(Cell::kUnobservable); }

inline constexpr int kCountBins = 10;
inline constexpr int kCountBinWidth = 180;  // 10 bins over [0, 1800)

/// Half-open bins [k*180, (k+1)*180); everything at or above 1620 lands in
/// bin 9, including counts beyond 1800.
inline int bin_observation(int count) {
  if (count < 0) throw std::invalid_argument("bin_observation: negative count");
  return std::min(kCountBins - 1, count / kCountBinWidth);
}

struct SensorObservation {
  int unobservable_count = 0;
  int count_bin = 0;
  bool pedestrian_detected = false;
};

inline SensorObservation sense(const Scene& scene, const EgoPose& ego, const OccupancyGrid& grid) {
  const int count = count_unobservable(grid);
  return {count, bin_observation(count), pedestrian_visible(scene, ego)};
}

/// 0 = free, 1 = occupied, 2 = unobservable; one line per forward row,
/// 48 comma-separated values, row 0 nearest the ego.
inline void write_grid_csv(std::ostream& out, const OccupancyGrid& grid) {
  for (int i = 0; i < kGridRows; ++i) {
    for (int j = 0; j < kGridCols; ++j) {
      if (j) out << ',';
      out << static_cast<int>(grid.at(i, j));
    }
    out << '\n';
  }
}

}  // namespace crosswalk

#endif  // CROSSWALK__OCCLUSION_WORLD_HPP_
