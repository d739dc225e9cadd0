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

#ifndef CROSSWALK__HARNESS_HPP_
#define CROSSWALK__HARNESS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "crosswalk/belief.hpp"
#include "crosswalk/config.hpp"
#include "crosswalk/crosswalk_pomdp.hpp"
#include "crosswalk/occlusion_world.hpp"
#include "crosswalk/path.hpp"
#include "crosswalk/policies.hpp"
#include "crosswalk/qmdp.hpp"
#include "crosswalk/vehicle_dynamics.hpp"

namespace crosswalk {

inline constexpr double kPi = 3.14159265358979323846;

struct ControllerParams {
  double kp = 1.0;                    // 1/s, proportional speed gain
  double max_accel = 3.0;             // m/s^2, symmetric clamp
  double min_lookahead = 4.0;         // m
  double lookahead_time = 0.6;        // s, lookahead grows with speed
  double max_steer = 30.0 * kPi / 180.0;
};

struct AvoidanceParams {
  double clearance_margin = 0.5;  // m between ego side and occluder
  double ramp_length = 12.0;      // m for each lateral transition
  double path_length = 60.0;      // m of arc
  double spacing = 0.25;          // m between path samples
};

/// Smooth 60 m path: in lane, a quintic lateral shift that clears every
/// occluder overlapping the ego lane, then back to the lane centre.
inline Path build_avoidance_path(const Scene& scene, double ego_half_width = 0.9, const AvoidanceParams& params = {}) {
  double rear = std::numeric_limits<double>::infinity();
  double front = -std::numeric_limits<double>::infinity();
  double offset = 0.0;
  const double lane_left = 0.5 * scene.road.lane_width;
  const double lane_right = -0.5 * scene.road.lane_width;
  for (const auto& o : scene.occluders) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : o.corners()) {
      lo = std::min(lo, c.y);
      hi = std::max(hi, c.y);
    }
    if (hi <= lane_right || lo >= lane_left) continue;  // not in the ego lane
    rear = std::min(rear, o.min_x());
    front = std::max(front, o.max_x());
    offset = std::max(offset, hi + params.clearance_margin + ego_half_width);
  }
  auto lateral = [&](double x) {
    if (offset <= 0.0) return 0.0;
    auto smooth = [](double t) {
      t = std::clamp(t, 0.0, 1.0);
      return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    };
    if (x < rear) return offset * smooth((x - (rear - params.ramp_length)) / params.ramp_length);
    if (x <= front) return offset;
    return offset * (1.0 - smooth((x - front) / params.ramp_length));
  };
  if (offset > 0.0) {
    if (offset + ego_half_width > scene.road.left_y) {
      throw std::runtime_error("avoidance path infeasible: required offset leaves the road");
    }
    if (rear - params.ramp_length < 0.0) throw std::runtime_error("avoidance path infeasible: occluder too close to start");
  }

  std::vector<NorthEast> dense;
  const double step = 0.05;
  double arc = 0.0;
  RoadPoint prev{0.0, lateral(0.0)};
  dense.push_back(to_north_east(prev));
  for (int k = 1; arc < params.path_length; ++k) {
    const RoadPoint p{k * step, lateral(k * step)};
    const double seg = std::hypot(p.x - prev.x, p.y - prev.y);
    if (arc + seg >= params.path_length) {
      const double t = (params.path_length - arc) / seg;
      dense.push_back(to_north_east({prev.x + t * (p.x - prev.x), prev.y + t * (p.y - prev.y)}));
      break;
    }
    arc += seg;
    dense.push_back(to_north_east(p));
    prev = p;
  }
  return Path::from_polyline(dense, params.spacing);
}

/// Proportional speed loop on the scaled desired speed.
inline double speed_control(double v_desired, double scale, double v_current, double kp, double max_accel = 3.0) {
  if (!std::isfinite(v_desired) || !std::isfinite(scale) || !std::isfinite(v_current) || !std::isfinite(kp)) {
    throw std::domain_error("speed_control: non-finite input");
  }
  if (scale < 0.0 || scale > 1.0) throw std::invalid_argument("speed_control: scale must lie in [0, 1]");
  return std::clamp(kp * (scale * v_desired - v_current), -max_accel, max_accel);
}

/// Lookahead steering toward the path point ahead of the projected
/// position; positive steer turns left.
inline double steer_control(const VehicleState& state, const Path& path, const VehicleParams& vehicle,
                            const ControllerParams& ctrl = {}) {
  const double lookahead = std::max(ctrl.min_lookahead, ctrl.lookahead_time * state.ux);
  const NorthEast aim = path.point_at(state.s + lookahead);
  const double dn = aim.north - state.north;
  const double de = aim.east - state.east;
  const double dist2 = dn * dn + de * de;
  if (dist2 < 0.25) return 0.0;
  // aim point in the body frame (forward, left)
  const double forward = dn * std::cos(state.psi) - de * std::sin(state.psi);
  const double left = -dn * std::sin(state.psi) - de * std::cos(state.psi);
  if (forward <= 0.0 && std::abs(left) < 1e-9) return 0.0;
  const double curvature = 2.0 * left / dist2;
  return std::clamp(std::atan(curvature * vehicle.wheelbase()), -ctrl.max_steer, ctrl.max_steer);
}

/// Path distance of the crosswalk stop line.
inline double crosswalk_line_s(const Scene& scene, const Path& path) {
  const auto end = path.points().back();
  double lo = 0.0, hi = path.length();
  if (to_road(end).x <= scene.crosswalk.start_x) return hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (to_road(path.point_at(mid)).x < scene.crosswalk.start_x ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Distance bins, before the stop line, from which some point of the
/// crosswalk band (between the curbs) is shadowed or outside the sensor
/// window. Returns {first, last}; first > last when the crosswalk is always
/// in view.
inline std::pair<int, int> compute_occlusion_zone(const Scene& scene, const Path& path, double sample_step = 0.25) {
  const double line_s = crosswalk_line_s(scene, path);
  std::vector<RoadPoint> samples;
  for (double x = scene.crosswalk.start_x; x <= scene.crosswalk.start_x + scene.crosswalk.width + 1e-9; x += 0.5) {
    for (double y = scene.road.right_y; y <= scene.road.left_y + 1e-9; y += sample_step) samples.push_back({x, y});
  }
  int first = 1, last = 0;
  for (int d = 0; d < kTerminalDistanceBin; ++d) {
    const double s = (d + 0.5) * kDistanceBinWidth;
    if (s >= line_s) break;
    const RoadPoint ego = to_road(path.point_at(s));
    bool shadowed = false;
    for (const auto& p : samples) {
      if (!in_sensor_window({ego.x, ego.y, path.heading_at(s)}, p) || !line_of_sight(scene, ego, p)) {
        shadowed = true;
        break;
      }
    }
    if (shadowed) {
      if (first > last) first = d;
      last = d;
    }
  }
  return {first, last};
}

struct ScenarioConfig {
  std::string name = "scenario";
  Scene scene;
  PolicyKind policy = PolicyKind::kOracle;
  double desired_speed = 10.0;
  double duration = 15.0;
  double control_period = 0.01;
  double decision_period = 0.5;
  double initial_speed = 0.0;
  std::uint64_t seed = 0;
  VehicleParams vehicle;
  ModelParams model;
  std::filesystem::path policy_file;  ///< optional pre-solved policy
  bool belief_odometry = true;
  bool auto_occlusion_zone = true;    ///< derive the model's occlusion zone from the scene
  double solver_tolerance = 1e-6;
  ControllerParams controller;
  AvoidanceParams avoidance;
  StopRule stop_rule;
  double stuck_speed = 0.05;          // m/s
  double stuck_time = 3.0;            // s
  double proximity_limit = 1.5;       // m from bumper to occluder rear

  int decision_stride() const { return static_cast<int>(std::lround(decision_period / control_period)); }
  int step_count() const { return static_cast<int>(std::lround(duration / control_period)); }

  void validate() const {
    if (!(duration > 0.0 && control_period > 0.0 && decision_period > 0.0)) {
      throw std::invalid_argument("duration and periods must be positive");
    }
    if (control_period > 0.1) throw std::invalid_argument("control period must not exceed 0.1 s");
    const double ratio = decision_period / control_period;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0) {
      throw std::invalid_argument("decision period must be an integer multiple of the control period");
    }
    if (!(desired_speed > 0.0)) throw std::invalid_argument("desired speed must be positive");
    if (initial_speed < 0.0) throw std::invalid_argument("initial speed must be non-negative");
    if (avoidance.clearance_margin < 0.5) throw std::invalid_argument("clearance margin must be at least 0.5 m");
    scene.validate();
    vehicle.validate();
    model.validate();
  }
};

/// Scenario file (key = value). Paths to the scene, vehicle and model files
/// are relative to the scenario file; every other key is optional.
inline ScenarioConfig scenario_from_config(const KeyValueConfig& cfg, const std::string& default_name = "scenario") {
  ScenarioConfig s;
  s.name = cfg.string_or("name", default_name);
  s.policy = parse_policy_kind(cfg.string("policy"));
  s.scene = scene_from_config(KeyValueConfig::from_file(cfg.path("scene")));
  if (cfg.has("vehicle")) s.vehicle = vehicle_params_from_config(KeyValueConfig::from_file(cfg.path("vehicle")));
  if (cfg.has("model")) s.model = model_params_from_config(KeyValueConfig::from_file(cfg.path("model")));
  if (cfg.has("policy_file")) s.policy_file = cfg.path("policy_file");
  s.desired_speed = cfg.number_or("desired_speed_mps", s.desired_speed);
  s.duration = cfg.number_or("duration_s", s.duration);
  s.control_period = cfg.number_or("control_period_s", s.control_period);
  s.decision_period = cfg.number_or("decision_period_s", s.decision_period);
  s.initial_speed = cfg.number_or("initial_speed_mps", s.initial_speed);
  const long long seed = cfg.integer_or("seed", 0);
  if (seed < 0) throw ConfigError("seed must be non-negative");
  s.seed = static_cast<std::uint64_t>(seed);
  s.belief_odometry = cfg.boolean_or("belief_odometry", s.belief_odometry);
  s.auto_occlusion_zone = cfg.boolean_or("auto_occlusion_zone", s.auto_occlusion_zone);
  s.solver_tolerance = cfg.number_or("solver_tolerance", s.solver_tolerance);
  s.controller.kp = cfg.number_or("speed_kp", s.controller.kp);
  s.controller.max_accel = cfg.number_or("max_accel_mps2", s.controller.max_accel);
  s.controller.min_lookahead = cfg.number_or("min_lookahead_m", s.controller.min_lookahead);
  s.controller.lookahead_time = cfg.number_or("lookahead_time_s", s.controller.lookahead_time);
  s.controller.max_steer = cfg.number_or("max_steer_deg", s.controller.max_steer * 180.0 / kPi) * kPi / 180.0;
  s.avoidance.clearance_margin = cfg.number_or("clearance_margin_m", s.avoidance.clearance_margin);
  s.avoidance.ramp_length = cfg.number_or("ramp_length_m", s.avoidance.ramp_length);
  s.avoidance.path_length = s.scene.path_length;
  s.stop_rule.margin = cfg.number_or("stop_margin_m", s.stop_rule.margin);
  s.stop_rule.deceleration = cfg.number_or("stop_decel_mps2", s.stop_rule.deceleration);
  s.stop_rule.speed_gain = s.controller.kp;
  s.stuck_speed = cfg.number_or("stuck_speed_mps", s.stuck_speed);
  s.stuck_time = cfg.number_or("stuck_time_s", s.stuck_time);
  s.proximity_limit = cfg.number_or("proximity_limit_m", s.proximity_limit);
  s.validate();
  return s;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& file) {
  try {
    return scenario_from_config(KeyValueConfig::from_file(file), file.stem().string());
  } catch (const std::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

struct TraceRow {
  double time = 0.0;
  double north = 0.0;
  double east = 0.0;
  double heading = 0.0;
  double ux = 0.0;
  double s = 0.0;
  double e = 0.0;
  double ax = 0.0;
  double steer = 0.0;
  double scale = 0.0;
  int unobservable_count = 0;
  int count_bin = 0;
  bool detected = false;
  double p_crossing = std::numeric_limits<double>::quiet_NaN();    ///< pomdp only
  double belief_entropy = std::numeric_limits<double>::quiet_NaN();
};

struct Trace {
  std::string scenario;
  PolicyKind policy = PolicyKind::kOracle;
  std::uint64_t seed = 0;
  double control_period = 0.01;
  double decision_period = 0.5;
  double desired_speed = 10.0;
  double crosswalk_line_s = 0.0;
  bool crossing_active = false;
  std::string termination = "duration";
  std::vector<std::string> events;
  std::vector<TraceRow> rows;
};

/// A run failed mid-way; the rows produced so far are kept.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& what, Trace partial) : std::runtime_error(what), partial_(std::move(partial)) {}
  const Trace& partial_trace() const { return partial_; }

 private:
  Trace partial_;
};

/// Built model plus its QMDP policy, shareable across runs.
struct SolvedModel {
  CrosswalkPomdp model;
  AlphaVectorPolicy policy;
  int iterations = 0;
  double residual = 0.0;
};

inline std::vector<double> scale_labels() {
  std::vector<double> labels;
  for (int a = 0; a < kNumActions; ++a) labels.push_back(Action{a}.scale());
  return labels;
}

inline SolvedModel solve_model(const ModelParams& params, double tolerance = 1e-6, int max_iters = 10000) {
  CrosswalkPomdp model(params);
  auto vi = value_iteration(model, tolerance, max_iters);
  auto policy = extract_alphas(vi.q, scale_labels());
  return {std::move(model), std::move(policy), vi.iterations, vi.residual};
}

/// The model parameters a scenario actually uses (occlusion zone filled in
/// from the scene geometry when requested).
inline ModelParams effective_model_params(const ScenarioConfig& cfg) {
  ModelParams p = cfg.model;
  if (cfg.auto_occlusion_zone) {
    const Path path = build_avoidance_path(cfg.scene, 0.5 * cfg.vehicle.width, cfg.avoidance);
    std::tie(p.occlusion_zone_first_bin, p.occlusion_zone_last_bin) = compute_occlusion_zone(cfg.scene, path);
  }
  return p;
}

namespace detail {

/// Bumper-to-rear gap to an occluder the ego is stuck behind, if the ego
/// laterally overlaps it and has not reached it yet.
inline std::optional<double> gap_behind_occluder(const Scene& scene, const VehicleState& st, const VehicleParams& v) {
  std::optional<double> best;
  const RoadPoint ego = to_road({st.north, st.east});
  for (const auto& o : scene.occluders) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : o.corners()) {
      lo = std::min(lo, c.y);
      hi = std::max(hi, c.y);
    }
    if (ego.y - 0.5 * v.width >= hi || ego.y + 0.5 * v.width <= lo) continue;
    const double gap = o.min_x() - (ego.x + v.cg_to_front + 0.5 * (v.length - v.wheelbase()));
    if (gap < -0.5 * v.length) continue;  // already alongside or past
    if (!best || gap < *best) best = gap;
  }
  return best;
}

}  // namespace detail

/// Closed-loop run: grid -> observation -> (every decision period) policy ->
/// speed and steering control -> dynamics, one trace row per control step.
/// Pass `solved` to share a pre-solved model between runs; otherwise the
/// pomdp policy is loaded from cfg.policy_file or solved in place.
inline Trace run_scenario(const ScenarioConfig& cfg, const SolvedModel* solved = nullptr) {
  cfg.validate();
  Trace trace;
  trace.scenario = cfg.name;
  trace.policy = cfg.policy;
  trace.seed = cfg.seed;
  trace.control_period = cfg.control_period;
  trace.decision_period = cfg.decision_period;
  trace.desired_speed = cfg.desired_speed;

  const Path path = build_avoidance_path(cfg.scene, 0.5 * cfg.vehicle.width, cfg.avoidance);
  const double line_s = crosswalk_line_s(cfg.scene, path);
  trace.crosswalk_line_s = line_s;
  const bool crossing_active = cfg.scene.pedestrian.present;
  trace.crossing_active = crossing_active;

  std::unique_ptr<SolvedModel> owned;
  std::unique_ptr<PomdpExecutor> executor;
  if (cfg.policy == PolicyKind::kPomdp) {
    if (!solved) {
      const ModelParams params = effective_model_params(cfg);
      if (!cfg.policy_file.empty()) {
        owned = std::make_unique<SolvedModel>(SolvedModel{CrosswalkPomdp(params), load_policy(cfg.policy_file), 0, 0.0});
      } else {
        owned = std::make_unique<SolvedModel>(solve_model(params, cfg.solver_tolerance));
      }
      solved = owned.get();
    }
    executor = std::make_unique<PomdpExecutor>(solved->model, solved->policy, cfg.belief_odometry);
  }

  VehicleState state;
  state.ux = cfg.initial_speed;
  const int steps = cfg.step_count();
  const int stride = cfg.decision_stride();
  double scale = 1.0;
  double stopped_for = 0.0;
  int resets_seen = 0;

  for (int k = 0; k < steps; ++k) {
    TraceRow row;
    row.time = k * cfg.control_period;
    row.north = state.north;
    row.east = state.east;
    row.heading = state.psi;
    row.ux = state.ux;
    row.s = state.s;
    row.e = state.e;
    try {
      const EgoPose pose = ego_pose_from(state.north, state.east, state.psi);
      const OccupancyGrid grid = build_grid(cfg.scene, pose);
      const SensorObservation sensor = sense(cfg.scene, pose, grid);
      row.unobservable_count = sensor.unobservable_count;
      row.count_bin = sensor.count_bin;
      row.detected = sensor.pedestrian_detected;

      double speed_cap = std::numeric_limits<double>::infinity();
      switch (cfg.policy) {
        case PolicyKind::kOracle:
          // ground truth is always available, so the envelope is tracked every control step
          scale = oracle_scale(crossing_active, state.s, line_s, cfg.desired_speed, cfg.stop_rule);
          break;
        case PolicyKind::kBaseline:
          if (k % stride == 0) scale = baseline_scale(sensor.unobservable_count);
          break;
        case PolicyKind::kPomdp:
          if (k % stride == 0) {
            const PomdpExecutor::Odometry odo{speed_bin_of(state.ux), distance_bin_of(state.s)};
            scale = executor->decide(sensor, odo).scale();
            if (executor->zero_posterior_resets() != resets_seen) {
              resets_seen = executor->zero_posterior_resets();
              trace.events.push_back("t=" + std::to_string(row.time) + " zero-probability observation, belief reset to uniform");
            }
          }
          break;
      }
      if (cfg.policy != PolicyKind::kOracle && sensor.pedestrian_detected && state.s < line_s) {
        speed_cap = crosswalk_stop_speed(line_s - state.s, cfg.stop_rule);
      }
      if (executor) {
        row.p_crossing = crossing_probability(executor->belief());
        row.belief_entropy = executor->belief().entropy();
      }
      row.scale = scale;
      const double effective_scale = std::min(scale, speed_cap / cfg.desired_speed);
      row.ax = speed_control(cfg.desired_speed, effective_scale, state.ux, cfg.controller.kp, cfg.controller.max_accel);
      row.steer = steer_control(state, path, cfg.vehicle, cfg.controller);
      trace.rows.push_back(row);

      const StepResult next = step_dynamics(state, row.steer, row.ax, cfg.control_period, cfg.vehicle, path);
      state = next.state;
      if (next.beyond_path || state.s >= path.length() - 1e-9) {
        trace.termination = "path_end";
        break;
      }
      const bool stop_required = crossing_active && state.s < line_s;
      stopped_for = state.ux < cfg.stuck_speed ? stopped_for + cfg.control_period : 0.0;
      if (!stop_required && stopped_for > cfg.stuck_time) {
        trace.termination = "stuck";
        break;
      }
      if (const auto gap = detail::gap_behind_occluder(cfg.scene, state, cfg.vehicle); gap && *gap < cfg.proximity_limit) {
        trace.termination = "occluder_proximity";
        break;
      }
    } catch (const std::exception& e) {
      trace.termination = std::string("error: ") + e.what();
      throw ScenarioError(trace.termination, std::move(trace));
    }
  }
  return trace;
}

}  // namespace crosswalk

#endif  // CROSSWALK__HARNESS_HPP_
