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

#ifndef CROSSWALK__VEHICLE_DYNAMICS_HPP_
#define CROSSWALK__VEHICLE_DYNAMICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "crosswalk/config.hpp"
#include "crosswalk/path.hpp"

namespace crosswalk {

inline constexpr double kGravity = 9.81;

/// Planar single-track vehicle state.
///   uy, r, ux  body-frame lateral velocity [m/s], yaw rate [rad/s], longitudinal velocity [m/s]
///   psi, north, east  inertial heading [rad] and position [m]
///   s, e  path distance and signed lateral deviation (left positive) [m]
struct VehicleState {
  double uy = 0.0;
  double r = 0.0;
  double ux = 0.0;
  double psi = 0.0;
  double north = 0.0;
  double east = 0.0;
  double s = 0.0;
  double e = 0.0;

  bool finite() const {
    return std::isfinite(uy) && std::isfinite(r) && std::isfinite(ux) && std::isfinite(psi) &&
           std::isfinite(north) && std::isfinite(east) && std::isfinite(s) && std::isfinite(e);
  }
  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

struct VehicleParams {
  double mass = 1500.0;                // kg
  double yaw_inertia = 2250.0;         // kg m^2
  double cg_to_front = 1.2;            // m
  double cg_to_rear = 1.5;             // m
  double cornering_front = 100000.0;   // N/rad, lumped axle
  double cornering_rear = 110000.0;    // N/rad, lumped axle
  double friction = 0.9;
  double front_brake_fraction = 0.7;
  bool front_wheel_drive = true;
  double length = 4.7;                 // m, body footprint
  double width = 1.8;                  // m
  // Below low_speed_blend_lo the lateral states relax to the kinematic
  // single-track solution; above low_speed_blend_hi the tire model is used
  // alone. Linear blend in between.
  double low_speed_blend_lo = 1.0;     // m/s
  double low_speed_blend_hi = 3.0;     // m/s
  double kinematic_time_constant = 0.05;  // s

  double wheelbase() const { return cg_to_front + cg_to_rear; }
  double front_normal_load() const { return mass * kGravity * cg_to_rear / wheelbase(); }
  double rear_normal_load() const { return mass * kGravity * cg_to_front / wheelbase(); }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("vehicle parameter '") + name + "' must be positive");
    };
    positive(mass, "mass");
    positive(yaw_inertia, "yaw_inertia");
    positive(cg_to_front, "cg_to_front");
    positive(cg_to_rear, "cg_to_rear");
    positive(cornering_front, "cornering_front");
    positive(cornering_rear, "cornering_rear");
    positive(length, "length");
    positive(width, "width");
    positive(kinematic_time_constant, "kinematic_time_constant");
    if (!(friction > 0.0 && friction <= 2.0)) throw std::invalid_argument("friction must lie in (0, 2]");
    if (!(front_brake_fraction >= 0.0 && front_brake_fraction <= 1.0)) {
      throw std::invalid_argument("front_brake_fraction must lie in [0, 1]");
    }
    if (!(low_speed_blend_lo >= 0.0 && low_speed_blend_hi > low_speed_blend_lo)) {
      throw std::invalid_argument("low-speed blend thresholds must satisfy 0 <= lo < hi");
    }
  }
};

/// Reads vehicle parameters; every key is optional and defaults to the
/// mid-size sedan values above.
inline VehicleParams vehicle_params_from_config(const KeyValueConfig& cfg) {
  VehicleParams p;
  p.mass = cfg.number_or("mass_kg", p.mass);
  p.yaw_inertia = cfg.number_or("yaw_inertia_kgm2", p.yaw_inertia);
  p.cg_to_front = cfg.number_or("cg_to_front_m", p.cg_to_front);
  p.cg_to_rear = cfg.number_or("cg_to_rear_m", p.cg_to_rear);
  p.cornering_front = cfg.number_or("cornering_stiffness_front_n_per_rad", p.cornering_front);
  p.cornering_rear = cfg.number_or("cornering_stiffness_rear_n_per_rad", p.cornering_rear);
  p.friction = cfg.number_or("friction", p.friction);
  p.front_brake_fraction = cfg.number_or("front_brake_fraction", p.front_brake_fraction);
  p.front_wheel_drive = cfg.boolean_or("front_wheel_drive", p.front_wheel_drive);
  p.length = cfg.number_or("length_m", p.length);
  p.width = cfg.number_or("width_m", p.width);
  p.low_speed_blend_lo = cfg.number_or("low_speed_blend_lo_mps", p.low_speed_blend_lo);
  p.low_speed_blend_hi = cfg.number_or("low_speed_blend_hi_mps", p.low_speed_blend_hi);
  p.kinematic_time_constant = cfg.number_or("kinematic_time_constant_s", p.kinematic_time_constant);
  p.validate();
  return p;
}

/// Fiala brush tire with symmetric friction. Positive slip produces negative
/// force; beyond the full-slide angle the force is exactly -mu*Fz*sign(alpha).
inline double brush_tire_lateral(double slip_angle, double normal_load, double cornering_stiffness, double friction) {
  if (!std::isfinite(slip_angle) || !std::isfinite(normal_load) || !std::isfinite(cornering_stiffness) ||
      !std::isfinite(friction)) {
    throw std::domain_error("brush_tire_lateral: non-finite input");
  }
  if (!(normal_load > 0.0 && cornering_stiffness > 0.0 && friction > 0.0)) {
    throw std::domain_error("brush_tire_lateral: load, stiffness and friction must be positive");
  }
  const double mu_fz = friction * normal_load;
  const double slide_angle = std::atan(3.0 * mu_fz / cornering_stiffness);
  if (std::abs(slip_angle) >= slide_angle) return slip_angle > 0.0 ? -mu_fz : (slip_angle < 0.0 ? mu_fz : 0.0);
  const double t = std::tan(slip_angle);
  const double c = cornering_stiffness;
  const double force = -c * t + c * c / (3.0 * mu_fz) * std::abs(t) * t - c * c * c / (27.0 * mu_fz * mu_fz) * t * t * t;
  return std::clamp(force, -mu_fz, mu_fz);
}

struct AxleForces {
  double front = 0.0;
  double rear = 0.0;
};

/// Splits a longitudinal acceleration command between the axles: all drive
/// force on the front axle, braking by the configured front fraction.
inline AxleForces allocate_longitudinal(double ax_command, const VehicleParams& params) {
  if (!std::isfinite(ax_command)) throw std::domain_error("allocate_longitudinal: non-finite command");
  const double total = params.mass * ax_command;
  if (ax_command >= 0.0) {
    if (params.front_wheel_drive) return {total, 0.0};
    return {0.0, total};
  }
  const double front = params.front_brake_fraction * total;
  return {front, total - front};
}

namespace detail {

using DynamicState = std::array<double, 6>;  // uy, r, ux, psi, north, east

inline DynamicState vehicle_derivative(const DynamicState& x, double steer, const AxleForces& fx, const VehicleParams& p) {
  const double uy = x[0], r = x[1], ux = x[2], psi = x[3];
  const double a = p.cg_to_front, b = p.cg_to_rear;
  const double cs = std::cos(steer), sn = std::sin(steer);

  // kinematic single-track relaxation, used near standstill where slip angles are undefined
  const double r_kin = ux * std::tan(steer) / p.wheelbase();
  const double uy_kin = b * r_kin;
  const double d_uy_kin = (uy_kin - uy) / p.kinematic_time_constant;
  const double d_r_kin = (r_kin - r) / p.kinematic_time_constant;
  const double d_ux_kin = (fx.front * cs + fx.rear) / p.mass;

  const double w = std::clamp((ux - p.low_speed_blend_lo) / (p.low_speed_blend_hi - p.low_speed_blend_lo), 0.0, 1.0);
  double d_uy = d_uy_kin, d_r = d_r_kin, d_ux = d_ux_kin;
  if (w > 0.0) {
    const double alpha_f = std::atan2(uy + a * r, ux) - steer;
    const double alpha_r = std::atan2(uy - b * r, ux);
    const double fyf = brush_tire_lateral(alpha_f, p.front_normal_load(), p.cornering_front, p.friction);
    const double fyr = brush_tire_lateral(alpha_r, p.rear_normal_load(), p.cornering_rear, p.friction);
    const double d_uy_dyn = (fyf * cs + fx.front * sn + fyr) / p.mass - r * ux;
    const double d_r_dyn = (a * (fyf * cs + fx.front * sn) - b * fyr) / p.yaw_inertia;
    const double d_ux_dyn = (fx.front * cs - fyf * sn + fx.rear) / p.mass + r * uy;
    d_uy = w * d_uy_dyn + (1.0 - w) * d_uy_kin;
    d_r = w * d_r_dyn + (1.0 - w) * d_r_kin;
    d_ux = w * d_ux_dyn + (1.0 - w) * d_ux_kin;
  }
  if (ux <= 0.0 && d_ux < 0.0) d_ux = 0.0;  // brakes hold, never reverse

  return {d_uy, d_r, d_ux, r, ux * std::cos(psi) - uy * std::sin(psi), -ux * std::sin(psi) - uy * std::cos(psi)};
}

}  // namespace detail

struct StepResult {
  VehicleState state;
  bool beyond_path = false;  ///< projection clamped to a path end
};

/// One fixed-step RK4 integration of the single-track model, then (s, e) by
/// projection. s never decreases: a projection that falls behind the previous
/// s keeps the previous value.
inline StepResult step_dynamics(const VehicleState& state, double steer, double ax_command, double dt,
                                const VehicleParams& params, const Path& path) {
  if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("step_dynamics: dt must lie in (0, 0.1]");
  if (!state.finite() || !std::isfinite(steer) || !std::isfinite(ax_command)) {
    throw std::domain_error("step_dynamics: non-finite state or input");
  }
  const AxleForces fx = allocate_longitudinal(ax_command, params);
  using detail::DynamicState;
  const DynamicState x0{state.uy, state.r, state.ux, state.psi, state.north, state.east};
  auto add = [](const DynamicState& x, const DynamicState& k, double h) {
    DynamicState out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + h * k[i];
    return out;
  };
  const auto k1 = detail::vehicle_derivative(x0, steer, fx, params);
  const auto k2 = detail::vehicle_derivative(add(x0, k1, dt / 2), steer, fx, params);
  const auto k3 = detail::vehicle_derivative(add(x0, k2, dt / 2), steer, fx, params);
  const auto k4 = detail::vehicle_derivative(add(x0, k3, dt), steer, fx, params);
  DynamicState x1;
  for (std::size_t i = 0; i < x1.size(); ++i) x1[i] = x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

  StepResult out;
  out.state.uy = x1[0];
  out.state.r = x1[1];
  out.state.ux = std::max(0.0, x1[2]);
  out.state.psi = x1[3];
  out.state.north = x1[4];
  out.state.east = x1[5];
  const auto proj = path_project(out.state.north, out.state.east, path);
  out.state.s = std::max(state.s, proj.s);
  out.state.e = proj.e;
  out.beyond_path = proj.clamped;
  return out;
}

}  // namespace crosswalk

#endif  // CROSSWALK__VEHICLE_DYNAMICS_HPP_
