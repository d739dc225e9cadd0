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

#ifndef CROSSWALK__POLICIES_HPP_
#define CROSSWALK__POLICIES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crosswalk/belief.hpp"
#include "crosswalk/crosswalk_pomdp.hpp"
#include "crosswalk/occlusion_world.hpp"
#include "crosswalk/qmdp.hpp"

namespace crosswalk {

enum class PolicyKind { kOracle, kBaseline, kPomdp };

inline constexpr std::array<PolicyKind, 3> kAllPolicyKinds = {PolicyKind::kOracle, PolicyKind::kBaseline,
                                                              PolicyKind::kPomdp};

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kOracle:
      return "oracle";
    case PolicyKind::kBaseline:
      return "baseline";
    case PolicyKind::kPomdp:
      return "pomdp";
  }
  return "unknown";
}

inline PolicyKind parse_policy_kind(std::string_view name) {
  for (auto k : kAllPolicyKinds) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown policy '" + std::string(name) + "' (expected oracle, baseline or pomdp)");
}

/// Pr(crossing = true) under a belief over the crosswalk state space.
inline double crossing_probability(const Belief& b) {
  double p = 0.0;
  for (std::size_t i = kSpeedBins * kDistanceBins; i < b.size(); ++i) p += b[i];
  return p;
}

/// Moves all (speed, distance) mass onto the measured odometry bins while
/// keeping the crossing marginal.
inline Belief anchor_to_odometry(const Belief& b, int v_bin, int d_bin) {
  if (b.size() != static_cast<std::size_t>(kNumStates)) throw std::invalid_argument("anchor_to_odometry: wrong belief size");
  const double pc = std::clamp(crossing_probability(b), 0.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(kNumStates), 0.0);
  p[static_cast<std::size_t>(DiscreteState{v_bin, d_bin, false}.index())] = 1.0 - pc;
  p[static_cast<std::size_t>(DiscreteState{v_bin, d_bin, true}.index())] = pc;
  return Belief(std::move(p));
}

struct PomdpStepResult {
  Action action;
  Belief posterior;
};

/// One pass of the execution loop: pick the action from the current belief,
/// then fold in the observation that arrives after executing it.
template <PomdpModel M>
PomdpStepResult pomdp_step(const M& model, const AlphaVectorPolicy& policy, const Belief& b,
                           const SensorObservation& sensor) {
  const Action a{best_action(policy, b.probabilities())};
  return {a, belief_update(model, b, a.index, to_obs(sensor).index())};
}

/// Runs the alpha-vector policy over a stream of sensor observations. The
/// first decision uses the uniform prior; every later decision first folds
/// in the observation produced by the previous action.
class PomdpExecutor {
 public:
  PomdpExecutor(const CrosswalkPomdp& model, const AlphaVectorPolicy& policy, bool use_odometry = true)
      : model_(&model), policy_(&policy), belief_(init_belief(model)), use_odometry_(use_odometry) {
    if (policy.num_states() != model.num_states() || policy.num_actions() != model.num_actions()) {
      throw std::invalid_argument("policy does not match the model dimensions");
    }
  }

  struct Odometry {
    int v_bin = 0;
    int d_bin = 0;
  };

  Action decide(const SensorObservation& sensor, std::optional<Odometry> odometry = std::nullopt) {
    if (last_action_) {
      try {
        belief_ = belief_update(*model_, belief_, last_action_->index, to_obs(sensor).index());
      } catch (const ZeroPosteriorError&) {
        belief_ = init_belief(*model_);
        ++resets_;
      }
    }
    if (use_odometry_ && odometry) belief_ = anchor_to_odometry(belief_, odometry->v_bin, odometry->d_bin);
    last_action_ = Action{best_action(*policy_, belief_.probabilities())};
    return *last_action_;
  }

  const Belief& belief() const { return belief_; }
  int zero_posterior_resets() const { return resets_; }

 private:
  const CrosswalkPomdp* model_;
  const AlphaVectorPolicy* policy_;
  Belief belief_;
  std::optional<Action> last_action_;
  bool use_odometry_;
  int resets_ = 0;
};

/// Occlusion-count heuristic: (9 - bin) / 9, from 1.0 with no occlusion to
/// 0.0 in the top bin.
inline double baseline_scale(int unobservable_count) {
  return static_cast<double>(kCountBins - 1 - bin_observation(unobservable_count)) / (kCountBins - 1);
}

/// Stop-before-the-line rule shared by the oracle and the perceived
/// crosswalk constraint.
struct StopRule {
  double margin = 2.0;        ///< stop this far before the line [m]
  double deceleration = 3.0;  ///< planning deceleration [m/s^2]
  double speed_gain = 1.0;    ///< kp of the speed loop that tracks the target [1/s]
};

/// Speed target for stopping `margin` before the line. The stopping
/// envelope sqrt(2 a d) is lowered by a / kp, the tracking error at which
/// the proportional loop commands the full deceleration, so the loop brakes
/// at `deceleration` once the vehicle reaches the envelope.
inline double crosswalk_stop_speed(double distance_to_line, const StopRule& rule = {}) {
  const double envelope = std::sqrt(2.0 * rule.deceleration * std::max(0.0, distance_to_line - rule.margin));
  return std::max(0.0, envelope - rule.deceleration / rule.speed_gain);
}

/// Perfect-information scale: full speed unless a crossing is active ahead,
/// in which case the scale follows the stopping-distance envelope.
inline double oracle_scale(bool crossing_active, double ego_s, double line_s, double v_desired,
                           const StopRule& rule = {}) {
  if (!(v_desired > 0.0)) throw std::invalid_argument("oracle_scale: desired speed must be positive");
  if (!crossing_active || ego_s >= line_s) return 1.0;
  return std::clamp(crosswalk_stop_speed(line_s - ego_s, rule) / v_desired, 0.0, 1.0);
}

}  // namespace crosswalk

#endif  // CROSSWALK__POLICIES_HPP_
