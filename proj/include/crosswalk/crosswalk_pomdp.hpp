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

#ifndef CROSSWALK__CROSSWALK_POMDP_HPP_
#define CROSSWALK__CROSSWALK_POMDP_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "crosswalk/config.hpp"
#include "crosswalk/occlusion_world.hpp"
#include "crosswalk/tabular_model.hpp"

namespace crosswalk {

inline constexpr int kSpeedBins = 11;      // 0..10 m/s in 1 m/s steps
inline constexpr int kDistanceBins = 121;  // 0..60 m in 0.5 m steps
inline constexpr int kTerminalDistanceBin = kDistanceBins - 1;
inline constexpr int kNumStates = kSpeedBins * kDistanceBins * 2;
inline constexpr int kNumActions = 11;
inline constexpr int kNumObservations = kCountBins * 2;
inline constexpr double kSpeedBinWidth = 1.0;
inline constexpr double kDistanceBinWidth = 0.5;

/// (speed bin, path-distance bin, crossing flag). Flat index is
/// crossing * 1331 + d_bin * 11 + v_bin.
struct DiscreteState {
  int v_bin = 0;
  int d_bin = 0;
  bool crossing = false;

  constexpr int index() const { return (crossing ? kSpeedBins * kDistanceBins : 0) + d_bin * kSpeedBins + v_bin; }
  static constexpr DiscreteState from_index(int i) {
    const bool c = i >= kSpeedBins * kDistanceBins;
    const int rest = c ? i - kSpeedBins * kDistanceBins : i;
    return {rest % kSpeedBins, rest / kSpeedBins, c};
  }
  constexpr bool valid() const {
    return v_bin >= 0 && v_bin < kSpeedBins && d_bin >= 0 && d_bin < kDistanceBins;
  }
  constexpr bool terminal() const { return d_bin == kTerminalDistanceBin; }
  friend constexpr bool operator==(const DiscreteState&, const DiscreteState&) = default;
};

/// Speed scale action; index k scales the desired speed by k/10.
struct Action {
  int index = 0;
  constexpr double scale() const { return index / 10.0; }
};

/// Observation: unobservable-count bin and detection flag; flat index
/// detected * 10 + count_bin.
struct Obs {
  int count_bin = 0;
  bool detected = false;

  constexpr int index() const { return (detected ? kCountBins : 0) + count_bin; }
  static constexpr Obs from_index(int i) { return {i % kCountBins, i >= kCountBins}; }
};

inline Obs to_obs(const SensorObservation& sensor) { return {sensor.count_bin, sensor.pedestrian_detected}; }

inline int speed_bin_of(double speed) {
  return std::clamp(static_cast<int>(std::lround(speed / kSpeedBinWidth)), 0, kSpeedBins - 1);
}
inline int distance_bin_of(double s) {
  return std::clamp(static_cast<int>(std::floor(s / kDistanceBinWidth)), 0, kTerminalDistanceBin);
}

struct SpaceSizes {
  int states;
  int actions;
  int observations;
  friend constexpr bool operator==(const SpaceSizes&, const SpaceSizes&) = default;
};

constexpr SpaceSizes enumerate_spaces() { return {kNumStates, kNumActions, kNumObservations}; }

/// Free parameters of the crosswalk model.
struct ModelParams {
  double decision_dt = 0.5;                 // s per decision epoch
  double max_speed = 10.0;                  // m/s reached by scale 1.0
  double p_adapt = 0.75;                    // speed bin moves toward the command
  double smear_behind = 0.15;               // distance advance - 1
  double smear_center = 0.70;
  double smear_ahead = 0.15;                // distance advance + 1
  double crossing_persist = 0.95;
  double crossing_onset = 0.05;
  double discount = 0.95;
  int crosswalk_bin = 80;                   // stop line at 40 m
  int yield_zone_start_bin = 60;            // not-yielding cost applies in [start, crosswalk_bin]
  int occlusion_zone_first_bin = 0;         // crosswalk shadowed for d in [first, last]
  int occlusion_zone_last_bin = 72;
  int speed_penalty_bin = 6;                // too fast means v_bin > 6
  double reward_complete = 100.0;
  double reward_not_yield = -50.0;
  double reward_too_fast = -5.0;
  double detect_given_crossing = 0.8;
  double detect_given_clear = 0.5;
  bool detection_blind_in_occlusion_zone = true;

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string("model parameter '") + name + "' must be a probability");
    };
    if (!(decision_dt > 0.0)) throw std::invalid_argument("decision_dt must be positive");
    if (!(max_speed > 0.0)) throw std::invalid_argument("max_speed must be positive");
    prob(p_adapt, "p_adapt");
    prob(smear_behind, "smear_behind");
    prob(smear_center, "smear_center");
    prob(smear_ahead, "smear_ahead");
    if (std::abs(smear_behind + smear_center + smear_ahead - 1.0) > 1e-12) {
      throw std::invalid_argument("distance smear must sum to 1");
    }
    prob(crossing_persist, "crossing_persist");
    prob(crossing_onset, "crossing_onset");
    prob(detect_given_crossing, "detect_given_crossing");
    prob(detect_given_clear, "detect_given_clear");
    if (!(discount > 0.0 && discount < 1.0)) throw std::invalid_argument("discount must lie in (0, 1)");
    if (crosswalk_bin < 0 || crosswalk_bin >= kTerminalDistanceBin) throw std::invalid_argument("crosswalk_bin out of range");
    if (yield_zone_start_bin < 0 || yield_zone_start_bin > crosswalk_bin) {
      throw std::invalid_argument("yield_zone_start_bin must lie in [0, crosswalk_bin]");
    }
    if (speed_penalty_bin < 0 || speed_penalty_bin >= kSpeedBins) throw std::invalid_argument("speed_penalty_bin out of range");
  }
};

inline ModelParams model_params_from_config(const KeyValueConfig& cfg) {
  ModelParams p;
  p.decision_dt = cfg.number_or("decision_dt_s", p.decision_dt);
  p.max_speed = cfg.number_or("max_speed_mps", p.max_speed);
  p.p_adapt = cfg.number_or("p_adapt", p.p_adapt);
  p.smear_behind = cfg.number_or("smear_behind", p.smear_behind);
  p.smear_center = cfg.number_or("smear_center", p.smear_center);
  p.smear_ahead = cfg.number_or("smear_ahead", p.smear_ahead);
  p.crossing_persist = cfg.number_or("crossing_persist", p.crossing_persist);
  p.crossing_onset = cfg.number_or("crossing_onset", p.crossing_onset);
  p.discount = cfg.number_or("discount", p.discount);
  p.crosswalk_bin = static_cast<int>(cfg.integer_or("crosswalk_bin", p.crosswalk_bin));
  p.yield_zone_start_bin = static_cast<int>(cfg.integer_or("yield_zone_start_bin", p.yield_zone_start_bin));
  p.occlusion_zone_first_bin = static_cast<int>(cfg.integer_or("occlusion_zone_first_bin", p.occlusion_zone_first_bin));
  p.occlusion_zone_last_bin = static_cast<int>(cfg.integer_or("occlusion_zone_last_bin", p.occlusion_zone_last_bin));
  p.speed_penalty_bin = static_cast<int>(cfg.integer_or("speed_penalty_bin", p.speed_penalty_bin));
  p.reward_complete = cfg.number_or("reward_complete", p.reward_complete);
  p.reward_not_yield = cfg.number_or("reward_not_yield", p.reward_not_yield);
  p.reward_too_fast = cfg.number_or("reward_too_fast", p.reward_too_fast);
  p.detect_given_crossing = cfg.number_or("detect_given_crossing", p.detect_given_crossing);
  p.detect_given_clear = cfg.number_or("detect_given_clear", p.detect_given_clear);
  p.detection_blind_in_occlusion_zone =
      cfg.boolean_or("detection_blind_in_occlusion_zone", p.detection_blind_in_occlusion_zone);
  p.validate();
  return p;
}

/// The discrete crosswalk POMDP: analytic model functions plus the
/// equivalent explicit tables used by the solver and the belief filter.
class CrosswalkPomdp {
 public:
  explicit CrosswalkPomdp(ModelParams params = {}) : params_(params) {
    params_.validate();
    table_ = TabularPomdp(kNumStates, kNumActions, kNumObservations, params_.discount);
    for (int s = 0; s < kNumStates; ++s) {
      const auto st = DiscreteState::from_index(s);
      for (int a = 0; a < kNumActions; ++a) {
        auto row = transition(st, Action{a});
        table_.set_reward(s, a, reward(st, Action{a}));
        table_.set_successors(s, a, std::move(row));
      }
      for (int o = 0; o < kNumObservations; ++o) table_.set_observation_prob(o, s, observation_prob(Obs::from_index(o), st));
    }
  }

  const ModelParams& params() const { return params_; }
  const TabularPomdp& table() const { return table_; }

  int num_states() const { return kNumStates; }
  int num_actions() const { return kNumActions; }
  int num_observations() const { return kNumObservations; }
  double discount() const { return params_.discount; }
  std::span<const Transition> successors(int s, int a) const { return table_.successors(s, a); }
  double reward(int s, int a) const { return table_.reward(s, a); }
  double observation_prob(int o, int s) const { return table_.observation_prob(o, s); }

  bool in_occlusion_zone(int d_bin) const {
    return d_bin >= params_.occlusion_zone_first_bin && d_bin <= params_.occlusion_zone_last_bin;
  }
  bool in_yield_zone(int d_bin) const { return d_bin >= params_.yield_zone_start_bin && d_bin <= params_.crosswalk_bin; }

  /// Cells advanced per epoch at the speed of bin v.
  int nominal_advance(int v_bin) const {
    return static_cast<int>(std::lround(v_bin * kSpeedBinWidth * params_.decision_dt / kDistanceBinWidth));
  }
  int commanded_speed_bin(Action a) const { return speed_bin_of(a.scale() * params_.max_speed); }

  /// Marginal over the next speed bin.
  std::map<int, double> speed_distribution(int v_bin, Action a) const {
    const int target = commanded_speed_bin(a);
    if (target == v_bin) return {{v_bin, 1.0}};
    const int step = target > v_bin ? 1 : -1;
    return {{v_bin, 1.0 - params_.p_adapt}, {v_bin + step, params_.p_adapt}};
  }

  /// Marginal over the next distance bin. Zero speed advances zero cells;
  /// otherwise mass spreads over advance-1, advance, advance+1, clipped at
  /// the terminal bin.
  std::map<int, double> distance_distribution(int v_bin, int d_bin) const {
    const int adv = nominal_advance(v_bin);
    if (adv == 0) return {{d_bin, 1.0}};
    std::map<int, double> out;
    const double mass[3] = {params_.smear_behind, params_.smear_center, params_.smear_ahead};
    for (int k = -1; k <= 1; ++k) {
      const int next = std::clamp(d_bin + adv + k, d_bin, kTerminalDistanceBin);
      if (mass[k + 1] > 0.0) out[next] += mass[k + 1];
    }
    return out;
  }

  std::map<bool, double> crossing_distribution(bool crossing) const {
    const double p = crossing ? params_.crossing_persist : params_.crossing_onset;
    return {{true, p}, {false, 1.0 - p}};
  }

  std::vector<Transition> transition(DiscreteState s, Action a) const {
    if (!s.valid() || a.index < 0 || a.index >= kNumActions) throw std::out_of_range("transition: invalid state or action");
    if (s.terminal()) return {{s.index(), 1.0}};
    std::vector<Transition> out;
    for (const auto& [v, pv] : speed_distribution(s.v_bin, a)) {
      for (const auto& [d, pd] : distance_distribution(s.v_bin, s.d_bin)) {
        for (const auto& [c, pc] : crossing_distribution(s.crossing)) {
          const double p = pv * pd * pc;
          if (p > 0.0) out.push_back({DiscreteState{v, d, c}.index(), p});
        }
      }
    }
    return out;
  }

  double detection_prob(const DiscreteState& s) const {
    const bool blind = params_.detection_blind_in_occlusion_zone && in_occlusion_zone(s.d_bin);
    return (s.crossing && !blind) ? params_.detect_given_crossing : params_.detect_given_clear;
  }

  /// Pr(o | s'): uniform over count bins times the detection likelihood.
  double observation_prob(Obs o, DiscreteState s) const {
    const double pd = detection_prob(s);
    return (1.0 / kCountBins) * (o.detected ? pd : 1.0 - pd);
  }

  /// Expected immediate reward: completion bonus weighted by the
  /// probability of entering the terminal bin, plus the yield and speed
  /// penalties of the current state.
  double reward(DiscreteState s, Action a) const {
    if (s.terminal()) return 0.0;
    double r = 0.0;
    const auto dd = distance_distribution(s.v_bin, s.d_bin);
    if (auto it = dd.find(kTerminalDistanceBin); it != dd.end()) r += params_.reward_complete * it->second;
    if (s.crossing && a.index > 0 && in_yield_zone(s.d_bin)) r += params_.reward_not_yield;
    if (s.v_bin > params_.speed_penalty_bin && in_occlusion_zone(s.d_bin)) r += params_.reward_too_fast;
    return r;
  }

 private:
  ModelParams params_;
  TabularPomdp table_;
};

static_assert(PomdpModel<CrosswalkPomdp>);

}  // namespace crosswalk

#endif  // CROSSWALK__CROSSWALK_POMDP_HPP_
