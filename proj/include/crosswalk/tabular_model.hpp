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

#ifndef CROSSWALK__TABULAR_MODEL_HPP_
#define CROSSWALK__TABULAR_MODEL_HPP_

#include <cmath>
#include <concepts>
#include <cstddef>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crosswalk {

/// One sparse transition entry.
struct Transition {
  int next = 0;
  double prob = 0.0;
};

/// What the solver needs from a fully observable model. successors(s, a)
/// yields Transition entries whose probabilities sum to one.
template <class M>
concept MdpModel = requires(const M& m, int s, int a) {
  { m.num_states() } -> std::convertible_to<int>;
  { m.num_actions() } -> std::convertible_to<int>;
  { m.discount() } -> std::convertible_to<double>;
  { m.reward(s, a) } -> std::convertible_to<double>;
  { m.successors(s, a) } -> std::ranges::input_range;
};

/// Adds the observation model Pr(o | s') (action independent).
template <class M>
concept PomdpModel = MdpModel<M> && requires(const M& m, int o, int s) {
  { m.num_observations() } -> std::convertible_to<int>;
  { m.observation_prob(o, s) } -> std::convertible_to<double>;
};

/// Explicit table POMDP: sparse transition rows, dense reward and
/// observation tables.
class TabularPomdp {
 public:
  TabularPomdp() = default;
  TabularPomdp(int states, int actions, int observations, double discount)
      : states_(states),
        actions_(actions),
        observations_(observations),
        discount_(discount),
        rows_(static_cast<std::size_t>(states) * actions),
        rewards_(static_cast<std::size_t>(states) * actions, 0.0),
        obs_(static_cast<std::size_t>(states) * observations, 0.0) {
    if (states <= 0 || actions <= 0 || observations < 0) throw std::invalid_argument("model sizes must be positive");
    if (!(discount > 0.0 && discount < 1.0)) throw std::invalid_argument("discount must lie in (0, 1)");
  }

  int num_states() const { return states_; }
  int num_actions() const { return actions_; }
  int num_observations() const { return observations_; }
  double discount() const { return discount_; }

  std::span<const Transition> successors(int s, int a) const { return rows_[row(s, a)]; }
  double reward(int s, int a) const { return rewards_[row(s, a)]; }
  double observation_prob(int o, int s) const {
    return obs_[static_cast<std::size_t>(s) * observations_ + static_cast<std::size_t>(o)];
  }

  void set_successors(int s, int a, std::vector<Transition> row_entries) { rows_[row(s, a)] = std::move(row_entries); }
  void set_reward(int s, int a, double r) { rewards_[row(s, a)] = r; }
  void set_observation_prob(int o, int s, double p) {
    obs_[static_cast<std::size_t>(s) * observations_ + static_cast<std::size_t>(o)] = p;
  }

  /// Throws std::logic_error naming the first row that is not a
  /// probability distribution within `tol`.
  void validate(double tol = 1e-12) const {
    for (int s = 0; s < states_; ++s) {
      for (int a = 0; a < actions_; ++a) {
        double sum = 0.0;
        for (const auto& t : successors(s, a)) {
          if (t.next < 0 || t.next >= states_) throw std::logic_error("transition target out of range");
          if (!(t.prob >= 0.0)) throw std::logic_error("negative transition probability");
          sum += t.prob;
        }
        if (std::abs(sum - 1.0) > tol) {
          throw std::logic_error("transition row (" + std::to_string(s) + ", " + std::to_string(a) + ") sums to " +
                                 std::to_string(sum));
        }
        if (!std::isfinite(reward(s, a))) throw std::logic_error("non-finite reward");
      }
      if (observations_ > 0) {
        double sum = 0.0;
        for (int o = 0; o < observations_; ++o) {
          const double p = observation_prob(o, s);
          if (!(p >= 0.0)) throw std::logic_error("negative observation probability");
          sum += p;
        }
        if (std::abs(sum - 1.0) > tol) throw std::logic_error("observation row " + std::to_string(s) + " does not sum to 1");
      }
    }
  }

 private:
  std::size_t row(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(actions_) + static_cast<std::size_t>(a);
  }

  int states_ = 0;
  int actions_ = 0;
  int observations_ = 0;
  double discount_ = 0.95;
  std::vector<std::vector<Transition>> rows_;
  std::vector<double> rewards_;
  std::vector<double> obs_;
};

static_assert(PomdpModel<TabularPomdp>);

}  // namespace crosswalk

#endif  // CROSSWALK__TABULAR_MODEL_HPP_
