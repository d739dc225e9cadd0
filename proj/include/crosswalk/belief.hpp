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

#ifndef CROSSWALK__BELIEF_HPP_
#define CROSSWALK__BELIEF_HPP_

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crosswalk/tabular_model.hpp"

namespace crosswalk {

/// Probability vector over a discrete state space. Construction checks
/// non-negativity and normalisation to 1e-9.
class Belief {
 public:
  static constexpr double kNormTolerance = 1e-9;

  Belief() = default;
  explicit Belief(std::vector<double> probabilities) : p_(std::move(probabilities)) { check(); }

  static Belief uniform(int states) {
    if (states <= 0) throw std::invalid_argument("belief needs at least one state");
    return Belief(std::vector<double>(static_cast<std::size_t>(states), 1.0 / states));
  }
  static Belief point_mass(int states, int state) {
    std::vector<double> p(static_cast<std::size_t>(states), 0.0);
    p.at(static_cast<std::size_t>(state)) = 1.0;
    return Belief(std::move(p));
  }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> probabilities() const { return p_; }

  double sum() const { return std::accumulate(p_.begin(), p_.end(), 0.0); }

  /// Shannon entropy in nats.
  double entropy() const {
    double h = 0.0;
    for (double x : p_) {
      if (x > 0.0) h -= x * std::log(x);
    }
    return h;
  }

  friend bool operator==(const Belief&, const Belief&) = default;

 private:
  void check() const {
    if (p_.empty()) throw std::invalid_argument("empty belief");
    for (double x : p_) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("belief entries must be finite and non-negative");
    }
    if (std::abs(sum() - 1.0) > kNormTolerance) throw std::invalid_argument("belief is not normalised");
  }

  std::vector<double> p_;
};

/// The observation has zero likelihood under the predicted belief.
class ZeroPosteriorError : public std::runtime_error {
 public:
  explicit ZeroPosteriorError(int observation)
      : std::runtime_error("belief update: observation " + std::to_string(observation) +
                           " has zero probability under the predicted belief"),
        observation_(observation) {}
  int observation() const { return observation_; }

 private:
  int observation_;
};

template <PomdpModel M>
Belief init_belief(const M& model) {
  return Belief::uniform(model.num_states());
}

/// Exact discrete Bayes filter:
///   b'(s') ∝ O(o | s') * sum_s T(s' | s, a) b(s), then normalise.
template <PomdpModel M>
Belief belief_update(const M& model, const Belief& b, int action, int observation) {
  const int n = model.num_states();
  if (b.size() != static_cast<std::size_t>(n)) throw std::invalid_argument("belief size does not match model");
  if (action < 0 || action >= model.num_actions()) throw std::out_of_range("belief update: invalid action");
  if (observation < 0 || observation >= model.num_observations()) throw std::out_of_range("belief update: invalid observation");

  std::vector<double> predicted(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    const double w = b[static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    for (const auto& t : model.successors(s, action)) predicted[static_cast<std::size_t>(t.next)] += t.prob * w;
  }
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    auto& x = predicted[static_cast<std::size_t>(s)];
    x *= model.observation_prob(observation, s);
    total += x;
  }
  if (!(total > 0.0)) throw ZeroPosteriorError(observation);
  for (auto& x : predicted) x /= total;
  return Belief(std::move(predicted));
}

}  // namespace crosswalk

#endif  // CROSSWALK__BELIEF_HPP_
