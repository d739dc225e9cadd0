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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "crosswalk/belief.hpp"
#include "crosswalk/harness.hpp"
#include "crosswalk/policies.hpp"
#include "oracles.hpp"

using namespace crosswalk;

namespace {

const SolvedModel& solved() {
  static const SolvedModel s = solve_model(ModelParams{});
  return s;
}

double l1(std::span<const double> a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

}  // namespace

TEST(InitBelief, Uniform) {
  const auto b = init_belief(solved().model);
  ASSERT_EQ(b.size(), 2662u);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b[i], 1.0 / 2662);
  EXPECT_NEAR(b.sum(), 1.0, 1e-12);
  EXPECT_NEAR(b.entropy(), std::log(2662.0), 1e-9);
}

TEST(BeliefUpdate, TerminalPointMassIsFixed) {
  const auto& m = solved().model;
  const int s = DiscreteState{4, kTerminalDistanceBin, false}.index();
  const auto b = Belief::point_mass(kNumStates, s);
  const auto post = belief_update(m, b, 3, Obs{2, false}.index());
  EXPECT_EQ(post, b);
}

TEST(BeliefUpdate, TwoStateToy) {
  TabularPomdp m(2, 1, 2, 0.9);
  m.set_successors(0, 0, {{0, 1.0}});
  m.set_successors(1, 0, {{1, 1.0}});
  m.set_observation_prob(0, 0, 0.8);
  m.set_observation_prob(1, 0, 0.2);
  m.set_observation_prob(0, 1, 0.2);
  m.set_observation_prob(1, 1, 0.8);
  const auto post = belief_update(m, Belief::uniform(2), 0, 0);
  EXPECT_NEAR(post[0], 0.8, 1e-15);
  EXPECT_NEAR(post[1], 0.2, 1e-15);
}

TEST(BeliefUpdate, MatchesPathEnumeration) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = oracle::random_pomdp(rng, 3, 2, 3, 0.9);
    std::uniform_int_distribution<int> ua(0, 1), uo(0, 2);
    std::vector<int> acts, obs;
    Belief b = Belief::uniform(3);
    for (int k = 0; k < 6; ++k) {
      acts.push_back(ua(rng));
      obs.push_back(uo(rng));
      b = belief_update(m, b, acts.back(), obs.back());
      const auto ref = oracle::path_enumeration_posterior(m, std::vector<double>(3, 1.0 / 3), acts, obs);
      EXPECT_LT(l1(b.probabilities(), ref), 1e-12);
    }
  }
}

TEST(BeliefUpdate, ZeroLikelihoodThrows) {
  TabularPomdp m(2, 1, 2, 0.9);
  m.set_successors(0, 0, {{0, 1.0}});
  m.set_successors(1, 0, {{1, 1.0}});
  m.set_observation_prob(0, 0, 1.0);
  m.set_observation_prob(0, 1, 1.0);
  EXPECT_THROW(belief_update(m, Belief::uniform(2), 0, 1), ZeroPosteriorError);
  EXPECT_THROW(belief_update(m, Belief::uniform(2), 1, 0), std::out_of_range);
  EXPECT_THROW(belief_update(m, Belief::uniform(3), 0, 0), std::invalid_argument);
}

TEST(BeliefType, RejectsBadVectors) {
  EXPECT_THROW(Belief(std::vector<double>{0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(Belief(std::vector<double>{1.5, -0.5}), std::invalid_argument);
  EXPECT_THROW(Belief(std::vector<double>{}), std::invalid_argument);
}

TEST(PomdpStep, UniformBeliefGivesDeterministicScale) {
  const auto b = init_belief(solved().model);
  const SensorObservation sensor{500, 2, false};
  const auto a = pomdp_step(solved().model, solved().policy, b, sensor);
  const auto again = pomdp_step(solved().model, solved().policy, b, sensor);
  EXPECT_GE(a.action.index, 0);
  EXPECT_LE(a.action.index, 10);
  EXPECT_EQ(a.action.index, again.action.index);
  EXPECT_EQ(a.posterior, again.posterior);
}

TEST(PomdpStep, CrossingInYieldZoneStops) {
  for (int d = 60; d < 80; ++d) {
    for (int v = 0; v < kSpeedBins; ++v) {
      const auto b = Belief::point_mass(kNumStates, DiscreteState{v, d, true}.index());
      EXPECT_EQ(best_action(solved().policy, b.probabilities()), 0) << "v=" << v << " d=" << d;
    }
  }
}

TEST(PomdpStep, RepeatedDetectionsRaiseCrossingMass) {
  // outside the occlusion zone detections are informative (0.8 vs 0.5)
  const auto& m = solved().model;
  Belief b = anchor_to_odometry(init_belief(m), 0, 90);
  double prev = crossing_probability(b);
  for (int k = 0; k < 15; ++k) {
    b = belief_update(m, b, 0, Obs{0, true}.index());
    const double p = crossing_probability(b);
    if (prev < 1.0) {
      EXPECT_GT(p, prev);
    }
    prev = p;
  }
}

TEST(Anchor, KeepsCrossingMarginal) {
  const auto& m = solved().model;
  Belief b = init_belief(m);
  b = belief_update(m, b, 5, Obs{3, true}.index());
  const auto a = anchor_to_odometry(b, 4, 33);
  EXPECT_NEAR(crossing_probability(a), crossing_probability(b), 1e-12);
  const double mass = a[DiscreteState{4, 33, true}.index()] + a[DiscreteState{4, 33, false}.index()];
  EXPECT_NEAR(mass, 1.0, 1e-12);
}

TEST(Executor, ResetsOnImpossibleObservation) {
  ModelParams p;
  p.detect_given_clear = 0.0;  // a detection has zero likelihood everywhere
  p.detect_given_crossing = 0.0;
  p.detection_blind_in_occlusion_zone = false;
  const CrosswalkPomdp m(p);
  const auto policy = solve_model(p).policy;
  PomdpExecutor ex(m, policy, true);
  ex.decide({0, 0, false}, PomdpExecutor::Odometry{0, 90});
  ex.decide({0, 0, false}, PomdpExecutor::Odometry{0, 90});
  EXPECT_EQ(ex.zero_posterior_resets(), 0);
  ex.decide({0, 0, true}, PomdpExecutor::Odometry{0, 90});
  EXPECT_EQ(ex.zero_posterior_resets(), 1);
  EXPECT_NEAR(ex.belief().sum(), 1.0, 1e-9);
  EXPECT_NEAR(crossing_probability(ex.belief()), 0.5, 1e-12);
}

TEST(Baseline, Examples) {
  EXPECT_DOUBLE_EQ(baseline_scale(0), 1.0);
  EXPECT_DOUBLE_EQ(baseline_scale(1800), 0.0);
  EXPECT_DOUBLE_EQ(baseline_scale(5000), 0.0);
  EXPECT_NEAR(baseline_scale(900), 4.0 / 9.0, 1e-15);
}

TEST(Oracle, Examples) {
  EXPECT_EQ(oracle_scale(false, 10.0, 40.0, 10.0), 1.0);
  EXPECT_EQ(oracle_scale(true, 41.0, 40.0, 10.0), 1.0);
  double prev = 1.0;
  for (double s = 0.0; s < 40.0; s += 0.5) {
    const double sc = oracle_scale(true, s, 40.0, 10.0);
    EXPECT_LE(sc, prev);
    const double v = sc * 10.0;
    EXPECT_LE(v * v / (2 * 3.0), 40.0 - s);
    prev = sc;
  }
  EXPECT_EQ(oracle_scale(true, 39.0, 40.0, 10.0), 0.0);
}

TEST(PolicyKind, Parse) {
  EXPECT_EQ(parse_policy_kind("pomdp"), PolicyKind::kPomdp);
  EXPECT_EQ(to_string(PolicyKind::kBaseline), "baseline");
  EXPECT_THROW(parse_policy_kind("greedy"), std::invalid_argument);
}
