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
#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "crosswalk/qmdp.hpp"
#include "oracles.hpp"

using namespace crosswalk;

TEST(ValueIteration, ZeroRewardsGiveZeroQ) {
  std::mt19937_64 rng(1);
  auto m = oracle::random_pomdp(rng, 4, 2, 0, 0.9);
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) m.set_reward(s, a, 0.0);
  const auto res = value_iteration(m);
  for (double q : res.q.values()) EXPECT_EQ(q, 0.0);
  EXPECT_EQ(res.iterations, 1);
}

TEST(ValueIteration, SelfLoopGeometricSeries) {
  TabularPomdp m(1, 1, 0, 0.9);
  m.set_successors(0, 0, {{0, 1.0}});
  m.set_reward(0, 0, 1.0);
  const double tol = 1e-6;
  const auto res = value_iteration(m, tol);
  // stopping when the sweep change is below tol leaves at most tol*g/(1-g)
  EXPECT_NEAR(res.q(0, 0), 10.0, tol * 0.9 / 0.1 + 1e-12);
}

TEST(ValueIteration, MatchesFiniteHorizonOracle) {
  std::mt19937_64 rng(2);
  const double tol = 1e-6, gamma = 0.9;
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = oracle::random_pomdp(rng, 5, 2, 0, gamma);
    double rmax = 0.0;
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 2; ++a) rmax = std::max(rmax, std::abs(m.reward(s, a)));
    const int horizon = static_cast<int>(std::ceil(std::log(tol * 1e-3 * (1 - gamma) / rmax) / std::log(gamma)));
    const auto q_ref = oracle::finite_horizon_q(m, horizon);
    const auto res = value_iteration(m, tol);
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 2; ++a) EXPECT_NEAR(res.q(s, a), q_ref[s][a], tol * gamma / (1 - gamma));
  }
}

TEST(ValueIteration, ResidualsShrinkGeometrically) {
  std::mt19937_64 rng(3);
  const auto m = oracle::random_pomdp(rng, 6, 3, 0, 0.9);
  const auto res = value_iteration(m, 1e-9);
  for (std::size_t k = 1; k < res.sweep_residuals.size(); ++k) {
    // contraction by g, up to rounding in Q values of order 100
    EXPECT_LE(res.sweep_residuals[k], 0.9 * res.sweep_residuals[k - 1] + 1e-12);
  }
  EXPECT_LE(bellman_residual(m, res.q), 1e-9);
}

TEST(ValueIteration, ThrowsWhenOutOfSweeps) {
  TabularPomdp m(1, 1, 0, 0.99);
  m.set_successors(0, 0, {{0, 1.0}});
  m.set_reward(0, 0, 1.0);
  try {
    value_iteration(m, 1e-12, 5);
    FAIL() << "expected NonConvergenceError";
  } catch (const NonConvergenceError& e) {
    EXPECT_EQ(e.iterations(), 5);
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(ExtractAlphas, ColumnExtraction) {
  const QTable q(2, 2, std::vector<double>{1, 2, 3, 4});
  const auto p = extract_alphas(q);
  EXPECT_EQ(p.alphas[0], (std::vector<double>{1, 3}));
  EXPECT_EQ(p.alphas[1], (std::vector<double>{2, 4}));
  const auto z = extract_alphas(QTable(3, 2));
  for (const auto& a : z.alphas)
    for (double v : a) EXPECT_EQ(v, 0.0);
}

TEST(ExtractAlphas, MaxEqualsStateValue) {
  std::mt19937_64 rng(4);
  const auto m = oracle::random_pomdp(rng, 7, 3, 0, 0.9);
  const auto res = value_iteration(m);
  const auto p = extract_alphas(res.q);
  for (int s = 0; s < 7; ++s) {
    double best = -1e300;
    for (int a = 0; a < 3; ++a) best = std::max(best, p.alphas[a][s]);
    EXPECT_EQ(best, res.q.state_value(s));
  }
}

TEST(BestAction, PointMassIsGreedy) {
  const QTable q(3, 3, std::vector<double>{1, 5, 2, 7, 0, 7, -1, -2, -3});
  const auto p = extract_alphas(q);
  EXPECT_EQ(best_action(p, std::vector<double>{1, 0, 0}), 1);
  EXPECT_EQ(best_action(p, std::vector<double>{0, 1, 0}), 0);  // tie 7/7: lowest index
  EXPECT_EQ(best_action(p, std::vector<double>{0, 0, 1}), 0);
}

TEST(BestAction, TieGoesToLowestIndex) {
  AlphaVectorPolicy p{{0.0, 1.0}, {{0.0, 0.0}, {1.0, -1.0}}};
  EXPECT_EQ(best_action(p, std::vector<double>{0.5, 0.5}), 0);
}

TEST(BestAction, MatchesExhaustiveInnerProducts) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0), r(-5.0, 5.0);
  AlphaVectorPolicy p;
  p.alphas.assign(11, std::vector<double>(6));
  for (auto& a : p.alphas)
    for (auto& v : a) v = r(rng);
  p.action_labels.assign(11, 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> b(6);
    double sum = 0.0;
    for (auto& x : b) sum += (x = u(rng));
    for (auto& x : b) x /= sum;
    sum = 0.0;
    for (double x : b) sum += x;
    if (std::abs(sum - 1.0) > 1e-12) continue;
    int best = 0;
    double best_v = -1e300;
    for (int a = 0; a < 11; ++a) {
      double v = 0.0;
      for (int s = 0; s < 6; ++s) v += p.alphas[a][s] * b[s];
      if (v > best_v) best_v = v, best = a;
    }
    EXPECT_EQ(best_action(p, b), best);
  }
}

TEST(BestAction, RejectsUnnormalisedBelief) {
  AlphaVectorPolicy p{{0.0}, {{1.0, 2.0}}};
  EXPECT_THROW(best_action(p, std::vector<double>{0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(best_action(p, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(PolicyFile, RoundTripIsExact) {
  std::mt19937_64 rng(6);
  const auto m = oracle::random_pomdp(rng, 9, 4, 0, 0.95);
  const auto p = extract_alphas(value_iteration(m).q, {0.0, 0.1, 0.2, 1.0 / 3.0});
  std::stringstream buf;
  write_policy(buf, p);
  const auto back = read_policy(buf);
  EXPECT_EQ(back.action_labels, p.action_labels);
  EXPECT_EQ(back.alphas, p.alphas);

  const auto file = std::filesystem::temp_directory_path() / "crosswalk_policy_roundtrip.policy";
  save_policy(file, p);
  EXPECT_EQ(load_policy(file).alphas, p.alphas);
  std::filesystem::remove(file);
}

TEST(PolicyFile, RejectsMalformedInput) {
  std::istringstream bad_version("qmdp-alpha-policy 2\n");
  EXPECT_THROW(read_policy(bad_version), std::runtime_error);
  std::istringstream truncated("qmdp-alpha-policy 1\nstates 2\nactions 1\nlabels 0\nalpha 0 1.5\n");
  EXPECT_THROW(read_policy(truncated), std::runtime_error);
  std::istringstream junk("qmdp-alpha-policy 1\nstates 1\nactions 1\nlabels 0\nalpha 0 abc\n");
  EXPECT_THROW(read_policy(junk), std::runtime_error);
  EXPECT_THROW(load_policy("/nonexistent/dir/x.policy"), std::runtime_error);
}
