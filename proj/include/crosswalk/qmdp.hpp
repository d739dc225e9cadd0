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

#ifndef CROSSWALK__QMDP_HPP_
#define CROSSWALK__QMDP_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crosswalk/tabular_model.hpp"

namespace crosswalk {

/// Row-major |S| x |A| action-value table.
class QTable {
 public:
  QTable() = default;
  QTable(int states, int actions, double fill = 0.0)
      : states_(states), actions_(actions), values_(static_cast<std::size_t>(states) * actions, fill) {}
  QTable(int states, int actions, std::vector<double> values)
      : states_(states), actions_(actions), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(states) * actions) throw std::invalid_argument("QTable size mismatch");
  }

  int num_states() const { return states_; }
  int num_actions() const { return actions_; }
  double& operator()(int s, int a) { return values_[index(s, a)]; }
  double operator()(int s, int a) const { return values_[index(s, a)]; }
  const std::vector<double>& values() const { return values_; }

  double state_value(int s) const {
    const auto first = values_.begin() + static_cast<std::ptrdiff_t>(index(s, 0));
    return *std::max_element(first, first + actions_);
  }

  double max_abs_difference(const QTable& other) const {
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) m = std::max(m, std::abs(values_[i] - other.values_[i]));
    return m;
  }

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(actions_) + static_cast<std::size_t>(a);
  }
  int states_ = 0;
  int actions_ = 0;
  std::vector<double> values_;
};

/// Thrown when value iteration runs out of sweeps; carries the last residual.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(double residual, int iterations)
      : std::runtime_error("value iteration did not converge after " + std::to_string(iterations) +
                           " sweeps (residual " + std::to_string(residual) + ")"),
        residual_(residual),
        iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

struct ValueIterationResult {
  QTable q;
  int iterations = 0;
  double residual = 0.0;                 ///< sup-norm change of the final sweep
  std::vector<double> sweep_residuals;   ///< one entry per sweep
};

/// One synchronous Bellman backup: every entry of `next` reads only `current`.
template <MdpModel M>
void bellman_sweep(const M& model, const QTable& current, QTable& next) {
  const int n_states = model.num_states();
  const int n_actions = model.num_actions();
  std::vector<double> value(static_cast<std::size_t>(n_states));
  for (int s = 0; s < n_states; ++s) value[static_cast<std::size_t>(s)] = current.state_value(s);
  const double gamma = model.discount();
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double expected = 0.0;
      for (const auto& t : model.successors(s, a)) expected += t.prob * value[static_cast<std::size_t>(t.next)];
      next(s, a) = model.reward(s, a) + gamma * expected;
    }
  }
}

/// Synchronous (Jacobi) value iteration from Q = 0 until the sup-norm change
/// between sweeps is at most `tolerance`.
template <MdpModel M>
ValueIterationResult value_iteration(const M& model, double tolerance = 1e-6, int max_iters = 10000) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("value_iteration: tolerance must be positive");
  if (!(model.discount() < 1.0)) throw std::invalid_argument("value_iteration: discount must be below 1");
  ValueIterationResult result;
  QTable current(model.num_states(), model.num_actions());
  QTable next(model.num_states(), model.num_actions());
  for (int it = 1; it <= max_iters; ++it) {
    bellman_sweep(model, current, next);
    const double residual = next.max_abs_difference(current);
    std::swap(current, next);
    result.sweep_residuals.push_back(residual);
    if (residual <= tolerance) {
      result.q = std::move(current);
      result.iterations = it;
      result.residual = residual;
      return result;
    }
  }
  throw NonConvergenceError(result.sweep_residuals.empty() ? 0.0 : result.sweep_residuals.back(), max_iters);
}

/// Sup-norm Bellman residual |BQ - Q| of an arbitrary table.
template <MdpModel M>
double bellman_residual(const M& model, const QTable& q) {
  QTable backed(q.num_states(), q.num_actions());
  bellman_sweep(model, q, backed);
  return backed.max_abs_difference(q);
}

/// One alpha vector per action, labelled by the action's speed scale.
struct AlphaVectorPolicy {
  std::vector<double> action_labels;
  std::vector<std::vector<double>> alphas;  // alphas[a][s]

  int num_actions() const { return static_cast<int>(alphas.size()); }
  int num_states() const { return alphas.empty() ? 0 : static_cast<int>(alphas.front().size()); }
};

/// QMDP construction: alpha_a(s) = Q(s, a).
inline AlphaVectorPolicy extract_alphas(const QTable& q, std::vector<double> labels = {}) {
  if (labels.empty()) {
    labels.resize(static_cast<std::size_t>(q.num_actions()));
    std::iota(labels.begin(), labels.end(), 0.0);
  }
  if (labels.size() != static_cast<std::size_t>(q.num_actions())) throw std::invalid_argument("one label per action required");
  AlphaVectorPolicy policy;
  policy.action_labels = std::move(labels);
  policy.alphas.assign(static_cast<std::size_t>(q.num_actions()), std::vector<double>(static_cast<std::size_t>(q.num_states())));
  for (int s = 0; s < q.num_states(); ++s) {
    for (int a = 0; a < q.num_actions(); ++a) {
      if (!std::isfinite(q(s, a))) throw std::domain_error("extract_alphas: non-finite Q value");
      policy.alphas[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)] = q(s, a);
    }
  }
  return policy;
}

/// argmax_a alpha_a . weights with ties going to the lowest index. Does not
/// check normalisation, so any positive multiple of a belief gives the same
/// answer.
inline int argmax_alpha(const AlphaVectorPolicy& policy, std::span<const double> weights) {
  if (policy.alphas.empty()) throw std::invalid_argument("empty policy");
  if (weights.size() != policy.alphas.front().size()) throw std::invalid_argument("belief size does not match policy");
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < policy.alphas.size(); ++a) {
    double v = 0.0;
    const auto& alpha = policy.alphas[a];
    for (std::size_t s = 0; s < weights.size(); ++s) v += alpha[s] * weights[s];
    if (v > best_value) {
      best_value = v;
      best = static_cast<int>(a);
    }
  }
  return best;
}

/// QMDP action selection for a normalised belief.
inline int best_action(const AlphaVectorPolicy& policy, std::span<const double> belief) {
  const double sum = std::accumulate(belief.begin(), belief.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("best_action: belief is not normalised");
  return argmax_alpha(policy, belief);
}

// Policy file, version 1 (text, one record per line):
//   qmdp-alpha-policy 1
//   states <S>
//   actions <A>
//   labels <l_0> ... <l_{A-1}>
//   alpha <a> <v_0> ... <v_{S-1}>      (A lines, a = 0..A-1 in order)
// Numbers are written in shortest round-trip form, so load(save(p)) == p.

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double read_double(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) throw std::runtime_error(std::string("policy file: missing ") + what);
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw std::runtime_error(std::string("policy file: bad number for ") + what + ": '" + token + "'");
  }
  return v;
}

inline void expect_word(std::istream& in, const std::string& word) {
  std::string token;
  if (!(in >> token) || token != word) throw std::runtime_error("policy file: expected '" + word + "', got '" + token + "'");
}

}  // namespace detail

inline constexpr int kPolicyFormatVersion = 1;

inline void write_policy(std::ostream& out, const AlphaVectorPolicy& policy) {
  out << "qmdp-alpha-policy " << kPolicyFormatVersion << '\n';
  out << "states " << policy.num_states() << '\n';
  out << "actions " << policy.num_actions() << '\n';
  out << "labels";
  for (double l : policy.action_labels) out << ' ' << detail::format_double(l);
  out << '\n';
  for (int a = 0; a < policy.num_actions(); ++a) {
    out << "alpha " << a;
    for (double v : policy.alphas[static_cast<std::size_t>(a)]) out << ' ' << detail::format_double(v);
    out << '\n';
  }
}

inline AlphaVectorPolicy read_policy(std::istream& in) {
  detail::expect_word(in, "qmdp-alpha-policy");
  int version = 0;
  if (!(in >> version) || version != kPolicyFormatVersion) {
    throw std::runtime_error("policy file: unsupported format version " + std::to_string(version));
  }
  int states = 0, actions = 0;
  detail::expect_word(in, "states");
  if (!(in >> states) || states <= 0) throw std::runtime_error("policy file: bad state count");
  detail::expect_word(in, "actions");
  if (!(in >> actions) || actions <= 0) throw std::runtime_error("policy file: bad action count");
  AlphaVectorPolicy policy;
  detail::expect_word(in, "labels");
  for (int a = 0; a < actions; ++a) policy.action_labels.push_back(detail::read_double(in, "label"));
  policy.alphas.assign(static_cast<std::size_t>(actions), std::vector<double>(static_cast<std::size_t>(states)));
  for (int a = 0; a < actions; ++a) {
    detail::expect_word(in, "alpha");
    int idx = -1;
    if (!(in >> idx) || idx != a) throw std::runtime_error("policy file: alpha rows out of order");
    for (int s = 0; s < states; ++s) {
      const double v = detail::read_double(in, "alpha entry");
      if (!std::isfinite(v)) throw std::runtime_error("policy file: non-finite alpha entry");
      policy.alphas[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)] = v;
    }
  }
  return policy;
}

inline void save_policy(const std::filesystem::path& path, const AlphaVectorPolicy& policy) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write policy file '" + path.string() + "'");
  write_policy(out, policy);
  if (!out) throw std::runtime_error("error while writing policy file '" + path.string() + "'");
}

inline AlphaVectorPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open policy file '" + path.string() + "'");
  try {
    return read_policy(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace crosswalk

#endif  // CROSSWALK__QMDP_HPP_
