// Copyright 2026 The CAGE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Per-step game data model and the closed-form agent-side quantities:
// the KL-tilted best response, agent and principal utilities, the response
// Jacobian, principal gradients, and the individual-rationality slack.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cage/errors.hpp"

namespace cage {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kSimplexSumTolerance = 1e-12;
inline constexpr double kFullSupportFloor = 1e-12;
inline constexpr double kBoxTolerance = 1e-12;

/// Probability vector over the N candidates of one decoding step.
class PolicySimplex {
 public:
  PolicySimplex() = default;

  explicit PolicySimplex(Vector probs) : probs_(std::move(probs)) {
    if (probs_.size() == 0) throw DomainError("policy must be nonempty");
    if (!probs_.allFinite()) throw DomainError("policy has non-finite entries");
    if ((probs_.array() < 0.0).any()) throw DomainError("policy has negative entries");
    if (std::abs(probs_.sum() - 1.0) > kSimplexSumTolerance) {
      throw DomainError("policy does not sum to 1 (sum=" + std::to_string(probs_.sum()) + ")");
    }
  }

  /// Normalizes exp(log_weights) with a max shift. Valid by construction.
  static PolicySimplex from_log_weights(const Vector& log_weights) {
    if (log_weights.size() == 0) throw DomainError("policy must be nonempty");
    if (!log_weights.allFinite()) throw DomainError("non-finite log-weights");
    const double shift = log_weights.maxCoeff();
    Vector p = (log_weights.array() - shift).exp().matrix();
    p /= p.sum();
    return PolicySimplex(std::move(p), Trusted{});
  }

  /// Rescales a nonnegative vector with positive mass onto the simplex.
  static PolicySimplex normalize(const Vector& weights) {
    if (weights.size() == 0 || !weights.allFinite() || (weights.array() < 0.0).any()) {
      throw DomainError("cannot normalize: weights must be finite and nonnegative");
    }
    const double total = weights.sum();
    if (!(total > 0.0)) throw DomainError("cannot normalize: zero total mass");
    return PolicySimplex(weights / total, Trusted{});
  }

  static PolicySimplex uniform(Index n) {
    if (n <= 0) throw DomainError("policy must be nonempty");
    return PolicySimplex(Vector::Constant(n, 1.0 / static_cast<double>(n)), Trusted{});
  }

  const Vector& probs() const noexcept { return probs_; }
  Index size() const noexcept { return probs_.size(); }
  double operator[](Index i) const { return probs_[i]; }

  bool full_support(double floor = kFullSupportFloor) const {
    return probs_.size() > 0 && probs_.minCoeff() >= floor;
  }

 private:
  struct Trusted {};
  PolicySimplex(Vector probs, Trusted) : probs_(std::move(probs)) {}

  Vector probs_;
};

/// User preference over the J objectives.
class PreferenceWeights {
 public:
  PreferenceWeights() = default;

  explicit PreferenceWeights(Vector w) : w_(std::move(w)) {
    if (w_.size() == 0) throw DomainError("preference weights must be nonempty");
    if (!w_.allFinite() || (w_.array() < 0.0).any()) {
      throw DomainError("preference weights must be finite and nonnegative");
    }
    if (!(w_.maxCoeff() > 0.0)) {
      throw DomainError("preference weights need at least one positive entry");
    }
  }

  const Vector& values() const noexcept { return w_; }
  Index size() const noexcept { return w_.size(); }
  double operator[](Index j) const { return w_[j]; }

 private:
  Vector w_;
};

/// One decoding-step game: base policy, per-principal rewards, weights and
/// temperature. Immutable once built; every weighted reward w^j q^j must be
/// nonnegative so that the incentive box [0, w^j q^j] is well defined.
class GameInstance {
 public:
  GameInstance(PolicySimplex pi0, std::vector<Vector> rewards, PreferenceWeights weights,
               double tau)
      : pi0_(std::move(pi0)),
        rewards_(std::move(rewards)),
        weights_(std::move(weights)),
        tau_(tau) {
    if (!(tau_ > 0.0) || !std::isfinite(tau_)) throw DomainError("tau must be positive and finite");
    const Index n = pi0_.size();
    if (n < 2) throw DomainError("need at least two candidates");
    if (!pi0_.full_support()) throw DomainError("base policy must have full support");
    if (rewards_.empty()) throw DomainError("need at least one principal");
    if (static_cast<Index>(rewards_.size()) != weights_.size()) {
      throw DomainError("weights and rewards disagree on the number of principals");
    }
    caps_.reserve(rewards_.size());
    for (std::size_t j = 0; j < rewards_.size(); ++j) {
      const Vector& q = rewards_[j];
      if (q.size() != n) throw DomainError("reward vector " + std::to_string(j) + " has wrong length");
      if (!q.allFinite()) throw DomainError("reward vector " + std::to_string(j) + " is not finite");
      Vector cap = weights_[static_cast<Index>(j)] * q;
      if ((cap.array() < 0.0).any()) {
        throw ConstraintError("weighted reward of principal " + std::to_string(j) +
                              " has negative entries; normalize rewards first");
      }
      caps_.push_back(std::move(cap));
    }
    log_pi0_ = pi0_.probs().array().log().matrix();
  }

  Index num_candidates() const noexcept { return pi0_.size(); }
  int num_principals() const noexcept { return static_cast<int>(rewards_.size()); }
  double tau() const noexcept { return tau_; }
  const PolicySimplex& base_policy() const noexcept { return pi0_; }
  const Vector& log_base_policy() const noexcept { return log_pi0_; }
  const std::vector<Vector>& rewards() const noexcept { return rewards_; }
  const PreferenceWeights& weights() const noexcept { return weights_; }

  /// Upper end of principal j's incentive box, w^j q^j.
  const Vector& incentive_cap(int j) const { return caps_.at(static_cast<std::size_t>(j)); }

 private:
  PolicySimplex pi0_;
  std::vector<Vector> rewards_;
  PreferenceWeights weights_;
  double tau_;
  std::vector<Vector> caps_;
  Vector log_pi0_;
};

/// All principals' incentives plus their elementwise sum.
struct IncentiveProfile {
  std::vector<Vector> per_principal;
  Vector aggregate;

  static IncentiveProfile from(std::vector<Vector> per_principal) {
    IncentiveProfile p;
    if (per_principal.empty()) throw DomainError("incentive profile needs at least one principal");
    p.aggregate = Vector::Zero(per_principal.front().size());
    for (const auto& y : per_principal) {
      if (y.size() != p.aggregate.size()) throw DomainError("incentive vectors differ in length");
      p.aggregate += y;
    }
    p.per_principal = std::move(per_principal);
    return p;
  }

  static IncentiveProfile zeros(const GameInstance& g) {
    return from(std::vector<Vector>(static_cast<std::size_t>(g.num_principals()),
                                    Vector::Zero(g.num_candidates())));
  }

  int num_principals() const noexcept { return static_cast<int>(per_principal.size()); }

  /// Sum of every principal's incentive except j's, accumulated directly.
  Vector others(int j) const {
    Vector sum = Vector::Zero(aggregate.size());
    for (int i = 0; i < num_principals(); ++i) {
      if (i != j) sum += per_principal[static_cast<std::size_t>(i)];
    }
    return sum;
  }
};

namespace detail {

inline void require_length(const Vector& v, const GameInstance& g, const char* what) {
  if (v.size() != g.num_candidates()) {
    throw DomainError(std::string(what) + " has length " + std::to_string(v.size()) +
                      ", expected " + std::to_string(g.num_candidates()));
  }
}

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw DomainError(std::string(what) + " has non-finite entries");
}

inline void require_principal(int j, const GameInstance& g) {
  if (j < 0 || j >= g.num_principals()) {
    throw DomainError("principal index " + std::to_string(j) + " out of range");
  }
}

// softmax(log pi0 + Y / tau) without input validation.
inline Vector tilt(const Vector& log_pi0, const Vector& Y, double tau) {
  Vector logits = log_pi0 + Y / tau;
  logits.array() -= logits.maxCoeff();
  Vector p = logits.array().exp().matrix();
  p /= p.sum();
  return p;
}

}  // namespace detail

/// Throws ConstraintError unless 0 <= y <= w^j q^j (within kBoxTolerance).
inline void check_incentive_box(int j, const Vector& y, const GameInstance& g) {
  detail::require_principal(j, g);
  detail::require_length(y, g, "incentive");
  detail::require_finite(y, "incentive");
  const Vector& cap = g.incentive_cap(j);
  for (Index i = 0; i < y.size(); ++i) {
    if (y[i] < -kBoxTolerance || y[i] > cap[i] + kBoxTolerance) {
      throw ConstraintError("incentive of principal " + std::to_string(j) + " leaves its box at " +
                            std::to_string(i) + ": " + std::to_string(y[i]) + " not in [0, " +
                            std::to_string(cap[i]) + "]");
    }
  }
}

/// Componentwise clamp into principal j's box.
inline Vector project_to_box(int j, const Vector& y, const GameInstance& g) {
  detail::require_principal(j, g);
  detail::require_length(y, g, "incentive");
  return y.cwiseMax(0.0).cwiseMin(g.incentive_cap(j));
}

/// pi*(Y) = pi0 * exp(Y / tau) / normalizer, the unique maximizer of
/// pi.Y - tau KL(pi || pi0).
inline PolicySimplex best_response(const Vector& Y, const GameInstance& g) {
  detail::require_length(Y, g, "aggregate incentive");
  detail::require_finite(Y, "aggregate incentive");
  return PolicySimplex::from_log_weights(g.log_base_policy() + Y / g.tau());
}

/// KL(p || ref) with 0 log 0 = 0.
inline double kl_divergence(const Vector& p, const Vector& ref) {
  if (p.size() != ref.size()) throw DomainError("KL arguments differ in length");
  double kl = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (ref[i] <= 0.0) throw DomainError("KL undefined: mass where the reference has none");
    kl += p[i] * std::log(p[i] / ref[i]);
  }
  return kl;
}

/// U(pi; Y) = pi.Y - tau KL(pi || pi0).
inline double agent_utility(const PolicySimplex& pi, const Vector& Y, const GameInstance& g) {
  detail::require_length(pi.probs(), g, "policy");
  detail::require_length(Y, g, "aggregate incentive");
  detail::require_finite(Y, "aggregate incentive");
  return pi.probs().dot(Y) - g.tau() * kl_divergence(pi.probs(), g.base_policy().probs());
}

/// Individual-rationality slack pi*(Y).Y - tau KL(pi*(Y) || pi0).
inline double ir_value(const Vector& Y, const GameInstance& g) {
  return agent_utility(best_response(Y, g), Y, g);
}

/// S(Y) = (Diag(pi) - pi pi^T) / tau, the Jacobian of best_response.
inline Matrix response_jacobian(const Vector& Y, const GameInstance& g) {
  const Vector pi = best_response(Y, g).probs();
  Matrix s = -pi * pi.transpose();
  s.diagonal() += pi;
  return s / g.tau();
}

/// Principal j's objective y -> pi*(Y_minus + y).(w^j q^j - y) with its
/// analytic gradient S(Y)(w^j q^j - y) - pi*(Y). No input validation; the
/// solvers call this in their inner loops.
class PrincipalObjective {
 public:
  PrincipalObjective(const GameInstance& g, int j, Vector others)
      : g_(&g), cap_(&g.incentive_cap(j)), others_(std::move(others)) {}

  double value(const Vector& y) const {
    const Vector pi = detail::tilt(g_->log_base_policy(), others_ + y, g_->tau());
    return pi.dot(*cap_ - y);
  }

  double value_and_gradient(const Vector& y, Vector& grad) const {
    const Vector pi = detail::tilt(g_->log_base_policy(), others_ + y, g_->tau());
    const Vector payoff = *cap_ - y;
    const double f = pi.dot(payoff);
    grad = (pi.array() * (payoff.array() - f)).matrix() / g_->tau() - pi;
    return f;
  }

  /// 1 / pi_i, equalizing the curvature scale across candidates.
  Vector diagonal_metric(const Vector& y) const {
    const Vector pi = detail::tilt(g_->log_base_policy(), others_ + y, g_->tau());
    return pi.cwiseMax(1e-300).cwiseInverse();
  }

  const Vector& others() const noexcept { return others_; }
  const Vector& cap() const noexcept { return *cap_; }

 private:
  const GameInstance* g_;
  const Vector* cap_;
  Vector others_;
};

namespace detail {
inline void check_principal_inputs(int j, const Vector& y, const Vector& others,
                                   const GameInstance& g) {
  check_incentive_box(j, y, g);
  require_length(others, g, "other principals' incentive");
  require_finite(others, "other principals' incentive");
  if ((others.array() < -kBoxTolerance).any()) {
    throw ConstraintError("other principals' aggregate incentive must be nonnegative");
  }
}
}  // namespace detail

/// f_j(y^j; Y^{-j}) = pi*(Y^{-j} + y^j).(w^j q^j - y^j).
inline double principal_utility(int j, const Vector& y, const Vector& others,
                                const GameInstance& g) {
  detail::check_principal_inputs(j, y, others, g);
  return PrincipalObjective(g, j, others).value(y);
}

/// Gradient of principal_utility in y^j.
inline Vector principal_gradient(int j, const Vector& y, const Vector& others,
                                 const GameInstance& g) {
  detail::check_principal_inputs(j, y, others, g);
  Vector grad;
  PrincipalObjective(g, j, others).value_and_gradient(y, grad);
  return grad;
}

}  // namespace cage
