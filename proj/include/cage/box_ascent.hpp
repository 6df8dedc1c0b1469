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

// Projected gradient ascent on a box with Armijo backtracking along the
// projection arc. Trial steps come from the Barzilai-Borwein quotient of the
// last accepted step; acceptance is monotone.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <vector>

#include "cage/errors.hpp"

namespace cage {

struct SolverOptions {
  int max_iters = 500;
  double grad_tol = 1e-8;
  double line_search_shrink = 0.5;
  double armijo_c = 1e-4;
  // Distance to a bound under which a coordinate counts as active.
  double active_tol = 1e-7;

  void validate() const {
    if (max_iters <= 0) throw DomainError("max_iters must be positive");
    if (!(grad_tol > 0.0)) throw DomainError("grad_tol must be positive");
    if (!(line_search_shrink > 0.0 && line_search_shrink < 1.0)) {
      throw DomainError("line_search_shrink must lie in (0,1)");
    }
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw DomainError("armijo_c must lie in (0,1)");
    if (!(active_tol >= 0.0)) throw DomainError("active_tol must be nonnegative");
  }
};

enum class BoundTag { kLower, kUpper, kFree };

using ActivePattern = std::vector<BoundTag>;

inline const char* to_string(BoundTag tag) {
  switch (tag) {
    case BoundTag::kLower: return "LOWER";
    case BoundTag::kUpper: return "UPPER";
    case BoundTag::kFree: return "FREE";
  }
  return "?";
}

/// Lower wins ties, so a degenerate coordinate (upper == lower) tags LOWER.
inline ActivePattern classify_bounds(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                                     const Eigen::VectorXd& upper, double atol) {
  ActivePattern tags(static_cast<std::size_t>(x.size()), BoundTag::kFree);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] <= lower[i] + atol) {
      tags[static_cast<std::size_t>(i)] = BoundTag::kLower;
    } else if (x[i] >= upper[i] - atol) {
      tags[static_cast<std::size_t>(i)] = BoundTag::kUpper;
    }
  }
  return tags;
}

/// Infinity norm of the gradient with components pointing out of the box at
/// active coordinates removed. Zero exactly at first-order stationary points.
inline double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                                      const Eigen::VectorXd& lower,
                                      const Eigen::VectorXd& upper, double atol) {
  double norm = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double component = grad[i];
    if (upper[i] - lower[i] <= 0.0) {
      component = 0.0;
    } else if (x[i] <= lower[i] + atol) {
      component = std::max(component, 0.0);
    } else if (x[i] >= upper[i] - atol) {
      component = std::min(component, 0.0);
    }
    norm = std::max(norm, std::abs(component));
  }
  return norm;
}

struct BoxAscentResult {
  Eigen::VectorXd x;
  Eigen::VectorXd gradient;
  double value = 0.0;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

template <class Objective>
concept HasDiagonalMetric = requires(const Objective& o, const Eigen::VectorXd& x) {
  { o.diagonal_metric(x) } -> std::convertible_to<Eigen::VectorXd>;
};

/// Maximizes `objective` over [lower, upper]. The objective exposes
/// `double value_and_gradient(const VectorXd& x, VectorXd& grad) const` and
/// may expose `VectorXd diagonal_metric(const VectorXd& x) const`, a positive
/// per-coordinate scaling applied to the ascent direction. Every iterate is
/// feasible and the objective never decreases.
template <class Objective>
BoxAscentResult maximize_on_box(const Objective& objective, const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper, const Eigen::VectorXd& start,
                                const SolverOptions& opts) {
  opts.validate();
  if (lower.size() != upper.size() || start.size() != lower.size()) {
    throw DomainError("box dimensions disagree");
  }
  if ((upper.array() < lower.array()).any()) throw DomainError("empty box");

  constexpr double kMinStep = 1e-16;
  constexpr double kMaxStep = 1e12;
  constexpr double kValueResolution = 64.0 * std::numeric_limits<double>::epsilon();

  BoxAscentResult r;
  r.x = start.cwiseMax(lower).cwiseMin(upper);
  r.value = objective.value_and_gradient(r.x, r.gradient);
  r.projected_gradient_norm =
      projected_gradient_norm(r.x, r.gradient, lower, upper, opts.active_tol);

  Eigen::VectorXd trial;
  Eigen::VectorXd trial_grad;
  Eigen::VectorXd direction;
  Eigen::VectorXd metric = Eigen::VectorXd::Ones(lower.size());
  double step = 1.0;
  while (r.iterations < opts.max_iters) {
    if (r.projected_gradient_norm <= opts.grad_tol) {
      r.converged = true;
      break;
    }
    if constexpr (HasDiagonalMetric<Objective>) {
      metric = objective.diagonal_metric(r.x);
    }
    direction = metric.cwiseProduct(r.gradient);
    bool accepted = false;
    double trial_value = 0.0;
    while (step >= kMinStep) {
      trial = (r.x + step * direction).cwiseMax(lower).cwiseMin(upper);
      const double gain = r.gradient.dot(trial - r.x);
      trial_value = objective.value_and_gradient(trial, trial_grad);
      if (gain > 0.0 && trial_value >= r.value + opts.armijo_c * gain) {
        accepted = true;
        break;
      }
      // Below the resolution of the objective value the sufficient-increase
      // test is decided by rounding; fall back to the slope at the trial point.
      const double resolution = kValueResolution * std::max(1.0, std::abs(r.value));
      if (gain > 0.0 && gain < resolution && trial_value >= r.value - resolution &&
          trial_grad.dot(trial - r.x) >= 0.0) {
        accepted = true;
        break;
      }
      step *= opts.line_search_shrink;
    }
    if (!accepted) break;  // stalled at numerical resolution

    // Barzilai-Borwein quotient measured in the metric.
    const Eigen::VectorXd s = trial - r.x;
    const double curvature = -s.dot(trial_grad - r.gradient);
    const double length = s.cwiseProduct(s).cwiseQuotient(metric).sum();
    step = curvature > 0.0 ? std::clamp(length / curvature, kMinStep, kMaxStep)
                           : std::min(step * 4.0, kMaxStep);

    r.x.swap(trial);
    r.gradient.swap(trial_grad);
    r.value = trial_value;
    r.projected_gradient_norm =
        projected_gradient_norm(r.x, r.gradient, lower, upper, opts.active_tol);
    ++r.iterations;
  }
  if (r.projected_gradient_norm <= opts.grad_tol) r.converged = true;
  return r;
}

}  // namespace cage
