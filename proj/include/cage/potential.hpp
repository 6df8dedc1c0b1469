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

// Policy-space characterizations of the equilibrium, used to cross-check the
// best-response loop:
//
//   aggregate surplus   Phi(pi)   = <pi, Q_w> - tau KL(pi||pi0) - max(0, c_min(pi))
//   user-regularized    Ureg(pi)  = <pi, Q_w> - J tau KL(pi||pi0) - J c_min(pi),
//                                   restricted to box-reachable policies
//
// with Q_w = sum_j w^j q^j and c_min(pi) = max_i -tau log(pi_i / pi0_i).
//
// Both maximizations introduce the shift c >= c_min(pi), which turns the
// nonsmooth max into the bounds pi_i >= pi0_i exp(-c/tau) (and, for
// reachability, pi_i <= pi0_i exp((Q_i - c)/tau)). For fixed c the inner
// problem is a bounded KL projection solved exactly by bisection on its
// normalizer; the outer value is concave in c and is maximized by golden
// section search.
//
// Also here: minimum-cost incentive recovery and an exhaustive grid oracle
// for tiny games.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cage/game.hpp"

namespace cage {

enum class PolicyObjectiveMode { kAggregateSurplus, kUserRegularized };

inline const char* to_string(PolicyObjectiveMode mode) {
  return mode == PolicyObjectiveMode::kAggregateSurplus ? "aggregate_surplus" : "user_reg";
}

struct SurplusObjective {
  PolicyObjectiveMode mode = PolicyObjectiveMode::kAggregateSurplus;
  double floor = 1e-9;  // simplex interior floor
};

enum class ShiftRule { kMaxZeroCmin, kRawCmin };

/// Q_w = sum_j w^j q^j.
inline Vector aggregate_score_vector(const GameInstance& g) {
  Vector q = Vector::Zero(g.num_candidates());
  for (int j = 0; j < g.num_principals(); ++j) q += g.incentive_cap(j);
  return q;
}

namespace detail {

inline Vector log_ratio(const Vector& pi, const GameInstance& g) {
  require_length(pi, g, "policy");
  if (!pi.allFinite() || (pi.array() <= 0.0).any()) {
    throw DomainError("policy must be strictly positive for log-ratios");
  }
  return pi.array().log().matrix() - g.log_base_policy();
}

}  // namespace detail

/// (c_min, c_max): the shift range under which tau log(pi/pi0) + c fits in
/// the aggregate box [0, Q_w]. The policy is reachable iff c_min <= c_max.
inline std::pair<double, double> cmin_cmax(const PolicySimplex& pi, const GameInstance& g) {
  const Vector lr = detail::log_ratio(pi.probs(), g) * g.tau();
  const Vector cap = aggregate_score_vector(g);
  return {(-lr).maxCoeff(), (cap - lr).minCoeff()};
}

/// Evaluates Phi or Ureg at a strictly positive policy. Ureg ignores
/// reachability; check it with cmin_cmax.
inline double policy_objective_value(const PolicySimplex& pi, const GameInstance& g,
                                     PolicyObjectiveMode mode) {
  const auto [c_min, c_max] = cmin_cmax(pi, g);
  (void)c_max;
  const double linear = pi.probs().dot(aggregate_score_vector(g));
  const double kl = kl_divergence(pi.probs(), g.base_policy().probs());
  if (mode == PolicyObjectiveMode::kAggregateSurplus) {
    return linear - g.tau() * kl - std::max(0.0, c_min);
  }
  const double J = g.num_principals();
  return linear - J * g.tau() * kl - J * c_min;
}

/// Y_i = tau log(pi_i / pi0_i) + c, the cheapest aggregate incentive whose best
/// response is pi. c = max(0, c_min) keeps individual rationality; RAW_CMIN
/// uses c = c_min. Throws InfeasibleError when Y would leave [0, Q_w].
inline Vector min_cost_incentive(const PolicySimplex& pi, const GameInstance& g,
                                 ShiftRule rule = ShiftRule::kMaxZeroCmin) {
  const auto [c_min, c_max] = cmin_cmax(pi, g);
  const double c = rule == ShiftRule::kMaxZeroCmin ? std::max(0.0, c_min) : c_min;
  if (c > c_max) {
    throw InfeasibleError("policy is not reachable under the incentive box (c=" +
                          std::to_string(c) + " > c_max=" + std::to_string(c_max) + ")");
  }
  Vector Y = detail::log_ratio(pi.probs(), g) * g.tau();
  Y.array() += c;
  // The attaining coordinates are exact zeros/caps up to rounding.
  return Y.cwiseMax(0.0).cwiseMin(aggregate_score_vector(g));
}

struct PolicyObjectiveResult {
  PolicySimplex policy;
  double value = 0.0;
  double shift = 0.0;  // c at the optimum, equal to c_min(policy) up to tolerance
  int outer_iterations = 0;
  std::string method = "shift-parameterized bounded KL projection + golden section";
};

namespace detail {

// argmax_{lower <= pi <= upper, sum pi = 1} <pi, a> - kappa KL(pi || pi0).
// Requires sum(lower) <= 1 <= sum(upper) and lower <= upper.
inline Vector bounded_kl_tilt(const Vector& log_pi0, const Vector& a, double kappa,
                              const Vector& lower, const Vector& upper) {
  const Vector z = log_pi0 + a / kappa;
  auto at = [&](double lambda) {
    return (z.array() - lambda).exp().max(lower.array()).min(upper.array()).matrix().eval();
  };
  const double zmax = z.maxCoeff();
  double center = zmax + std::log((z.array() - zmax).exp().sum());
  double lo = center - 1.0;
  double hi = center + 1.0;
  for (int k = 0; k < 200 && at(lo).sum() < 1.0; ++k) lo -= std::ldexp(1.0, k);
  for (int k = 0; k < 200 && at(hi).sum() > 1.0; ++k) hi += std::ldexp(1.0, k);
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (at(mid).sum() > 1.0 ? lo : hi) = mid;
  }
  Vector pi = at(0.5 * (lo + hi));
  return pi / pi.sum();
}

template <class F>
std::pair<double, int> golden_section_max(F&& f, double lo, double hi) {
  constexpr double kInvPhi = 0.6180339887498949;
  int iterations = 0;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > 1e-14 * std::max(1.0, std::abs(lo) + std::abs(hi)) && iterations < 400) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    }
    ++iterations;
  }
  // The endpoints themselves are candidates when the maximum sits on the boundary.
  double best_x = 0.5 * (lo + hi);
  return {best_x, iterations};
}

}  // namespace detail

/// Unique maximizer of Phi (AGGREGATE_SURPLUS) over the floored simplex, or of
/// Ureg (USER_REG) over its reachable part. Throws InfeasibleError when the
/// floor leaves no admissible policy.
inline PolicyObjectiveResult maximize_policy_objective(const GameInstance& g,
                                                       const SurplusObjective& objective = {}) {
  const Index n = g.num_candidates();
  const double tau = g.tau();
  if (!(objective.floor > 0.0) || objective.floor * static_cast<double>(n) >= 1.0) {
    throw DomainError("simplex floor must lie in (0, 1/N)");
  }
  const bool user_reg = objective.mode == PolicyObjectiveMode::kUserRegularized;
  const double J = user_reg ? g.num_principals() : 1.0;
  const double kappa = J * tau;
  const Vector Q = aggregate_score_vector(g);
  const Vector& log_pi0 = g.log_base_policy();

  auto lower = [&](double c) {
    return (log_pi0.array() - c / tau).exp().max(objective.floor).matrix().eval();
  };
  auto upper = [&](double c) -> Vector {
    if (!user_reg) return Vector::Ones(n);
    return (log_pi0.array() + (Q.array() - c) / tau).exp().min(1.0).matrix();
  };

  // Smallest shift whose lower bounds fit in the simplex (0 unless pi0 dips
  // below the floor somewhere).
  double c_lo = 0.0;
  if (lower(0.0).sum() > 1.0) {
    double hi = tau;
    while (lower(hi).sum() > 1.0) hi *= 2.0;
    double lo = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (lower(mid).sum() > 1.0 ? lo : hi) = mid;
    }
    c_lo = hi;
  }

  // Past the unconstrained tilt's own c_min the lower bounds are slack.
  const Vector free_tilt = detail::tilt(log_pi0, Q * (tau / kappa), tau);
  double c_hi = std::max(c_lo, (-(free_tilt.array().max(objective.floor).log().matrix() - log_pi0) *
                                tau).maxCoeff());
  if (user_reg) {
    const Vector z = log_pi0 + Q / tau;
    const double zmax = z.maxCoeff();
    double c_reach = tau * (zmax + std::log((z.array() - zmax).exp().sum()));
    c_reach = std::min(c_reach,
                       (Q.array() + tau * (log_pi0.array() - std::log(objective.floor))).minCoeff());
    if (c_reach < c_lo) {
      throw InfeasibleError("no reachable policy satisfies the simplex floor");
    }
    // With upper bounds the slack argument no longer applies; the value is
    // concave over the whole reachable range, so search all of it.
    c_hi = c_reach;
  }

  auto solve_inner = [&](double c) {
    return detail::bounded_kl_tilt(log_pi0, Q, kappa, lower(c), upper(c));
  };
  auto outer_value = [&](double c) {
    const Vector pi = solve_inner(c);
    return pi.dot(Q) - kappa * kl_divergence(pi, g.base_policy().probs()) - J * c;
  };

  PolicyObjectiveResult r;
  auto [c_best, iterations] = detail::golden_section_max(outer_value, c_lo, c_hi);
  for (double edge : {c_lo, c_hi}) {
    if (outer_value(edge) > outer_value(c_best)) c_best = edge;
  }
  r.policy = PolicySimplex::normalize(solve_inner(c_best));
  r.shift = c_best;
  r.outer_iterations = iterations;
  r.value = policy_objective_value(r.policy, g, objective.mode);
  return r;
}

struct BruteForceOptions {
  double grid_step = 0.02;
  double improve_tol = 1e-9;
  int max_sweeps = 100;
};

struct BruteForceResult {
  IncentiveProfile incentives;
  PolicySimplex policy;
  double worst_deviation = 0.0;  // largest grid improvement any principal has
  int worst_principal = 0;
  bool certified = false;
  int sweeps = 0;
};

namespace detail {

// Tensor grid over [0, cap] with the cap itself always included.
class IncentiveGrid {
 public:
  IncentiveGrid(const Vector& cap, double step) {
    axes_.resize(static_cast<std::size_t>(cap.size()));
    std::size_t total = 1;
    for (Index i = 0; i < cap.size(); ++i) {
      auto& axis = axes_[static_cast<std::size_t>(i)];
      for (int k = 0; k * step < cap[i] - 1e-12; ++k) axis.push_back(k * step);
      axis.push_back(cap[i]);
      total *= axis.size();
      if (total > 20'000'000) throw DomainError("refused: incentive grid too large");
    }
    size_ = total;
  }

  std::size_t size() const noexcept { return size_; }
  const std::vector<std::vector<double>>& axes() const noexcept { return axes_; }

  // Decodes a flat index into per-axis positions, last axis fastest.
  void positions(std::size_t flat, std::vector<std::size_t>& pos) const {
    pos.resize(axes_.size());
    for (std::size_t a = axes_.size(); a-- > 0;) {
      pos[a] = flat % axes_[a].size();
      flat /= axes_[a].size();
    }
  }

 private:
  std::vector<std::vector<double>> axes_;
  std::size_t size_ = 1;
};

// Exhaustive best response of principal j over its grid. Returns (value, flat index).
inline std::pair<double, std::size_t> grid_best_response(const IncentiveGrid& grid,
                                                         const Vector& cap, const Vector& others,
                                                         const GameInstance& g) {
  const Index n = cap.size();
  const double tau = g.tau();
  // pi_i is proportional to base_i * exp(y_i / tau); tabulate per-axis factors.
  const Vector log_base = g.log_base_policy() + others / tau;
  const double shift = (log_base + cap / tau).maxCoeff();
  std::vector<std::vector<double>> weight(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> payoff(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto& axis = grid.axes()[static_cast<std::size_t>(i)];
    for (double y : axis) {
      weight[static_cast<std::size_t>(i)].push_back(std::exp(log_base[i] - shift + y / tau));
      payoff[static_cast<std::size_t>(i)].push_back(cap[i] - y);
    }
  }
  std::vector<std::size_t> pos;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_flat = 0;
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    grid.positions(flat, pos);
    double mass = 0.0;
    double value = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      const double w = weight[i][pos[i]];
      mass += w;
      value += w * payoff[i][pos[i]];
    }
    value /= mass;
    if (value > best) {
      best = value;
      best_flat = flat;
    }
  }
  return {best, best_flat};
}

inline Vector grid_point(const IncentiveGrid& grid, std::size_t flat) {
  std::vector<std::size_t> pos;
  grid.positions(flat, pos);
  Vector y(static_cast<Index>(pos.size()));
  for (std::size_t i = 0; i < pos.size(); ++i) y[static_cast<Index>(i)] = grid.axes()[i][pos[i]];
  return y;
}

}  // namespace detail

/// Exhaustive-grid best-response iteration for games with N <= 3 and J <= 2.
/// The certificate is the largest improvement any principal can still get
/// from a grid deviation at the returned profile.
inline BruteForceResult brute_force_equilibrium(const GameInstance& g,
                                                const BruteForceOptions& opts = {}) {
  if (g.num_candidates() > 3 || g.num_principals() > 2) {
    throw DomainError("refused: brute-force oracle limited to N <= 3 and J <= 2");
  }
  if (!(opts.grid_step > 0.0)) throw DomainError("grid_step must be positive");
  const int J = g.num_principals();
  std::vector<detail::IncentiveGrid> grids;
  for (int j = 0; j < J; ++j) grids.emplace_back(g.incentive_cap(j), opts.grid_step);

  IncentiveProfile profile = IncentiveProfile::zeros(g);
  BruteForceResult r;
  for (r.sweeps = 1; r.sweeps <= opts.max_sweeps; ++r.sweeps) {
    bool changed = false;
    for (int j = 0; j < J; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const Vector others = profile.others(j);
      const auto [best, flat] =
          detail::grid_best_response(grids[ju], g.incentive_cap(j), others, g);
      const double current = PrincipalObjective(g, j, others).value(profile.per_principal[ju]);
      if (best > current + opts.improve_tol) {
        profile.per_principal[ju] = detail::grid_point(grids[ju], flat);
        profile = IncentiveProfile::from(profile.per_principal);
        changed = true;
      }
    }
    if (!changed) break;
  }
  r.sweeps = std::min(r.sweeps, opts.max_sweeps);

  for (int j = 0; j < J; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const Vector others = profile.others(j);
    const double best = detail::grid_best_response(grids[ju], g.incentive_cap(j), others, g).first;
    const double current = PrincipalObjective(g, j, others).value(profile.per_principal[ju]);
    const double gain = std::max(0.0, best - current);
    if (j == 0 || gain > r.worst_deviation) {
      r.worst_deviation = gain;
      r.worst_principal = j;
    }
  }
  r.certified = r.worst_deviation <= opts.improve_tol;
  r.policy = best_response(profile.aggregate, g);
  r.incentives = std::move(profile);
  return r;
}

}  // namespace cage
