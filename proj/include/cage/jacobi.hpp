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

// Nonlinear Jacobi best-response loop over principals, with an optional
// Gauss-Seidel sweep order, round tracing and a per-principal stationarity
// certificate.

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "cage/game.hpp"
#include "cage/principal_solver.hpp"

namespace cage {

enum class UpdateMode { kJacobi, kGaussSeidel };

inline const char* to_string(UpdateMode mode) {
  return mode == UpdateMode::kJacobi ? "jacobi" : "gauss-seidel";
}

struct JacobiOptions {
  double epsilon = 1e-4;
  int max_rounds = 100;
  UpdateMode mode = UpdateMode::kJacobi;
  bool record_trace = true;
  SolverOptions subproblem;

  void validate() const {
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    if (max_rounds <= 0) throw DomainError("max_rounds must be positive");
    subproblem.validate();
  }
};

/// Snapshot after one round. Round 0 holds the initial profile.
struct RoundRecord {
  int round = 0;
  std::vector<Vector> incentives;
  Vector policy;
  double max_step = 0.0;       // max_j ||y^{j,(t)} - y^{j,(t-1)}||_inf
  double policy_change = 0.0;  // ||pi^{(t)} - pi^{(t-1)}||_inf
};

struct EquilibriumResult {
  IncentiveProfile incentives;
  PolicySimplex policy;
  int rounds = 0;
  bool converged = false;
  std::vector<RoundRecord> trace;
  int subproblem_failures = 0;
  double min_ir_slack = 0.0;
};

namespace detail {
inline void check_profile(const IncentiveProfile& p, const GameInstance& g) {
  if (p.num_principals() != g.num_principals()) {
    throw ConstraintError("initial profile has " + std::to_string(p.num_principals()) +
                          " principals, instance has " + std::to_string(g.num_principals()));
  }
  for (int j = 0; j < g.num_principals(); ++j) {
    check_incentive_box(j, p.per_principal[static_cast<std::size_t>(j)], g);
  }
}
}  // namespace detail

/// Runs best-response rounds until both the incentive step and the policy
/// change fall to epsilon. When rounds run out, `converged` is false and the
/// last iterate with its best-response policy is returned.
inline EquilibriumResult solve_equilibrium(const GameInstance& g,
                                           const std::optional<IncentiveProfile>& init = {},
                                           const JacobiOptions& opts = {}) {
  opts.validate();
  IncentiveProfile current = init ? *init : IncentiveProfile::zeros(g);
  detail::check_profile(current, g);
  current = IncentiveProfile::from(current.per_principal);

  const auto J = static_cast<std::size_t>(g.num_principals());
  EquilibriumResult result;
  Vector policy = best_response(current.aggregate, g).probs();
  result.min_ir_slack = ir_value(current.aggregate, g);
  if (opts.record_trace) result.trace.push_back({0, current.per_principal, policy, 0.0, 0.0});

  for (int t = 1; t <= opts.max_rounds; ++t) {
    std::vector<Vector> next = current.per_principal;
    for (std::size_t j = 0; j < J; ++j) {
      // Jacobi reads only round t-1; Gauss-Seidel sees updates made earlier in this sweep.
      const std::vector<Vector>& source =
          opts.mode == UpdateMode::kJacobi ? current.per_principal : next;
      Vector others = Vector::Zero(g.num_candidates());
      for (std::size_t i = 0; i < J; ++i) {
        if (i != j) others += source[i];
      }
      MpecSolution sol = solve_mpec(static_cast<int>(j), others, g, opts.subproblem,
                                    current.per_principal[j]);
      if (!sol.converged) ++result.subproblem_failures;
      next[j] = std::move(sol.incentive);
    }

    double max_step = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      max_step = std::max(max_step, (next[j] - current.per_principal[j]).lpNorm<Eigen::Infinity>());
    }
    current = IncentiveProfile::from(std::move(next));
    Vector next_policy = best_response(current.aggregate, g).probs();
    const double policy_change = (next_policy - policy).lpNorm<Eigen::Infinity>();
    policy = std::move(next_policy);
    result.min_ir_slack = std::min(result.min_ir_slack, ir_value(current.aggregate, g));
    result.rounds = t;
    if (opts.record_trace) {
      result.trace.push_back({t, current.per_principal, policy, max_step, policy_change});
    }
    if (max_step <= opts.epsilon && policy_change <= opts.epsilon) {
      result.converged = true;
      break;
    }
  }
  if (result.min_ir_slack < -kIrSlackTolerance) {
    log::warn("individual-rationality slack ", result.min_ir_slack, " observed during solve");
  }
  if (!result.converged) {
    log::info("no equilibrium point found within ", opts.max_rounds, " rounds");
  }
  result.policy = best_response(current.aggregate, g);
  result.incentives = std::move(current);
  return result;
}

/// a_t = max_j ||y^{j,(t)} - y^{j,final}||_inf for every traced round, using the
/// final iterate as a stand-in for the exact equilibrium.
inline std::vector<double> deviation_proxies(const EquilibriumResult& result) {
  std::vector<double> a;
  a.reserve(result.trace.size());
  for (const auto& rec : result.trace) {
    double dev = 0.0;
    for (std::size_t j = 0; j < rec.incentives.size(); ++j) {
      dev = std::max(dev, (rec.incentives[j] - result.incentives.per_principal[j])
                              .lpNorm<Eigen::Infinity>());
    }
    a.push_back(dev);
  }
  return a;
}

struct StationarityReport {
  std::vector<double> projected_gradient_norms;
  std::vector<bool> pass;
  double tol = 0.0;
  bool all_pass = true;
};

/// First-order stationarity of every principal's subproblem at the returned
/// profile, measured by the projected-gradient infinity norm.
inline StationarityReport check_stationarity(const EquilibriumResult& result,
                                             const GameInstance& g, double tol = 1e-6,
                                             double atol = SolverOptions{}.active_tol) {
  detail::check_profile(result.incentives, g);
  StationarityReport report;
  report.tol = tol;
  const Vector zero = Vector::Zero(g.num_candidates());
  for (int j = 0; j < g.num_principals(); ++j) {
    const Vector& y = result.incentives.per_principal[static_cast<std::size_t>(j)];
    const Vector grad = principal_gradient(j, y, result.incentives.others(j), g);
    const double norm = projected_gradient_norm(y, grad, zero, g.incentive_cap(j), atol);
    report.projected_gradient_norms.push_back(norm);
    report.pass.push_back(norm <= tol);
    report.all_pass = report.all_pass && norm <= tol;
  }
  return report;
}

}  // namespace cage
