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

// One principal's subproblem: maximize f_j over the box [0, w^j q^j] with the
// agent's response substituted in closed form. The individual-rationality
// constraint is not imposed; it holds automatically for nonnegative
// aggregates and is checked on the result.

#pragma once

#include <optional>
#include <utility>

#include "cage/box_ascent.hpp"
#include "cage/game.hpp"
#include "cage/log.hpp"

namespace cage {

inline constexpr double kIrSlackTolerance = 1e-10;

struct MpecSolution {
  Vector incentive;
  PolicySimplex policy;
  double value = 0.0;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  double ir_slack = 0.0;
};

inline ActivePattern active_pattern(const Vector& y, const GameInstance& g, int j,
                                    double atol = SolverOptions{}.active_tol) {
  check_incentive_box(j, y, g);
  return classify_bounds(y, Vector::Zero(y.size()), g.incentive_cap(j), atol);
}

/// Best incentive of principal j against the fixed aggregate `others` of the
/// remaining principals. Ascent starts from whichever of `warm_start` and 0
/// scores higher (the warm start on ties), so the result is never worse than
/// either. Non-convergence is reported through `converged`.
inline MpecSolution solve_mpec(int j, const Vector& others, const GameInstance& g,
                               const SolverOptions& opts = {},
                               const std::optional<Vector>& warm_start = std::nullopt) {
  const Vector zero = Vector::Zero(g.num_candidates());
  detail::check_principal_inputs(j, zero, others, g);
  if (warm_start) check_incentive_box(j, *warm_start, g);

  const PrincipalObjective objective(g, j, others);
  Vector start = zero;
  if (warm_start && objective.value(*warm_start) >= objective.value(zero)) start = *warm_start;

  BoxAscentResult r = maximize_on_box(objective, zero, g.incentive_cap(j), start, opts);

  MpecSolution sol;
  sol.policy = best_response(others + r.x, g);
  sol.ir_slack = ir_value(others + r.x, g);
  if (sol.ir_slack < -kIrSlackTolerance) {
    log::warn("principal ", j, ": individual-rationality slack ", sol.ir_slack,
              " below tolerance at accepted iterate");
  }
  sol.incentive = std::move(r.x);
  sol.value = r.value;
  sol.projected_gradient_norm = r.projected_gradient_norm;
  sol.iterations = r.iterations;
  sol.converged = r.converged;
  return sol;
}

}  // namespace cage
