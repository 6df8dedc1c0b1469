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

// Solves a small two-principal game from code and compares it with the
// potential maximizer and the minimum-cost incentive for the same policy.
//
//   solve_game [instance.json]

#include <iostream>

#include "cage/cage.hpp"

int main(int argc, char** argv) {
  using cage::Vector;
  try {
    const cage::GameInstance g =
        argc > 1 ? cage::read_game_file(argv[1])
                 : cage::GameInstance(cage::PolicySimplex((Vector(3) << 0.5, 0.3, 0.2).finished()),
                                      {(Vector(3) << 1.5, 0.2, 0.0).finished(),
                                       (Vector(3) << 0.0, 0.4, 1.8).finished()},
                                      cage::PreferenceWeights((Vector(2) << 0.6, 0.4).finished()), 0.3);

    // Tighter than the decoding default so the stationarity check below is meaningful.
    cage::JacobiOptions opts;
    opts.epsilon = 1e-9;
    opts.subproblem.grad_tol = 1e-11;
    const cage::EquilibriumResult eq = cage::solve_equilibrium(g, std::nullopt, opts);
    std::cout << "converged: " << std::boolalpha << eq.converged << " after " << eq.rounds
              << " rounds\n";
    const Eigen::IOFormat row(6, Eigen::DontAlignCols, ", ", ", ", "", "", "[", "]");
    for (int j = 0; j < g.num_principals(); ++j) {
      std::cout << "  y^" << j << " = "
                << eq.incentives.per_principal[static_cast<std::size_t>(j)].transpose().format(row) << '\n';
    }
    std::cout << "  pi* = " << eq.policy.probs().transpose().format(row) << '\n';

    const auto stat = cage::check_stationarity(eq, g);
    std::cout << "stationary at 1e-6: " << stat.all_pass << '\n';

    const auto phi = cage::maximize_policy_objective(g);
    std::cout << "aggregate-surplus maximizer: " << phi.policy.probs().transpose().format(row) << '\n';
    std::cout << "cheapest incentive for pi*: "
              << cage::min_cost_incentive(eq.policy, g).transpose().format(row) << " (paid "
              << eq.incentives.aggregate.sum() << " in equilibrium)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "solve_game: " << e.what() << '\n';
    return 1;
  }
}
