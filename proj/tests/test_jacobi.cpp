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

#include <gtest/gtest.h>

#include <random>

#include "cage/jacobi.hpp"
#include "test_support.hpp"

namespace cage {
namespace {

JacobiOptions tight() {
  JacobiOptions o;
  o.epsilon = 1e-9;
  o.max_rounds = 1000;
  o.subproblem.grad_tol = 1e-11;
  o.subproblem.max_iters = 5000;
  return o;
}

testing::InstanceShape active_shape() {
  return {.n_max = 5, .j_min = 2, .j_max = 3, .tau_min = 0.1, .tau_max = 0.5, .reward_max = 2.0};
}

TEST(SolveEquilibrium, SinglePrincipalIsOneBestResponse) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 20; ++k) {
    const auto g = testing::random_instance(rng, {.j_min = 1, .j_max = 1});
    const auto r = solve_equilibrium(g);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.rounds, 2);
    const auto direct = solve_mpec(0, Vector::Zero(g.num_candidates()), g);
    EXPECT_LE((r.incentives.aggregate - direct.incentive).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(SolveEquilibrium, ZeroRewardsLeaveBasePolicy) {
  std::mt19937_64 rng(32);
  const Index n = 4;
  const PolicySimplex pi0(testing::random_simplex_point(rng, n));
  const GameInstance g(pi0, {Vector::Zero(n), Vector::Zero(n)}, PreferenceWeights(Vector::Ones(2)), 0.1);
  const auto r = solve_equilibrium(g);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.rounds, 1);
  EXPECT_TRUE(r.incentives.aggregate.isZero());
  EXPECT_LE((r.policy.probs() - pi0.probs()).lpNorm<Eigen::Infinity>(), 1e-15);
}

TEST(SolveEquilibrium, TraceAndStoppingRule) {
  std::mt19937_64 rng(33);
  const auto g = testing::random_instance(rng, active_shape());
  const auto r = solve_equilibrium(g);
  ASSERT_TRUE(r.converged);
  ASSERT_EQ(r.trace.size(), static_cast<std::size_t>(r.rounds) + 1);
  EXPECT_EQ(r.trace.front().round, 0);
  for (const auto& y : r.trace.front().incentives) EXPECT_TRUE(y.isZero());
  EXPECT_LE(r.trace.back().max_step, 1e-4);
  EXPECT_LE(r.trace.back().policy_change, 1e-4);
  for (std::size_t t = 1; t + 1 < r.trace.size(); ++t) {
    EXPECT_TRUE(r.trace[t].max_step > 1e-4 || r.trace[t].policy_change > 1e-4);
  }
  const auto a = deviation_proxies(r);
  EXPECT_EQ(a.size(), r.trace.size());
  EXPECT_EQ(a.back(), 0.0);
  EXPECT_GE(r.min_ir_slack, -kIrSlackTolerance);
}

TEST(SolveEquilibrium, RoundBudgetExhaustionReturnsLastIterate) {
  std::mt19937_64 rng(34);
  for (int k = 0; k < 50; ++k) {
    const auto g = testing::random_instance(rng, active_shape());
    const auto full = solve_equilibrium(g);
    if (full.rounds < 3) continue;
    JacobiOptions o;
    o.max_rounds = 2;
    const auto r = solve_equilibrium(g, std::nullopt, o);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.rounds, 2);
    EXPECT_EQ(r.trace.size(), 3u);
    for (std::size_t j = 0; j < r.trace.back().incentives.size(); ++j) {
      EXPECT_EQ(r.trace.back().incentives[j], full.trace[2].incentives[j]);
    }
    return;
  }
  FAIL() << "no instance needed three rounds";
}

TEST(SolveEquilibrium, StationaryAtTightTolerance) {
  std::mt19937_64 rng(35);
  int active = 0;
  for (int k = 0; k < 100; ++k) {
    const auto g = testing::random_instance(rng, active_shape());
    const auto r = solve_equilibrium(g, std::nullopt, tight());
    ASSERT_TRUE(r.converged) << "instance " << k;
    if (r.incentives.aggregate.maxCoeff() > 1e-3) ++active;
    const auto rep = check_stationarity(r, g);
    EXPECT_TRUE(rep.all_pass) << "instance " << k;
  }
  EXPECT_GE(active, 20);
}

TEST(SolveEquilibrium, RestartsAndUpdateModesAgree) {
  std::mt19937_64 rng(36);
  for (int k = 0; k < 20; ++k) {
    const auto g = testing::random_instance(rng, active_shape());
    const auto base = solve_equilibrium(g, std::nullopt, tight());
    auto gs_opts = tight();
    gs_opts.mode = UpdateMode::kGaussSeidel;
    std::vector<Vector> init;
    for (int j = 0; j < g.num_principals(); ++j) init.push_back(testing::random_feasible(rng, g, j));
    const auto gs = solve_equilibrium(g, IncentiveProfile::from(init), gs_opts);
    ASSERT_TRUE(base.converged && gs.converged);
    for (int j = 0; j < g.num_principals(); ++j) {
      const auto jj = static_cast<std::size_t>(j);
      EXPECT_LE((base.incentives.per_principal[jj] - gs.incentives.per_principal[jj])
                    .lpNorm<Eigen::Infinity>(),
                1e-6);
    }
  }
}

TEST(SolveEquilibrium, SymmetricPrincipalsGetSymmetricIncentives) {
  const Vector q = (Vector(3) << 1.0, 0.2, 0.0).finished();
  const GameInstance g(PolicySimplex::uniform(3), {q, q}, PreferenceWeights(Vector::Ones(2)), 0.1);
  const auto r = solve_equilibrium(g, std::nullopt, tight());
  ASSERT_TRUE(r.converged);
  EXPECT_LE((r.incentives.per_principal[0] - r.incentives.per_principal[1]).lpNorm<Eigen::Infinity>(),
            1e-8);
}

TEST(SolveEquilibrium, RejectsBadInitialProfile) {
  std::mt19937_64 rng(37);
  const auto g = testing::random_instance(rng, {.j_min = 2, .j_max = 2});
  const Index n = g.num_candidates();
  EXPECT_THROW(solve_equilibrium(g, IncentiveProfile::from({Vector::Zero(n)})), ConstraintError);
  EXPECT_THROW(solve_equilibrium(g, IncentiveProfile::from({Vector::Constant(n, -1.0), Vector::Zero(n)})),
               ConstraintError);
  JacobiOptions bad;
  bad.epsilon = 0.0;
  EXPECT_THROW(solve_equilibrium(g, std::nullopt, bad), DomainError);
}

}  // namespace
}  // namespace cage
