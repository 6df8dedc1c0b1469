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

// Quantitative diagnostics for solved games: regret of the best-response
// dynamics against the best fixed incentive in hindsight, the matching
// deviation bound, the stability temperature threshold, and empirical
// perturbation probes.
//
// Deviation terms a_t use the final iterate in place of the exact
// equilibrium, which is unknown mid-run. Reports say so in `notes`.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cage/box_ascent.hpp"
#include "cage/game.hpp"
#include "cage/jacobi.hpp"

namespace cage {

/// max_j ||w^j q^j||_2.
inline double incentive_radius(const GameInstance& g) {
  double r = 0.0;
  for (int j = 0; j < g.num_principals(); ++j) r = std::max(r, g.incentive_cap(j).norm());
  return r;
}

/// L_f = R / tau + 1 with R = max_j ||w^j q^j||_2.
inline double lipschitz_constant(const GameInstance& g) {
  return incentive_radius(g) / g.tau() + 1.0;
}

/// 2 N^2 J R / (pi_lower (1 - (N-1) pi_lower)). Returns +infinity when
/// (N-1) pi_lower reaches 1 in floating point.
inline double tau_threshold(int n, int num_principals, double radius, double pi_lower) {
  if (n < 2 || num_principals < 1) throw DomainError("tau_threshold needs N >= 2 and J >= 1");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw DomainError("radius must be finite and >= 0");
  const double nm1 = n - 1;
  if (!(pi_lower > 0.0) || nm1 * pi_lower > 1.0) {
    throw DomainError("pi_lower must lie in (0, 1/(N-1))");
  }
  const double margin = 1.0 - nm1 * pi_lower;
  if (margin <= 0.0) return std::numeric_limits<double>::infinity();
  const double N = n;
  return 2.0 * N * N * num_principals * radius / (pi_lower * margin);
}

struct RegretReport {
  int rounds = 0;  // T
  double lipschitz = 0.0;
  double slack = 1e-6;
  std::vector<double> deviation;                        // a_0 .. a_T
  std::vector<double> bound;                            // bound(T) for T = 1..T
  std::vector<std::vector<double>> cumulative_regret;   // [j][T-1] = R_j(T)
  std::vector<std::vector<double>> instantaneous;       // [j][t-1], full-horizon comparator
  std::vector<Vector> comparators;                      // best fixed incentive over all T rounds
  bool bound_satisfied = true;
  std::string notes =
      "a_t = max_j ||y^{j,(t)} - y^{j,final}||_inf uses the final iterate as a proxy for the "
      "exact equilibrium";
};

namespace detail {

// y -> sum_t f_j(y; Y^{-j,(t)}) for a fixed set of rounds.
class SummedPrincipalObjective {
 public:
  void add(PrincipalObjective term) { terms_.push_back(std::move(term)); }

  double value(const Vector& y) const {
    double total = 0.0;
    for (const auto& t : terms_) total += t.value(y);
    return total;
  }

  double value_and_gradient(const Vector& y, Vector& grad) const {
    grad = Vector::Zero(y.size());
    Vector term_grad;
    double total = 0.0;
    for (const auto& t : terms_) {
      total += t.value_and_gradient(y, term_grad);
      grad += term_grad;
    }
    return total;
  }

  Vector diagonal_metric(const Vector& y) const {
    Vector mean_inverse = Vector::Zero(y.size());
    for (const auto& t : terms_) mean_inverse += t.diagonal_metric(y).cwiseInverse();
    return (mean_inverse / static_cast<double>(terms_.size())).cwiseInverse();
  }

 private:
  std::vector<PrincipalObjective> terms_;
};

}  // namespace detail

/// Regret of every principal along a traced run. The inner maximization over
/// the fixed comparator uses projected ascent on the summed objective, started
/// from the best of zero, the previous horizon's comparator and every realized
/// iterate.
inline RegretReport regret_trace(const GameInstance& g, const EquilibriumResult& result,
                                 const SolverOptions& inner = {}) {
  if (result.trace.empty()) throw DomainError("regret needs a traced run");
  const int T = static_cast<int>(result.trace.size()) - 1;
  const int J = g.num_principals();
  const Vector zero = Vector::Zero(g.num_candidates());

  RegretReport report;
  report.rounds = T;
  report.lipschitz = lipschitz_constant(g);
  report.deviation = deviation_proxies(result);
  report.cumulative_regret.assign(static_cast<std::size_t>(J), {});
  report.instantaneous.assign(static_cast<std::size_t>(J), {});

  double deviation_sum = 0.0;
  for (int t = 1; t <= T; ++t) {
    deviation_sum += report.deviation[static_cast<std::size_t>(t)] +
                     report.deviation[static_cast<std::size_t>(t - 1)];
    report.bound.push_back(2.0 * report.lipschitz * (J - 1) * deviation_sum);
  }

  for (int j = 0; j < J; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    std::vector<PrincipalObjective> rounds;
    std::vector<double> realized;
    for (int t = 1; t <= T; ++t) {
      const auto& rec = result.trace[static_cast<std::size_t>(t)];
      Vector others = zero;
      for (int i = 0; i < J; ++i) {
        if (i != j) others += rec.incentives[static_cast<std::size_t>(i)];
      }
      rounds.emplace_back(g, j, std::move(others));
      realized.push_back(rounds.back().value(rec.incentives[ju]));
    }

    detail::SummedPrincipalObjective summed;
    Vector comparator = zero;
    double realized_sum = 0.0;
    for (int t = 1; t <= T; ++t) {
      summed.add(rounds[static_cast<std::size_t>(t - 1)]);
      realized_sum += realized[static_cast<std::size_t>(t - 1)];

      Vector start = comparator;
      double start_value = summed.value(start);
      auto consider = [&](const Vector& candidate) {
        const double v = summed.value(candidate);
        if (v > start_value) {
          start_value = v;
          start = candidate;
        }
      };
      consider(zero);
      for (int s = 1; s <= T; ++s) consider(result.trace[static_cast<std::size_t>(s)].incentives[ju]);

      const BoxAscentResult best =
          maximize_on_box(summed, zero, g.incentive_cap(j), start, inner);
      comparator = best.x;
      const double regret = best.value - realized_sum;
      report.cumulative_regret[ju].push_back(regret);
      if (regret > report.bound[static_cast<std::size_t>(t - 1)] + report.slack) {
        report.bound_satisfied = false;
      }
    }
    for (int t = 1; t <= T; ++t) {
      const auto& term = rounds[static_cast<std::size_t>(t - 1)];
      report.instantaneous[ju].push_back(term.value(comparator) -
                                         realized[static_cast<std::size_t>(t - 1)]);
    }
    report.comparators.push_back(std::move(comparator));
  }
  return report;
}

struct StabilityOptions {
  double delta = 1e-3;
  int probes = 8;
  std::uint64_t seed = 0;
  double max_spread = 10.0;
  // ||delta pi||_2 at or below this counts as no response.
  double response_floor = 1e-9;
  JacobiOptions solve = [] {
    JacobiOptions o;
    o.epsilon = 1e-11;
    o.max_rounds = 1000;
    o.record_trace = false;
    o.subproblem.grad_tol = 1e-11;
    o.subproblem.max_iters = 5000;
    return o;
  }();
};

struct ProbeFamily {
  std::string name;  // "log_pi0" or "q<j>"
  std::vector<double> ratios;
  double spread = 1.0;  // max/min over responding probes
  bool responsive = false;
};

struct StabilityReport {
  double tau = 0.0;
  double tau_threshold = 0.0;
  double pi_lower = 0.0;
  double radius = 0.0;
  bool above_threshold = false;
  bool pattern_stable = true;
  int invalid_probes = 0;
  std::vector<ProbeFamily> families;
  bool ratios_bounded = true;  // every family's spread <= max_spread
  std::string notes =
      "log pi0 perturbations are mean-centred (renormalization annihilates constant shifts); "
      "perturbed rewards are clamped at zero";
};

namespace detail {

inline bool same_patterns(const IncentiveProfile& a, const GameInstance& ga,
                          const IncentiveProfile& b, const GameInstance& gb, double atol) {
  for (int j = 0; j < ga.num_principals(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const auto pa = classify_bounds(a.per_principal[ju], Vector::Zero(ga.num_candidates()),
                                    ga.incentive_cap(j), atol);
    const auto pb = classify_bounds(b.per_principal[ju], Vector::Zero(gb.num_candidates()),
                                    gb.incentive_cap(j), atol);
    if (pa != pb) return false;
  }
  return true;
}

inline void finish_family(ProbeFamily& family, const std::vector<double>& responses,
                          double floor) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  bool any_silent = false;
  for (std::size_t k = 0; k < responses.size(); ++k) {
    if (responses[k] <= floor) {
      any_silent = true;
      continue;
    }
    family.responsive = true;
    lo = std::min(lo, family.ratios[k]);
    hi = std::max(hi, family.ratios[k]);
  }
  if (!family.responsive) {
    family.spread = 1.0;
  } else if (any_silent) {
    family.spread = std::numeric_limits<double>::infinity();
  } else {
    family.spread = hi / lo;
  }
}

}  // namespace detail

/// Perturbs log pi0 and then each q^j by random vectors of norm delta,
/// re-solves, and reports ||delta pi*||_2 / delta per probe together with
/// whether every principal's active pattern survived.
inline StabilityReport stability_probe(const GameInstance& g, const StabilityOptions& opts = {}) {
  if (!(opts.delta >= 0.0)) throw DomainError("delta must be nonnegative");
  if (opts.probes <= 0) throw DomainError("need at least one probe");
  const EquilibriumResult base = solve_equilibrium(g, {}, opts.solve);
  if (!base.converged) throw DomainError("base instance did not converge");
  const Vector& pi_star = base.policy.probs();
  const double atol = opts.solve.subproblem.active_tol;

  StabilityReport report;
  report.tau = g.tau();
  report.pi_lower = pi_star.minCoeff();
  for (int j = 0; j < g.num_principals(); ++j) {
    report.radius = std::max(
        report.radius,
        (g.incentive_cap(j) - base.incentives.per_principal[static_cast<std::size_t>(j)]).norm());
  }
  report.tau_threshold = tau_threshold(static_cast<int>(g.num_candidates()), g.num_principals(),
                                       report.radius, report.pi_lower);
  report.above_threshold = g.tau() > report.tau_threshold;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index n = g.num_candidates();
  auto random_direction = [&](bool centred) {
    Vector d(n);
    for (Index i = 0; i < n; ++i) d[i] = normal(rng);
    if (centred) d.array() -= d.mean();
    const double norm = d.norm();
    return norm > 0.0 ? Vector(d * (opts.delta / norm)) : Vector(Vector::Zero(n));
  };

  auto run_probe = [&](const GameInstance& perturbed, ProbeFamily& family,
                       std::vector<double>& responses) {
    const EquilibriumResult r = solve_equilibrium(perturbed, {}, opts.solve);
    if (!r.converged) {
      ++report.invalid_probes;
      return;
    }
    const double response = (r.policy.probs() - pi_star).norm();
    responses.push_back(response);
    family.ratios.push_back(opts.delta > 0.0 ? response / opts.delta : 0.0);
    if (!detail::same_patterns(base.incentives, g, r.incentives, perturbed, atol)) {
      report.pattern_stable = false;
    }
  };

  {
    ProbeFamily family{"log_pi0", {}, 1.0, false};
    std::vector<double> responses;
    for (int k = 0; k < opts.probes; ++k) {
      const Vector log_pi0 = g.log_base_policy() + random_direction(true);
      const GameInstance perturbed(PolicySimplex::from_log_weights(log_pi0), g.rewards(),
                                   g.weights(), g.tau());
      run_probe(perturbed, family, responses);
    }
    detail::finish_family(family, responses, opts.response_floor);
    report.families.push_back(std::move(family));
  }
  for (int j = 0; j < g.num_principals(); ++j) {
    ProbeFamily family{"q" + std::to_string(j), {}, 1.0, false};
    std::vector<double> responses;
    for (int k = 0; k < opts.probes; ++k) {
      std::vector<Vector> rewards = g.rewards();
      auto& q = rewards[static_cast<std::size_t>(j)];
      q = (q + random_direction(false)).cwiseMax(0.0);
      const GameInstance perturbed(g.base_policy(), std::move(rewards), g.weights(), g.tau());
      run_probe(perturbed, family, responses);
    }
    detail::finish_family(family, responses, opts.response_floor);
    report.families.push_back(std::move(family));
  }
  for (const auto& f : report.families) {
    report.ratios_bounded = report.ratios_bounded && f.spread <= opts.max_spread;
  }
  return report;
}

}  // namespace cage
