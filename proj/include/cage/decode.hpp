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

// Token-level decoding over recorded logit streams. Each record lists the
// candidate tokens of one step with base-model and per-objective guidance
// log-probabilities; the harness turns it into a game, solves the
// equilibrium, and picks a token.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cage/game.hpp"
#include "cage/jacobi.hpp"

namespace cage {

struct LogitRecord {
  std::int64_t step = 0;
  std::vector<std::int64_t> ids;
  Vector base;                     // natural-log probabilities
  std::vector<Vector> objectives;  // one vector per objective, same candidates

  Index size() const noexcept { return base.size(); }

  void validate() const {
    const std::string where = "record at step " + std::to_string(step) + ": ";
    if (base.size() < 2) throw FormatError(where + "need at least two candidates");
    if (static_cast<Index>(ids.size()) != base.size()) {
      throw FormatError(where + "ids and base log-probabilities differ in length");
    }
    if (objectives.empty()) throw FormatError(where + "no objective log-probabilities");
    for (std::size_t j = 0; j < objectives.size(); ++j) {
      if (objectives[j].size() != base.size()) {
        throw FormatError(where + "objective " + std::to_string(j) + " has wrong length");
      }
      if (!objectives[j].allFinite()) {
        throw FormatError(where + "objective " + std::to_string(j) + " is not finite");
      }
    }
    if (!base.allFinite()) throw FormatError(where + "base log-probabilities are not finite");
  }
};

enum class RewardNormalization { kShiftMinToZero, kClampNegativeToZero };
enum class Selection { kGreedy, kSample };

inline const char* to_string(RewardNormalization n) {
  return n == RewardNormalization::kShiftMinToZero ? "shift" : "clamp";
}
inline const char* to_string(Selection s) { return s == Selection::kGreedy ? "greedy" : "sample"; }

struct DecodeOptions {
  int top_n = 50;
  double tau = 0.1;
  double epsilon = 1e-4;
  int max_new_tokens = 512;
  Selection selection = Selection::kGreedy;
  std::uint64_t seed = 0;
  RewardNormalization normalization = RewardNormalization::kShiftMinToZero;
  bool warm_start = true;
  int max_rounds = 100;
  UpdateMode mode = UpdateMode::kJacobi;
  SolverOptions subproblem;

  void validate() const {
    if (top_n < 2) throw DomainError("top_n must be at least 2");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    if (max_new_tokens < 0) throw DomainError("max_new_tokens must be nonnegative");
    if (max_rounds <= 0) throw DomainError("max_rounds must be positive");
    subproblem.validate();
  }

  JacobiOptions jacobi() const {
    JacobiOptions o;
    o.epsilon = epsilon;
    o.max_rounds = max_rounds;
    o.mode = mode;
    o.record_trace = false;
    o.subproblem = subproblem;
    return o;
  }
};

/// Indices of the top_n candidates by base log-probability (ties to the lower
/// index), returned in ascending index order.
inline std::vector<std::size_t> top_candidates(const LogitRecord& rec, int top_n) {
  std::vector<std::size_t> order(static_cast<std::size_t>(rec.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (static_cast<Index>(order.size()) <= top_n) return order;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rec.base[static_cast<Index>(a)] > rec.base[static_cast<Index>(b)];
  });
  order.resize(static_cast<std::size_t>(top_n));
  std::sort(order.begin(), order.end());
  return order;
}

/// Keeps only the given candidates.
inline LogitRecord restrict_record(const LogitRecord& rec, const std::vector<std::size_t>& keep) {
  LogitRecord out;
  out.step = rec.step;
  const auto n = static_cast<Index>(keep.size());
  out.base.resize(n);
  out.objectives.assign(rec.objectives.size(), Vector(n));
  for (Index k = 0; k < n; ++k) {
    const auto src = static_cast<Index>(keep[static_cast<std::size_t>(k)]);
    out.ids.push_back(rec.ids[static_cast<std::size_t>(src)]);
    out.base[k] = rec.base[src];
    for (std::size_t j = 0; j < rec.objectives.size(); ++j) out.objectives[j][k] = rec.objectives[j][src];
  }
  return out;
}

/// Implicit rewards log pi_obj(a) - log pi_base(a), before normalization.
inline std::vector<Vector> raw_rewards(const LogitRecord& rec) {
  rec.validate();
  std::vector<Vector> q;
  q.reserve(rec.objectives.size());
  for (const auto& obj : rec.objectives) q.push_back(obj - rec.base);
  return q;
}

/// Implicit rewards made nonnegative per objective: either shifted so the
/// minimum is zero (differences preserved) or clamped at zero.
inline std::vector<Vector> extract_rewards(const LogitRecord& rec, RewardNormalization norm) {
  std::vector<Vector> q = raw_rewards(rec);
  for (auto& v : q) {
    if (norm == RewardNormalization::kShiftMinToZero) {
      v.array() -= v.minCoeff();
    } else {
      v = v.cwiseMax(0.0);
    }
  }
  return q;
}

/// Base distribution renormalized over the listed candidates.
inline PolicySimplex candidate_base_policy(const LogitRecord& rec) {
  return PolicySimplex::from_log_weights(rec.base);
}

struct StepResult {
  std::size_t chosen = 0;  // index into the full record
  std::int64_t token = 0;
  std::vector<std::size_t> candidates;  // record indices that entered the game
  EquilibriumResult equilibrium;
  bool fallback = false;  // equilibrium not reached; best response to last aggregate used
};

namespace detail {

// Uniform double in [0, 1) built from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t greedy_index(const Vector& p) {
  Index best = 0;
  for (Index i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return static_cast<std::size_t>(best);
}

inline std::size_t sample_index(const Vector& p, std::mt19937_64& rng) {
  const double u = unit_uniform(rng);
  double cumulative = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    cumulative += p[i];
    if (u < cumulative) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(p.size() - 1);
}

}  // namespace detail

/// Builds the step game over the top-N candidates, solves it (optionally
/// warm-started from `warm`, projected into the new boxes) and selects a token.
inline StepResult step_decode(const LogitRecord& rec, const PreferenceWeights& weights,
                              const DecodeOptions& opts,
                              const std::optional<IncentiveProfile>& warm = std::nullopt,
                              std::mt19937_64* rng = nullptr) {
  opts.validate();
  rec.validate();
  if (static_cast<Index>(rec.objectives.size()) != weights.size()) {
    throw DomainError("record at step " + std::to_string(rec.step) + " has " +
                      std::to_string(rec.objectives.size()) + " objectives but " +
                      std::to_string(weights.size()) + " weights were given");
  }
  StepResult out;
  out.candidates = top_candidates(rec, opts.top_n);
  const LogitRecord game_rec = restrict_record(rec, out.candidates);
  const GameInstance g(candidate_base_policy(game_rec),
                       extract_rewards(game_rec, opts.normalization), weights, opts.tau);

  std::optional<IncentiveProfile> init;
  if (warm && warm->num_principals() == g.num_principals() &&
      warm->aggregate.size() == g.num_candidates()) {
    std::vector<Vector> projected;
    for (int j = 0; j < g.num_principals(); ++j) {
      projected.push_back(project_to_box(j, warm->per_principal[static_cast<std::size_t>(j)], g));
    }
    init = IncentiveProfile::from(std::move(projected));
  }

  out.equilibrium = solve_equilibrium(g, init, opts.jacobi());
  out.fallback = !out.equilibrium.converged;
  const Vector& policy = out.equilibrium.policy.probs();
  std::size_t local = 0;
  if (opts.selection == Selection::kSample) {
    if (rng == nullptr) throw DomainError("sampling selection needs a random generator");
    local = detail::sample_index(policy, *rng);
  } else {
    local = detail::greedy_index(policy);
  }
  out.chosen = out.candidates[local];
  out.token = rec.ids[out.chosen];
  return out;
}

struct DecodeOutcome {
  std::vector<std::int64_t> tokens;
  std::vector<std::int64_t> steps;
  std::vector<Vector> policies;
  std::vector<bool> converged;
  std::vector<int> rounds;
  std::vector<double> cumulative_reward;  // raw implicit reward of chosen tokens, per objective

  double converged_fraction() const {
    if (converged.empty()) return 1.0;
    return static_cast<double>(std::count(converged.begin(), converged.end(), true)) /
           static_cast<double>(converged.size());
  }
};

/// Decodes records in order, warm-starting each step from the previous one.
/// Stops after max_new_tokens steps.
inline DecodeOutcome decode_stream(const std::vector<LogitRecord>& records,
                                   const PreferenceWeights& weights, const DecodeOptions& opts) {
  opts.validate();
  DecodeOutcome out;
  out.cumulative_reward.assign(static_cast<std::size_t>(weights.size()), 0.0);
  std::mt19937_64 rng(opts.seed);
  std::optional<IncentiveProfile> warm;
  std::optional<std::int64_t> previous_step;
  for (const auto& rec : records) {
    if (static_cast<int>(out.tokens.size()) >= opts.max_new_tokens) break;
    if (previous_step && rec.step <= *previous_step) {
      throw FormatError("stream not ordered by step at step " + std::to_string(rec.step));
    }
    previous_step = rec.step;
    StepResult r = step_decode(rec, weights, opts, opts.warm_start ? warm : std::nullopt, &rng);
    const std::vector<Vector> raw = raw_rewards(rec);
    for (std::size_t j = 0; j < raw.size(); ++j) {
      out.cumulative_reward[j] += raw[j][static_cast<Index>(r.chosen)];
    }
    out.tokens.push_back(r.token);
    out.steps.push_back(rec.step);
    out.policies.push_back(r.equilibrium.policy.probs());
    out.converged.push_back(r.equilibrium.converged);
    out.rounds.push_back(r.equilibrium.rounds);
    warm = std::move(r.equilibrium.incentives);
  }
  return out;
}

/// Reproducible synthetic stream. Per-objective reward scores are
/// z_j = rho z_1 + sqrt(1 - rho^2) e_j with standard normal z_1, e_j, so
/// rho = 1 gives identical rankings and rho = -1 (J = 2) reversed ones.
inline std::vector<LogitRecord> synth_stream(int steps, int candidates, int num_objectives,
                                             double correlation, std::uint64_t seed,
                                             double reward_scale = 1.0) {
  if (steps < 0 || candidates < 2 || num_objectives < 1) {
    throw DomainError("synthetic stream needs steps >= 0, candidates >= 2, objectives >= 1");
  }
  if (!(correlation >= -1.0 && correlation <= 1.0)) {
    throw DomainError("correlation must lie in [-1, 1]");
  }
  constexpr std::int64_t kVocabulary = 32000;
  constexpr double kCandidateMass = 0.9;  // share of the full vocabulary held by the candidates
  std::mt19937_64 rng(seed);
  // Box-Muller on platform-independent uniforms.
  auto normal = [&rng]() {
    const double u1 = 1.0 - detail::unit_uniform(rng);
    const double u2 = detail::unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  };
  auto log_normalize = [](Vector logits) {
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    logits.array() += std::log(kCandidateMass) - lse;
    return logits;
  };

  const double orthogonal = std::sqrt(std::max(0.0, 1.0 - correlation * correlation));
  std::vector<LogitRecord> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    LogitRecord rec;
    rec.step = s;
    std::set<std::int64_t> used;
    while (static_cast<int>(rec.ids.size()) < candidates) {
      const auto id = static_cast<std::int64_t>(detail::unit_uniform(rng) * kVocabulary);
      if (used.insert(id).second) rec.ids.push_back(id);
    }
    Vector logits(candidates);
    for (int k = 0; k < candidates; ++k) logits[k] = 2.0 * normal();
    Vector shared(candidates);
    for (int k = 0; k < candidates; ++k) shared[k] = normal();
    rec.base = log_normalize(logits);
    for (int j = 0; j < num_objectives; ++j) {
      Vector score = shared;
      if (j > 0) {
        for (int k = 0; k < candidates; ++k) score[k] = correlation * shared[k] + orthogonal * normal();
      }
      rec.objectives.push_back(log_normalize(logits + reward_scale * score));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace cage
