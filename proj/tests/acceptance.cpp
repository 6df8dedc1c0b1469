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

// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is the number of failed criteria (0 when all pass).

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cage/cage.hpp"
#include "test_support.hpp"

namespace {

using namespace cage;
using cage::testing::InstanceShape;
using cage::testing::random_instance;

// Pinned tolerances and budgets.
constexpr double kGradRelTol = 1e-5;
constexpr double kGradSeconds = 10.0;
constexpr double kClosedFormTol = 1e-12;
constexpr double kUniquenessTol = 1e-3;
constexpr double kUniquenessSeconds = 120.0;
constexpr double kBruteForceTol = 1e-2;
constexpr double kPotentialTol = 1e-3;
constexpr double kRoundTripTol = 1e-9;
constexpr double kRegretSlack = 1e-6;
constexpr double kMaxSpread = 10.0;
constexpr double kMonteCarloSe = 3.0;
constexpr double kDecodeSeconds = 10.0;

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double inf_norm(const Vector& v) { return v.lpNorm<Eigen::Infinity>(); }

// ------------------------------------------------------------------ 1

void gradient_correctness() {
  std::mt19937_64 rng(1001);
  const auto t0 = std::chrono::steady_clock::now();
  double worst_grad = 0.0;
  double worst_jac = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto g = random_instance(rng, {.n_max = 10, .j_max = 3, .tau_min = 0.05, .tau_max = 1.0,
                                         .reward_max = 2.0});
    const Index n = g.num_candidates();
    const int j = static_cast<int>(rng() % static_cast<unsigned>(g.num_principals()));
    const Vector others = cage::testing::random_vector(rng, n, 0.0, 1.0);
    const Vector y = 0.05 * g.incentive_cap(j) + 0.9 * cage::testing::random_feasible(rng, g, j);
    const auto oth = cage::testing::to_std(others);
    const Vector fd = cage::testing::central_difference(
        [&](const Vector& x) {
          return cage::testing::oracle_principal_value(g, j, cage::testing::to_std(x), oth);
        },
        y, 1e-6);
    worst_grad = std::max(worst_grad, cage::testing::relative_error(principal_gradient(j, y, others, g), fd));

    const Vector Y = others + y;
    const auto pi0 = cage::testing::to_std(g.base_policy().probs());
    const Matrix fd_jac = cage::testing::central_difference_jacobian(
        [&](const Vector& x) {
          const auto p = cage::testing::oracle_policy(pi0, cage::testing::to_std(x), g.tau());
          return Vector(Eigen::Map<const Vector>(p.data(), n));
        },
        Y, 1e-6);
    worst_jac = std::max(worst_jac, cage::testing::relative_error(response_jacobian(Y, g), fd_jac));
  }
  const double secs = seconds_since(t0);
  report(1, "gradient and Jacobian match central differences",
         worst_grad <= kGradRelTol && worst_jac <= kGradRelTol && secs < kGradSeconds,
         fmt("200 instances, max rel err grad %.2e jac %.2e <= %.0e, %.2f s < %.0f s", worst_grad,
             worst_jac, kGradRelTol, secs, kGradSeconds));
}

// ------------------------------------------------------------------ 2

void closed_form_best_response() {
  const GameInstance g(PolicySimplex::uniform(2), {Vector::Zero(2)}, PreferenceWeights(Vector::Ones(1)), 1.0);
  const PolicySimplex pi = best_response((Vector(2) << std::log(3.0), 0.0).finished(), g);
  const double case_err = std::max(std::abs(pi[0] - 0.75), std::abs(pi[1] - 0.25));

  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  double shift_err = 0.0;
  double norm_err = 0.0;
  double oracle_err = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto h = random_instance(rng, {.n_max = 10});
    const Vector Y = cage::testing::random_vector(rng, h.num_candidates(), -1.0, 1.0);
    const Vector a = best_response(Y, h).probs();
    const Vector b = best_response((Y.array() + shift(rng)).matrix(), h).probs();
    shift_err = std::max(shift_err, inf_norm(a - b));
    norm_err = std::max(norm_err, std::abs(a.sum() - 1.0));
    const auto o = cage::testing::oracle_policy(cage::testing::to_std(h.base_policy().probs()),
                                                cage::testing::to_std(Y), h.tau());
    oracle_err = std::max(oracle_err, inf_norm(a - Eigen::Map<const Vector>(o.data(), a.size())));
  }
  report(2, "closed-form best response",
         case_err <= kClosedFormTol && shift_err <= kClosedFormTol && norm_err <= kClosedFormTol &&
             oracle_err <= kClosedFormTol,
         fmt("(ln3,0) case err %.1e; 1000 instances: shift %.1e, sum-1 %.1e, vs oracle %.1e; tol %.0e",
             case_err, shift_err, norm_err, oracle_err, kClosedFormTol));
}

// ------------------------------------------------------------------ 3 and 6

struct SuiteRun {
  GameInstance game;
  EquilibriumResult result;
};

std::vector<SuiteRun> suite_traces;

void equilibrium_uniqueness() {
  std::mt19937_64 rng(1003);
  const auto t0 = std::chrono::steady_clock::now();
  const InstanceShape shape{.n_max = 5, .j_max = 3, .tau_min = 0.05, .tau_max = 0.5, .reward_max = 2.0};
  double worst_pi = 0.0;
  double worst_y = 0.0;
  int unconverged = 0;
  int active = 0;
  for (int k = 0; k < 100; ++k) {
    const auto g = random_instance(rng, shape);
    std::optional<EquilibriumResult> first;
    for (int r = 0; r < 10; ++r) {
      std::vector<Vector> init;
      for (int j = 0; j < g.num_principals(); ++j) init.push_back(cage::testing::random_feasible(rng, g, j));
      EquilibriumResult res = solve_equilibrium(g, IncentiveProfile::from(init));
      if (!res.converged) {
        ++unconverged;
        continue;
      }
      if (!first) {
        first = res;
        if (res.incentives.aggregate.maxCoeff() > 1e-3) ++active;
      } else {
        worst_pi = std::max(worst_pi, inf_norm(res.policy.probs() - first->policy.probs()));
        worst_y = std::max(worst_y, inf_norm(res.incentives.aggregate - first->incentives.aggregate));
      }
      suite_traces.push_back({g, std::move(res)});
    }
  }
  const double secs = seconds_since(t0);
  report(3, "equilibrium unique across restarts",
         unconverged == 0 && worst_pi <= kUniquenessTol && worst_y <= kUniquenessTol &&
             secs < kUniquenessSeconds,
         fmt("100 instances x 10 restarts, %d with active incentives, %d unconverged; max gap pi %.1e "
             "Y %.1e <= %.0e; %.1f s < %.0f s",
             active, unconverged, worst_pi, worst_y, kUniquenessTol, secs, kUniquenessSeconds));
}

void regret_bound() {
  int traces = 0;
  int violations = 0;
  int half_checked = 0;
  int half_violations = 0;
  double worst_excess = -INFINITY;
  for (const auto& run : suite_traces) {
    const RegretReport rep = regret_trace(run.game, run.result);
    ++traces;
    const int T = rep.rounds;
    for (std::size_t j = 0; j < rep.cumulative_regret.size(); ++j) {
      const auto& R = rep.cumulative_regret[j];
      const double excess = R.back() - rep.bound.back();
      worst_excess = std::max(worst_excess, excess);
      for (int t = 0; t < T; ++t) {
        if (R[static_cast<std::size_t>(t)] > rep.bound[static_cast<std::size_t>(t)] + kRegretSlack) {
          ++violations;
          break;
        }
      }
      const int half = T / 2;
      if (half >= 1) {
        ++half_checked;
        const double full_avg = R.back() / T;
        const double half_avg = R[static_cast<std::size_t>(half - 1)] / half;
        if (full_avg > half_avg + kRegretSlack) ++half_violations;
      }
    }
  }
  report(6, "regret within the bound and non-increasing on average",
         traces > 0 && violations == 0 && half_violations == 0,
         fmt("%d converged traces, %d bound violations (max R-bound %.2e, slack %.0e); "
             "half-horizon %d/%d ok",
             traces, violations, worst_excess, kRegretSlack, half_checked - half_violations, half_checked));
}

// ------------------------------------------------------------------ 4

void oracle_agreement() {
  std::mt19937_64 rng(1004);
  const InstanceShape shape{.n_min = 2, .n_max = 3, .j_min = 1, .j_max = 2, .tau_min = 0.2,
                            .tau_max = 0.5, .reward_max = 2.0};
  double worst_bf = 0.0;
  double worst_phi = 0.0;
  int single = 0;
  int active = 0;
  int unconverged = 0;
  for (int k = 0; k < 50; ++k) {
    const auto g = random_instance(rng, shape);
    const auto eq = solve_equilibrium(g);
    if (!eq.converged) ++unconverged;
    if (eq.incentives.aggregate.maxCoeff() > 1e-3) ++active;
    const auto bf = brute_force_equilibrium(g);
    worst_bf = std::max(worst_bf, inf_norm(eq.policy.probs() - bf.policy.probs()));
    if (g.num_principals() == 1) {
      ++single;
      const auto phi = maximize_policy_objective(g);
      worst_phi = std::max(worst_phi, inf_norm(eq.policy.probs() - phi.policy.probs()));
    }
  }
  report(4, "Jacobi agrees with brute force and the J=1 potential maximizer",
         unconverged == 0 && worst_bf <= kBruteForceTol && worst_phi <= kPotentialTol && single > 0,
         fmt("50 instances (tau in [0.2,0.5], %d with active incentives): brute force gap %.3e (tol %.0e); "
             "%d J=1 instances, potential gap %.1e (tol %.0e)",
             active, worst_bf, kBruteForceTol, single, worst_phi, kPotentialTol));
}

// ------------------------------------------------------------------ 5

void min_cost_round_trip() {
  std::mt19937_64 rng(1005);
  double worst = 0.0;
  int infeasible = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto g = random_instance(rng, {.n_max = 10, .tau_min = 0.05, .tau_max = 1.0, .reward_max = 2.0});
    Vector Y = Vector::Zero(g.num_candidates());
    for (int j = 0; j < g.num_principals(); ++j) Y += cage::testing::random_feasible(rng, g, j);
    const PolicySimplex pi = best_response(Y, g);
    try {
      worst = std::max(worst, inf_norm(best_response(min_cost_incentive(pi, g), g).probs() - pi.probs()));
    } catch (const InfeasibleError&) {
      ++infeasible;
    }
  }
  report(5, "min-cost incentive inverts the best response", infeasible == 0 && worst <= kRoundTripTol,
         fmt("1000 reachable policies, %d rejected, max err %.1e <= %.0e", infeasible, worst, kRoundTripTol));
}

// ------------------------------------------------------------------ 7

void stability() {
  const bool exact = tau_threshold(2, 2, 1.0, 0.25) == 256.0 / 3.0;

  std::mt19937_64 rng(1007);
  std::uniform_real_distribution<double> log_tau(std::log(50.0), std::log(2000.0));
  int qualifying = 0;
  int examined = 0;
  int unbounded = 0;
  double worst_spread = 1.0;
  while (qualifying < 20 && examined < 200) {
    ++examined;
    const double tau = std::exp(log_tau(rng));
    const auto g = random_instance(rng, {.n_min = 2, .n_max = 3, .j_min = 1, .j_max = 2, .tau_min = tau,
                                         .tau_max = tau, .base_floor = 0.3});
    bool ok = true;
    bool counted = false;
    for (double delta : {1e-3, 1e-4}) {
      StabilityOptions o;
      o.delta = delta;
      o.seed = rng();
      const StabilityReport rep = stability_probe(g, o);
      if (!rep.above_threshold || !rep.pattern_stable || rep.invalid_probes > 0) {
        ok = false;
        break;
      }
      counted = true;
      for (const auto& f : rep.families) worst_spread = std::max(worst_spread, f.spread);
      if (!rep.ratios_bounded) ok = false;
    }
    if (counted) {
      ++qualifying;
      if (!ok) ++unbounded;
    }
  }
  report(7, "stability above the tau threshold",
         exact && qualifying >= 20 && unbounded == 0 && worst_spread <= kMaxSpread,
         fmt("threshold(2,2,1,0.25) = %.15g %s 256/3; %d qualifying instances of %d examined, "
             "delta in {1e-3,1e-4}, max spread %.3f <= %.0f",
             tau_threshold(2, 2, 1.0, 0.25), exact ? "==" : "!=", qualifying, examined, worst_spread,
             kMaxSpread));
}

// ------------------------------------------------------------------ 8

void metrics_kernels() {
  const bool exact = hypervolume({{1, 1}}, {0, 0}) == 1.0 && hypervolume({{2, 1}, {1, 2}}, {0, 0}) == 3.0 &&
                     hypervolume({{1, 1, 1}}, {0, 0, 0}) == 1.0;
  std::mt19937_64 rng(1008);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr int kSamples = 200000;
  int within = 0;
  double worst_z = 0.0;
  for (int s = 0; s < 20; ++s) {
    std::vector<Point> pts(5 + s, Point(3));
    for (auto& p : pts) for (auto& x : p) x = u(rng);
    int hits = 0;
    for (int k = 0; k < kSamples; ++k) {
      const double z0 = u(rng), z1 = u(rng), z2 = u(rng);
      for (const auto& p : pts) {
        if (z0 <= p[0] && z1 <= p[1] && z2 <= p[2]) {
          ++hits;
          break;
        }
      }
    }
    const double est = static_cast<double>(hits) / kSamples;
    const double se = std::sqrt(est * (1.0 - est) / kSamples);
    const double z = std::abs(hypervolume(pts, {0, 0, 0}) - est) / se;
    worst_z = std::max(worst_z, z);
    if (z <= kMonteCarloSe) ++within;
  }
  report(8, "hypervolume kernels", exact && within == 20,
         fmt("exact cases %s; %d/20 random 3-D sets within %.0f SE of Monte Carlo (worst %.2f SE)",
             exact ? "ok" : "wrong", within, kMonteCarloSe, worst_z));
}

// ------------------------------------------------------------------ 9

int run_cli(const std::string& args) {
  const int status = std::system((std::string(CAGE_CLI_PATH) + " " + args).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int csv_data_rows(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  int rows = -1;  // header
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  return rows;
}

void protocol_constants() {
  const DecodeOptions d;
  const bool lib = d.tau == 0.1 && d.top_n == 50 && d.epsilon == 1e-4 && d.selection == Selection::kGreedy &&
                   d.max_new_tokens == 512;

  const auto dir = std::filesystem::temp_directory_path() / ("cage_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string out = (dir / "decode.json").string();
  bool cli = run_cli("decode --synth 2,8,0 --weights 0.5,0.5 -o " + out) == 0;
  if (cli) {
    const Json opts = parse_json(read_text_file(out), out)["metadata"]["options"];
    cli = opts["tau"] == 0.1 && opts["top_n"] == 50 && opts["epsilon"] == 1e-4 && opts["select"] == "greedy" &&
          opts["max_new_tokens"] == 512;
  }
  const std::string a = (dir / "help2d.csv").string();
  const std::string b = (dir / "simplex31.csv").string();
  const int rows2 = run_cli("sweep --grid help2d --synth 3,8,0 -o " + a) == 0 ? csv_data_rows(a) : -1;
  const int rows3 = run_cli("sweep --grid simplex31 --synth 3,8,0 -o " + b) == 0 ? csv_data_rows(b) : -1;
  std::filesystem::remove_all(dir);
  const bool grids = helpfulness_grid_2d().size() == 8 && simplex_grid_31().size() == 31;
  report(9, "protocol constants and built-in grids", lib && cli && grids && rows2 == 8 && rows3 == 31,
         fmt("library defaults %s, CLI echo %s, sweep rows help2d %d (8) simplex31 %d (31)", lib ? "ok" : "wrong",
             cli ? "ok" : "wrong", rows2, rows3));
}

// ------------------------------------------------------------------ 10

void decode_determinism() {
  const auto stream = synth_stream(100, 50, 2, 0.3, 2026);
  const PreferenceWeights w((Vector(2) << 0.4, 0.6).finished());
  const DecodeOptions opts;
  auto t0 = std::chrono::steady_clock::now();
  const DecodeOutcome a = decode_stream(stream, w, opts);
  const double first = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const DecodeOutcome b = decode_stream(stream, w, opts);
  const double second = seconds_since(t0);

  bool identical = a.tokens == b.tokens && a.rounds == b.rounds && a.policies.size() == b.policies.size();
  for (std::size_t t = 0; identical && t < a.policies.size(); ++t) {
    identical = std::memcmp(a.policies[t].data(), b.policies[t].data(),
                            sizeof(double) * static_cast<std::size_t>(a.policies[t].size())) == 0;
  }
  identical = identical && std::memcmp(a.cumulative_reward.data(), b.cumulative_reward.data(),
                                       sizeof(double) * a.cumulative_reward.size()) == 0;
  const double worst = std::max(first, second);
  report(10, "100-step decode is bit-reproducible and fast",
         identical && a.tokens.size() == 100 && worst < kDecodeSeconds,
         fmt("N=50, J=2: %zu tokens, runs %s, converged %.0f%%, slowest run %.2f s < %.0f s", a.tokens.size(),
             identical ? "identical" : "differ", 100.0 * a.converged_fraction(), worst, kDecodeSeconds));
}

}  // namespace

int main() {
  gradient_correctness();
  closed_form_best_response();
  equilibrium_uniqueness();
  oracle_agreement();
  min_cost_round_trip();
  regret_bound();
  stability();
  metrics_kernels();
  protocol_constants();
  decode_determinism();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
