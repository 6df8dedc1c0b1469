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

// Command-line front end: solve, sweep, decode, diagnose, oracle, synth.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "cage/cage.hpp"

namespace {

using cage::Json;

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kParse = 3,
  kNoConvergence = 4,
  kInfeasible = 5,
};

// Raised for option combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr const char* kSchema = R"(CSV outputs. Every file starts with one '#' line holding the run metadata as JSON,
followed by a header row.

trace (solve --trace, diagnose --trace)
  round          Jacobi round t, 0 is the initial profile
  step_norm_<j>  ||y^j(t) - y^j(t-1)||_inf for principal j
  max_step       max over j of step_norm_<j>
  policy_change  ||pi(t) - pi(t-1)||_inf

regret (diagnose --regret-csv)
  T              horizon
  deviation      a_T, distance of round T from the final iterate
  bound          2 L_f (J-1) sum_{t<=T} (a_t + a_{t-1})
  regret_<j>     R_j(T) for principal j

sweep (sweep --out)
  point          row index in the preference grid
  w_<k>          preference weight of objective k
  proxy_reward_<k>  cumulative implicit reward of objective k over the chosen tokens
                   (a proxy for external reward-model scores)
  tokens         decoded tokens
  converged      fraction of steps whose equilibrium converged
  pareto         1 if the reward vector is non-dominated in this sweep
)";

struct SolveFlags {
  std::optional<double> tau;
  double epsilon = 1e-4;
  int max_rounds = 100;
  std::string mode = "jacobi";

  cage::JacobiOptions jacobi() const {
    cage::JacobiOptions o;
    o.epsilon = epsilon;
    o.max_rounds = max_rounds;
    o.mode = mode == "jacobi" ? cage::UpdateMode::kJacobi : cage::UpdateMode::kGaussSeidel;
    return o;
  }
};

struct DecodeFlags {
  double tau = 0.1;
  int top_n = 50;
  double epsilon = 1e-4;
  int max_rounds = 100;
  int max_new_tokens = 512;
  std::string mode = "jacobi";
  std::string norm = "shift";
  std::string select = "greedy";
  std::uint64_t seed = 0;
  bool strict_paper = false;
  std::string stream;
  std::string synth;  // STEPS,CANDIDATES,RHO

  cage::DecodeOptions options() const {
    cage::DecodeOptions o;
    o.tau = tau;
    o.top_n = top_n;
    o.epsilon = epsilon;
    o.max_rounds = max_rounds;
    o.max_new_tokens = max_new_tokens;
    o.mode = mode == "jacobi" ? cage::UpdateMode::kJacobi : cage::UpdateMode::kGaussSeidel;
    o.normalization = norm == "shift" ? cage::RewardNormalization::kShiftMinToZero
                                      : cage::RewardNormalization::kClampNegativeToZero;
    o.selection = select == "greedy" ? cage::Selection::kGreedy : cage::Selection::kSample;
    o.seed = seed;
    o.warm_start = !strict_paper;
    o.validate();
    return o;
  }
};

Json decode_echo(const cage::DecodeOptions& o, const DecodeFlags& f) {
  return Json{{"tau", o.tau},
              {"top_n", o.top_n},
              {"epsilon", o.epsilon},
              {"max_rounds", o.max_rounds},
              {"max_new_tokens", o.max_new_tokens},
              {"mode", cage::to_string(o.mode)},
              {"norm", cage::to_string(o.normalization)},
              {"select", cage::to_string(o.selection)},
              {"seed", o.seed},
              {"warm_start", o.warm_start},
              {"stream", f.stream.empty() ? Json(nullptr) : Json(f.stream)},
              {"synth", f.synth.empty() ? Json(nullptr) : Json(f.synth)}};
}

Json jacobi_echo(const cage::JacobiOptions& o, double tau) {
  return Json{{"tau", tau},
              {"epsilon", o.epsilon},
              {"max_rounds", o.max_rounds},
              {"mode", cage::to_string(o.mode)},
              {"grad_tol", o.subproblem.grad_tol},
              {"max_iters", o.subproblem.max_iters}};
}

Json metadata(const std::string& command, Json options) {
  return Json{{"tool", "cage"},
              {"version", cage::kVersion},
              {"command", command},
              {"options", std::move(options)}};
}

// Writes to `path`, or stdout when empty. The file is only created once the
// caller has something to write.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw cage::FormatError("cannot write " + path);
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void write_json(const std::string& path, const Json& j) {
  Output out(path);
  out.stream() << j.dump(2) << '\n';
}

void write_csv_header(std::ostream& out, const Json& meta) { out << "# " << meta.dump() << '\n'; }

// Loads an instance; anything wrong with the file is a parse-class failure.
cage::GameInstance load_game(const std::string& path, std::optional<double> tau) {
  try {
    cage::Json j = cage::parse_json(cage::read_text_file(path), path);
    if (tau) j["tau"] = *tau;
    return cage::game_from_json(j);
  } catch (const cage::FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw cage::FormatError(path + ": invalid instance: " + e.what());
  }
}

std::vector<cage::LogitRecord> load_stream(const DecodeFlags& f, int num_objectives) {
  if (f.stream.empty() == f.synth.empty()) {
    throw UsageError("give exactly one of --stream and --synth");
  }
  if (!f.stream.empty()) {
    try {
      return cage::read_stream_file(f.stream);
    } catch (const cage::FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw cage::FormatError(f.stream + ": " + e.what());
    }
  }
  int steps = 0;
  int candidates = 0;
  double rho = 0.0;
  char c1 = 0;
  char c2 = 0;
  std::istringstream in(f.synth);
  if (!(in >> steps >> c1 >> candidates >> c2 >> rho) || c1 != ',' || c2 != ',' || !in.eof()) {
    throw UsageError("--synth expects STEPS,CANDIDATES,RHO, got '" + f.synth + "'");
  }
  return cage::synth_stream(steps, candidates, num_objectives, rho, f.seed);
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError(flag + ": not a number: '" + cell + "'");
    }
  }
  if (out.empty()) throw UsageError(flag + " is empty");
  return out;
}

cage::PreferenceGrid load_grid(const std::string& spec) {
  if (spec == "help2d") return cage::helpfulness_grid_2d();
  if (spec == "simplex31") return cage::simplex_grid_31();
  if (spec.rfind("file:", 0) == 0) return cage::read_preference_grid(spec.substr(5));
  throw UsageError("--grid must be help2d, simplex31 or file:PATH");
}

cage::Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const cage::Vector>(v.data(), static_cast<cage::Index>(v.size()));
}

void add_decode_flags(CLI::App* cmd, DecodeFlags& f) {
  cmd->add_option("--tau", f.tau, "Agent KL temperature")->capture_default_str();
  cmd->add_option("--top-n", f.top_n, "Candidates per step")->capture_default_str();
  cmd->add_option("--epsilon", f.epsilon, "Jacobi stopping tolerance")->capture_default_str();
  cmd->add_option("--max-rounds", f.max_rounds, "Jacobi round budget per step")->capture_default_str();
  cmd->add_option("--max-new-tokens", f.max_new_tokens, "Decode length cap")->capture_default_str();
  cmd->add_option("--mode", f.mode, "Update order")
      ->check(CLI::IsMember({"jacobi", "gauss-seidel"}))
      ->capture_default_str();
  cmd->add_option("--norm", f.norm, "Implicit reward normalization")
      ->check(CLI::IsMember({"shift", "clamp"}))
      ->capture_default_str();
  cmd->add_option("--select", f.select, "Token selection")
      ->check(CLI::IsMember({"greedy", "sample"}))
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Seed for sampling and synthetic streams")->capture_default_str();
  cmd->add_flag("--strict-paper", f.strict_paper, "Cold-start every step (no warm starts)");
  cmd->add_option("--stream", f.stream, "JSONL logit stream")->check(CLI::ExistingFile);
  cmd->add_option("--synth", f.synth, "Synthetic stream STEPS,CANDIDATES,RHO");
}

void add_solve_flags(CLI::App* cmd, SolveFlags& f) {
  cmd->add_option("--tau", f.tau, "Override the instance temperature");
  cmd->add_option("--epsilon", f.epsilon, "Stopping tolerance")->capture_default_str();
  cmd->add_option("--max-rounds", f.max_rounds, "Round budget")->capture_default_str();
  cmd->add_option("--mode", f.mode, "Update order")
      ->check(CLI::IsMember({"jacobi", "gauss-seidel"}))
      ->capture_default_str();
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  std::string instance;
  std::string out;
  std::string trace;
  SolveFlags flags;
};

int run_solve(const SolveArgs& a) {
  const cage::JacobiOptions opts = a.flags.jacobi();
  opts.validate();
  const cage::GameInstance g = load_game(a.instance, a.flags.tau);
  Json echo = jacobi_echo(opts, g.tau());
  echo["instance"] = a.instance;
  const Json meta = metadata("solve", echo);

  const cage::EquilibriumResult r = cage::solve_equilibrium(g, std::nullopt, opts);
  Json out{{"metadata", meta},
           {"result", cage::equilibrium_to_json(r)},
           {"stationarity", cage::stationarity_to_json(cage::check_stationarity(r, g))}};
  write_json(a.out, out);
  if (!a.trace.empty()) {
    Output t(a.trace);
    write_csv_header(t.stream(), meta);
    cage::write_trace_csv(t.stream(), r);
  }
  if (!r.converged) {
    cage::log::error("No equilibrium point found after ", r.rounds, " rounds");
    return kNoConvergence;
  }
  return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  DecodeFlags decode;
  std::string grid = "help2d";
  std::vector<double> ref;
  bool hv = false;
  unsigned jobs = 0;
  std::string out;
  std::string summary;
};

int run_sweep(const SweepArgs& a) {
  const cage::DecodeOptions opts = a.decode.options();
  const cage::PreferenceGrid grid = load_grid(a.grid);
  const auto d = grid.front().size();
  if (a.hv && a.ref.empty()) throw UsageError("--hv needs --ref");
  if (!a.ref.empty() && a.ref.size() != d) {
    throw UsageError("--ref has " + std::to_string(a.ref.size()) + " entries, grid has " +
                     std::to_string(d) + " objectives");
  }
  const auto records = load_stream(a.decode, static_cast<int>(d));
  if (!records.empty() && records.front().objectives.size() != d) {
    throw UsageError("grid has " + std::to_string(d) + " objectives but the stream has " +
                     std::to_string(records.front().objectives.size()));
  }

  const unsigned jobs = a.jobs > 0 ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
  std::vector<cage::DecodeOutcome> outcomes(grid.size());
  std::vector<std::string> failures(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        outcomes[i] = cage::decode_stream(records, cage::PreferenceWeights(to_vector(grid[i])), opts);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < std::min<unsigned>(jobs, static_cast<unsigned>(grid.size())); ++k) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!failures[i].empty()) throw cage::FormatError("grid point " + std::to_string(i) + ": " + failures[i]);
  }

  std::vector<cage::Point> rewards;
  std::vector<cage::ParetoPoint> pairs;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& o = outcomes[i];
    const cage::Point r = o.cumulative_reward;
    rewards.push_back(r);
    pairs.push_back({grid[i], r});
  }
  const auto front = cage::pareto_filter(rewards);

  Json echo = decode_echo(opts, a.decode);
  echo["grid"] = a.grid;
  echo["ref"] = a.ref.empty() ? Json(nullptr) : Json(a.ref);
  echo["hv"] = a.hv;
  echo["jobs"] = jobs;
  const Json meta = metadata("sweep", echo);

  Output out(a.out);
  std::ostream& csv = out.stream();
  cage::set_csv_precision(csv);
  write_csv_header(csv, meta);
  csv << "point";
  for (std::size_t k = 0; k < d; ++k) csv << ",w_" << k;
  for (std::size_t k = 0; k < d; ++k) csv << ",proxy_reward_" << k;
  csv << ",tokens,converged,pareto\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    csv << i;
    for (double w : grid[i]) csv << ',' << w;
    for (double r : rewards[i]) csv << ',' << r;
    const bool on_front = std::find(front.begin(), front.end(), rewards[i]) != front.end();
    csv << ',' << outcomes[i].tokens.size() << ',' << outcomes[i].converged_fraction() << ','
        << (on_front ? 1 : 0) << '\n';
  }

  Json summary{{"metadata", meta},
               {"reward_kind", "proxy: cumulative implicit reward"},
               {"points", grid.size()},
               {"pareto_points", front.size()},
               {"pareto_front", front},
               {"mip", cage::mean_inner_product(pairs)}};
  summary["hypervolume"] = a.ref.empty() ? Json(nullptr) : Json(cage::hypervolume(front, a.ref));
  if (!a.summary.empty()) write_json(a.summary, summary);
  cage::log::info("sweep: ", grid.size(), " points, ", front.size(), " non-dominated");
  return kOk;
}

// ---------------------------------------------------------------- decode

struct DecodeArgs {
  DecodeFlags decode;
  std::string weights;
  bool policies = false;
  std::string out;
};

int run_decode(const DecodeArgs& a) {
  const cage::DecodeOptions opts = a.decode.options();
  const std::vector<double> w = parse_list(a.weights, "--weights");
  const cage::PreferenceWeights weights(to_vector(w));
  const auto records = load_stream(a.decode, static_cast<int>(w.size()));
  const cage::DecodeOutcome o = cage::decode_stream(records, weights, opts);

  Json echo = decode_echo(opts, a.decode);
  echo["weights"] = w;
  Json out{{"metadata", metadata("decode", echo)},
           {"tokens", o.tokens},
           {"steps", o.steps},
           {"rounds", o.rounds},
           {"converged", o.converged},
           {"converged_fraction", o.converged_fraction()},
           {"reward_kind", "proxy: cumulative implicit reward"},
           {"cumulative_reward", o.cumulative_reward}};
  if (a.policies) out["policies"] = cage::to_json(o.policies);
  write_json(a.out, out);
  return kOk;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
  std::string instance;
  std::string out;
  std::string trace;
  std::string regret_csv;
  SolveFlags flags;
  bool stability = true;
  double delta = 1e-3;
  int probes = 8;
  std::uint64_t seed = 0;
};

int run_diagnose(const DiagnoseArgs& a) {
  cage::JacobiOptions opts = a.flags.jacobi();
  opts.record_trace = true;
  opts.validate();
  const cage::GameInstance g = load_game(a.instance, a.flags.tau);
  Json echo = jacobi_echo(opts, g.tau());
  echo["instance"] = a.instance;
  echo["stability"] = a.stability;
  echo["delta"] = a.delta;
  echo["probes"] = a.probes;
  echo["seed"] = a.seed;
  const Json meta = metadata("diagnose", echo);

  const cage::EquilibriumResult r = cage::solve_equilibrium(g, std::nullopt, opts);
  const cage::RegretReport regret = cage::regret_trace(g, r);
  Json out{{"metadata", meta},
           {"result", cage::equilibrium_to_json(r)},
           {"stationarity", cage::stationarity_to_json(cage::check_stationarity(r, g))},
           {"lipschitz", cage::lipschitz_constant(g)},
           {"regret", cage::regret_to_json(regret)}};
  if (a.stability) {
    cage::StabilityOptions so;
    so.delta = a.delta;
    so.probes = a.probes;
    so.seed = a.seed;
    try {
      out["stability"] = cage::stability_to_json(cage::stability_probe(g, so));
    } catch (const cage::DomainError& e) {
      out["stability"] = Json{{"skipped", e.what()}};
    }
  }
  write_json(a.out, out);
  if (!a.trace.empty()) {
    Output t(a.trace);
    write_csv_header(t.stream(), meta);
    cage::write_trace_csv(t.stream(), r);
  }
  if (!a.regret_csv.empty()) {
    Output t(a.regret_csv);
    write_csv_header(t.stream(), meta);
    cage::write_regret_csv(t.stream(), regret);
  }
  return r.converged ? kOk : kNoConvergence;
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
  std::string instance;
  std::string out;
  SolveFlags flags;
  double grid_step = 0.02;
};

int run_oracle(const OracleArgs& a) {
  cage::JacobiOptions opts = a.flags.jacobi();
  opts.record_trace = false;
  opts.validate();
  const cage::GameInstance g = load_game(a.instance, a.flags.tau);
  Json echo = jacobi_echo(opts, g.tau());
  echo["instance"] = a.instance;
  echo["grid_step"] = a.grid_step;

  std::vector<std::string> names;
  std::vector<cage::Vector> policies;
  Json methods = Json::object();
  bool infeasible = false;

  const auto eq = cage::solve_equilibrium(g, std::nullopt, opts);
  names.push_back("jacobi");
  policies.push_back(eq.policy.probs());
  methods["jacobi"] = cage::equilibrium_to_json(eq);

  for (auto mode : {cage::PolicyObjectiveMode::kAggregateSurplus, cage::PolicyObjectiveMode::kUserRegularized}) {
    const std::string name = cage::to_string(mode);
    try {
      const auto r = cage::maximize_policy_objective(g, {.mode = mode});
      names.push_back(name);
      policies.push_back(r.policy.probs());
      methods[name] = Json{{"policy", cage::to_json(r.policy.probs())},
                           {"value", r.value},
                           {"shift", r.shift},
                           {"method", r.method}};
    } catch (const cage::InfeasibleError& e) {
      infeasible = true;
      methods[name] = Json{{"infeasible", e.what()}};
    }
  }

  try {
    const auto bf = cage::brute_force_equilibrium(g, {.grid_step = a.grid_step});
    names.push_back("brute_force");
    policies.push_back(bf.policy.probs());
    methods["brute_force"] = Json{{"policy", cage::to_json(bf.policy.probs())},
                                  {"aggregate", cage::to_json(bf.incentives.aggregate)},
                                  {"worst_deviation", bf.worst_deviation},
                                  {"certified", bf.certified},
                                  {"sweeps", bf.sweeps}};
  } catch (const cage::DomainError& e) {
    methods["brute_force"] = Json{{"refused", e.what()}};
  }

  Json gaps = Json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t k = i + 1; k < names.size(); ++k) {
      gaps.push_back({{"a", names[i]},
                      {"b", names[k]},
                      {"policy_gap_inf", (policies[i] - policies[k]).lpNorm<Eigen::Infinity>()}});
    }
  }
  write_json(a.out, Json{{"metadata", metadata("oracle", echo)}, {"methods", methods}, {"agreement", gaps}});
  if (infeasible) return kInfeasible;
  return eq.converged ? kOk : kNoConvergence;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  int steps = 100;
  int candidates = 50;
  int objectives = 2;
  double correlation = 0.0;
  double scale = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  const auto records = cage::synth_stream(a.steps, a.candidates, a.objectives, a.correlation, a.seed, a.scale);
  Output out(a.out);
  cage::write_stream(out.stream(), records);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Common-agency equilibria for multi-objective decoding", "cage"};
  app.set_version_flag("--version", std::string(cage::kVersion));
  app.set_config("--config", "", "TOML/INI file with defaults; command-line flags take precedence");
  bool schema = false;
  app.add_flag("--schema", schema, "Describe the CSV outputs and exit");
  app.require_subcommand(0, 1);

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one game instance");
  solve_cmd->add_option("instance", solve.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("-o,--out", solve.out, "Result JSON (default: stdout)");
  solve_cmd->add_option("--trace", solve.trace, "Per-round trace CSV");
  add_solve_flags(solve_cmd, solve.flags);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Decode once per preference vector and score the front");
  add_decode_flags(sweep_cmd, sweep.decode);
  sweep_cmd->add_option("--grid", sweep.grid, "help2d, simplex31 or file:PATH")->capture_default_str();
  sweep_cmd->add_option("--ref", sweep.ref, "Hypervolume reference point")->delimiter(',');
  sweep_cmd->add_flag("--hv", sweep.hv, "Require a hypervolume (needs --ref)");
  sweep_cmd->add_option("--jobs", sweep.jobs, "Worker threads (0: all cores)")->capture_default_str();
  sweep_cmd->add_option("-o,--out", sweep.out, "Per-point CSV (default: stdout)");
  sweep_cmd->add_option("--summary", sweep.summary, "Front, HV and MIP summary JSON");

  DecodeArgs decode;
  auto* decode_cmd = app.add_subcommand("decode", "Decode a stream under one preference vector");
  add_decode_flags(decode_cmd, decode.decode);
  decode_cmd->add_option("--weights", decode.weights, "Comma-separated preference weights")->required();
  decode_cmd->add_flag("--policies", decode.policies, "Include per-step equilibrium policies");
  decode_cmd->add_option("-o,--out", decode.out, "Result JSON (default: stdout)");

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Stationarity, regret and stability of one instance");
  diag_cmd->add_option("instance", diag.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  diag_cmd->add_option("-o,--out", diag.out, "Report JSON (default: stdout)");
  diag_cmd->add_option("--trace", diag.trace, "Per-round trace CSV");
  diag_cmd->add_option("--regret-csv", diag.regret_csv, "Regret and bound per horizon");
  add_solve_flags(diag_cmd, diag.flags);
  diag_cmd->add_flag("!--no-stability", diag.stability, "Skip perturbation probes");
  diag_cmd->add_option("--delta", diag.delta, "Probe size")->capture_default_str();
  diag_cmd->add_option("--probes", diag.probes, "Probes per family")->capture_default_str();
  diag_cmd->add_option("--seed", diag.seed, "Probe seed")->capture_default_str();

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Compare Jacobi, potential maximizers and brute force");
  oracle_cmd->add_option("instance", oracle.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  oracle_cmd->add_option("-o,--out", oracle.out, "Report JSON (default: stdout)");
  oracle_cmd->add_option("--grid-step", oracle.grid_step, "Brute-force grid step")->capture_default_str();
  add_solve_flags(oracle_cmd, oracle.flags);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic JSONL logit stream");
  synth_cmd->add_option("--steps", synth.steps)->capture_default_str();
  synth_cmd->add_option("--candidates", synth.candidates)->capture_default_str();
  synth_cmd->add_option("--objectives", synth.objectives)->capture_default_str();
  synth_cmd->add_option("--correlation", synth.correlation, "Reward correlation in [-1, 1]")->capture_default_str();
  synth_cmd->add_option("--scale", synth.scale, "Reward score scale")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("-o,--out", synth.out, "Stream JSONL (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (schema) {
    std::cout << kSchema;
    return kOk;
  }
  try {
    if (*solve_cmd) return run_solve(solve);
    if (*sweep_cmd) return run_sweep(sweep);
    if (*decode_cmd) return run_decode(decode);
    if (*diag_cmd) return run_diagnose(diag);
    if (*oracle_cmd) return run_oracle(oracle);
    if (*synth_cmd) return run_synth(synth);
    std::cerr << app.help();
    return kUsage;
  } catch (const UsageError& e) {
    cage::log::error(e.what());
    return kUsage;
  } catch (const cage::FormatError& e) {
    cage::log::error(e.what());
    return kParse;
  } catch (const cage::InfeasibleError& e) {
    cage::log::error(e.what());
    return kInfeasible;
  } catch (const std::logic_error& e) {  // DomainError, ConstraintError from option values
    cage::log::error(e.what());
    return kUsage;
  } catch (const std::exception& e) {
    cage::log::error(e.what());
    return 1;
  }
}
