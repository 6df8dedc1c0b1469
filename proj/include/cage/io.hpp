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

// JSON / JSONL / CSV serialization for instances, results, reports and logit
// streams.

#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cage/decode.hpp"
#include "cage/diagnostics.hpp"
#include "cage/errors.hpp"
#include "cage/game.hpp"
#include "cage/jacobi.hpp"

namespace cage {

using Json = nlohmann::json;

/// Malformed JSON, with the 1-based position of the failure.
class ParseError : public FormatError {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column,
             const std::string& what)
      : FormatError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " +
                    what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json to_json(const std::vector<Vector>& vs) {
  Json a = Json::array();
  for (const auto& v : vs) a.push_back(to_json(v));
  return a;
}

inline Vector vector_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) throw FormatError("field '" + field + "' must be an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError("field '" + field + "' must contain only numbers");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline const Json& require_field(const Json& j, const std::string& field) {
  if (!j.is_object() || !j.contains(field)) throw FormatError("missing field '" + field + "'");
  return j.at(field);
}

/// Parses `text` as JSON, reporting failures with line and column.
inline Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(source, line, column, e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// {"tau": real, "pi0": [..], "weights": [..], "rewards": [[..], ..]}
inline GameInstance game_from_json(const Json& j) {
  const Json& tau_field = require_field(j, "tau");
  if (!tau_field.is_number()) throw FormatError("field 'tau' must be a number");
  const double tau = tau_field.get<double>();
  Vector pi0 = vector_from_json(require_field(j, "pi0"), "pi0");
  Vector weights = vector_from_json(require_field(j, "weights"), "weights");
  const Json& rj = require_field(j, "rewards");
  if (!rj.is_array()) throw FormatError("field 'rewards' must be an array of arrays");
  std::vector<Vector> rewards;
  for (std::size_t k = 0; k < rj.size(); ++k) {
    rewards.push_back(vector_from_json(rj[k], "rewards[" + std::to_string(k) + "]"));
  }
  return GameInstance(PolicySimplex(std::move(pi0)), std::move(rewards),
                      PreferenceWeights(std::move(weights)), tau);
}

inline Json game_to_json(const GameInstance& g) {
  return Json{{"tau", g.tau()},
              {"pi0", to_json(g.base_policy().probs())},
              {"weights", to_json(g.weights().values())},
              {"rewards", to_json(g.rewards())}};
}

inline GameInstance read_game_file(const std::string& path) {
  return game_from_json(parse_json(read_text_file(path), path));
}

inline Json equilibrium_to_json(const EquilibriumResult& r, bool include_trace = false) {
  Json out{{"status", r.converged ? "converged" : "no_equilibrium_found"},
           {"converged", r.converged},
           {"rounds", r.rounds},
           {"incentives", to_json(r.incentives.per_principal)},
           {"aggregate", to_json(r.incentives.aggregate)},
           {"policy", to_json(r.policy.probs())},
           {"subproblem_failures", r.subproblem_failures},
           {"min_ir_slack", r.min_ir_slack}};
  if (include_trace) {
    Json trace = Json::array();
    for (const auto& rec : r.trace) {
      trace.push_back({{"round", rec.round},
                       {"incentives", to_json(rec.incentives)},
                       {"policy", to_json(rec.policy)},
                       {"max_step", rec.max_step},
                       {"policy_change", rec.policy_change}});
    }
    out["trace"] = std::move(trace);
  }
  return out;
}

inline Json stationarity_to_json(const StationarityReport& s) {
  return Json{{"tol", s.tol},
              {"all_pass", s.all_pass},
              {"projected_gradient_norms", s.projected_gradient_norms},
              {"pass", s.pass}};
}

inline void set_csv_precision(std::ostream& out) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
}

/// round, step_norm_<j>..., max_step, policy_change
inline void write_trace_csv(std::ostream& out, const EquilibriumResult& r) {
  set_csv_precision(out);
  out << "round";
  const std::size_t J = r.incentives.per_principal.size();
  for (std::size_t j = 0; j < J; ++j) out << ",step_norm_" << j;
  out << ",max_step,policy_change\n";
  for (std::size_t t = 0; t < r.trace.size(); ++t) {
    const auto& rec = r.trace[t];
    out << rec.round;
    for (std::size_t j = 0; j < J; ++j) {
      const double norm =
          t == 0 ? 0.0 : (rec.incentives[j] - r.trace[t - 1].incentives[j]).lpNorm<Eigen::Infinity>();
      out << ',' << norm;
    }
    out << ',' << rec.max_step << ',' << rec.policy_change << '\n';
  }
}

inline Json regret_to_json(const RegretReport& r) {
  return Json{{"rounds", r.rounds},
              {"lipschitz", r.lipschitz},
              {"slack", r.slack},
              {"deviation", r.deviation},
              {"bound", r.bound},
              {"cumulative_regret", r.cumulative_regret},
              {"instantaneous_regret", r.instantaneous},
              {"comparators", to_json(r.comparators)},
              {"bound_satisfied", r.bound_satisfied},
              {"notes", r.notes}};
}

/// T, bound, regret_<j>...
inline void write_regret_csv(std::ostream& out, const RegretReport& r) {
  set_csv_precision(out);
  out << "T,deviation,bound";
  for (std::size_t j = 0; j < r.cumulative_regret.size(); ++j) out << ",regret_" << j;
  out << '\n';
  for (int t = 1; t <= r.rounds; ++t) {
    const auto k = static_cast<std::size_t>(t - 1);
    out << t << ',' << r.deviation[static_cast<std::size_t>(t)] << ',' << r.bound[k];
    for (const auto& series : r.cumulative_regret) out << ',' << series[k];
    out << '\n';
  }
}

inline Json stability_to_json(const StabilityReport& s) {
  Json families = Json::array();
  for (const auto& f : s.families) {
    // Infinity has no JSON literal; a silent-and-responsive mix is reported as null.
    Json spread = std::isfinite(f.spread) ? Json(f.spread) : Json(nullptr);
    families.push_back(
        {{"name", f.name}, {"ratios", f.ratios}, {"spread", spread}, {"responsive", f.responsive}});
  }
  Json threshold = std::isfinite(s.tau_threshold) ? Json(s.tau_threshold) : Json("inf");
  return Json{{"tau", s.tau},
              {"tau_threshold", threshold},
              {"pi_lower", s.pi_lower},
              {"radius", s.radius},
              {"above_threshold", s.above_threshold},
              {"pattern_stable", s.pattern_stable},
              {"invalid_probes", s.invalid_probes},
              {"ratios_bounded", s.ratios_bounded},
              {"families", families},
              {"notes", s.notes}};
}

/// {"step":int,"ids":[int],"base":[real],"objectives":[[real],...]}
inline LogitRecord record_from_json(const Json& j) {
  LogitRecord rec;
  const Json& step = require_field(j, "step");
  if (!step.is_number_integer()) throw FormatError("field 'step' must be an integer");
  rec.step = step.get<std::int64_t>();
  const Json& ids = require_field(j, "ids");
  if (!ids.is_array()) throw FormatError("field 'ids' must be an array of integers");
  for (const auto& id : ids) {
    if (!id.is_number_integer()) throw FormatError("field 'ids' must contain only integers");
    rec.ids.push_back(id.get<std::int64_t>());
  }
  rec.base = vector_from_json(require_field(j, "base"), "base");
  const Json& objs = require_field(j, "objectives");
  if (!objs.is_array()) throw FormatError("field 'objectives' must be an array of arrays");
  for (std::size_t k = 0; k < objs.size(); ++k) {
    rec.objectives.push_back(vector_from_json(objs[k], "objectives[" + std::to_string(k) + "]"));
  }
  rec.validate();
  return rec;
}

inline Json record_to_json(const LogitRecord& rec) {
  return Json{{"step", rec.step},
              {"ids", rec.ids},
              {"base", to_json(rec.base)},
              {"objectives", to_json(rec.objectives)}};
}

/// Reads a JSONL stream. Errors name the line and, once known, the step.
inline std::vector<LogitRecord> read_stream(std::istream& in, const std::string& source) {
  std::vector<LogitRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(source, line_no, e.byte, e.what());
    }
    try {
      records.push_back(record_from_json(j));
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    } catch (const Json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (records.size() > 1 && records.back().step <= records[records.size() - 2].step) {
      throw FormatError(where + ": step " + std::to_string(records.back().step) +
                        " is not after step " + std::to_string(records[records.size() - 2].step));
    }
  }
  return records;
}

inline std::vector<LogitRecord> read_stream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_stream(in, path);
}

inline void write_stream(std::ostream& out, const std::vector<LogitRecord>& records) {
  for (const auto& rec : records) out << record_to_json(rec).dump() << '\n';
}

}  // namespace cage
