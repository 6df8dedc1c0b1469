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

// Built-in preference grids for sweeps.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cage/errors.hpp"

namespace cage {

using PreferenceGrid = std::vector<std::vector<double>>;

/// Two objectives, first weight in {0.1, 0.2, ..., 0.8}.
inline PreferenceGrid helpfulness_grid_2d() {
  PreferenceGrid grid;
  for (int k = 1; k <= 8; ++k) {
    const double a = k / 10.0;
    grid.push_back({a, 1.0 - a});
  }
  return grid;
}

/// 31 three-objective vectors: 3 corners, 5 interior points on each of the
/// three edges, and 13 interior mixes concentrated near the centroid.
inline PreferenceGrid simplex_grid_31() {
  PreferenceGrid grid = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const double edge[] = {0.9, 0.7, 0.5, 0.3, 0.1};
  for (double a : edge) grid.push_back({a, 1.0 - a, 0.0});
  for (double a : edge) grid.push_back({a, 0.0, 1.0 - a});
  for (double a : edge) grid.push_back({0.0, a, 1.0 - a});
  const PreferenceGrid interior = {
      {0.8, 0.1, 0.1},   {0.5, 0.3, 0.2}, {0.4, 0.2, 0.4},  {0.33, 0.33, 0.34}, {0.3, 0.3, 0.4},
      {0.3, 0.2, 0.5},   {0.25, 0.25, 0.5}, {0.2, 0.5, 0.3}, {0.2, 0.4, 0.4},   {0.2, 0.3, 0.5},
      {0.2, 0.2, 0.6},   {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}};
  grid.insert(grid.end(), interior.begin(), interior.end());
  return grid;
}

/// One preference vector per line, comma separated. Blank lines and lines
/// starting with '#' are skipped.
inline PreferenceGrid read_preference_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open preference grid " + path);
  PreferenceGrid grid;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw FormatError("trailing");
      } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
    }
    if (!grid.empty() && row.size() != grid.front().size()) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": inconsistent dimension");
    }
    grid.push_back(std::move(row));
  }
  if (grid.empty()) throw FormatError("preference grid " + path + " is empty");
  return grid;
}

}  // namespace cage
