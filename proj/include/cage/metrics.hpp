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

// Multi-objective evaluation kernels: Pareto filtering, exact hypervolume in
// two and three dimensions, and the mean inner product between preference and
// achieved reward vectors. Higher rewards are better throughout.

#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "cage/errors.hpp"

namespace cage {

using Point = std::vector<double>;

struct ParetoPoint {
  Point preference;
  Point reward;
};

/// Componentwise a >= b with at least one strict inequality.
inline bool dominates(const Point& a, const Point& b) {
  bool strict = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) return false;
    if (a[k] > b[k]) strict = true;
  }
  return strict;
}

/// Non-dominated subset, duplicates kept once, in first-seen order.
inline std::vector<Point> pareto_filter(const std::vector<Point>& points) {
  std::vector<Point> front;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool keep = true;
    for (std::size_t k = 0; k < points.size() && keep; ++k) {
      if (k != i && dominates(points[k], points[i])) keep = false;
    }
    if (keep && std::find(front.begin(), front.end(), points[i]) == front.end()) {
      front.push_back(points[i]);
    }
  }
  return front;
}

namespace detail {

// Area dominated by 2-D points that all weakly dominate z.
inline double hypervolume_2d(std::vector<Point> pts, double z0, double z1) {
  std::sort(pts.begin(), pts.end(),
            [](const Point& a, const Point& b) { return a[0] > b[0] || (a[0] == b[0] && a[1] > b[1]); });
  double area = 0.0;
  double covered = z1;
  for (const auto& p : pts) {
    if (p[1] > covered) {
      area += (p[0] - z0) * (p[1] - covered);
      covered = p[1];
    }
  }
  return area;
}

}  // namespace detail

/// Lebesgue measure of the region dominated by `points` and dominating `ref`.
/// Points that fail to weakly dominate `ref` are discarded.
inline double hypervolume(const std::vector<Point>& points, const Point& ref) {
  const std::size_t d = ref.size();
  if (d < 2 || d > 3) {
    throw DomainError("hypervolume supports 2 or 3 objectives, got " + std::to_string(d));
  }
  std::vector<Point> pts;
  for (const auto& p : points) {
    if (p.size() != d) throw DomainError("point dimension does not match the reference point");
    bool inside = true;
    for (std::size_t k = 0; k < d; ++k) inside = inside && p[k] >= ref[k];
    if (inside) pts.push_back(p);
  }
  if (pts.empty()) return 0.0;
  if (d == 2) return detail::hypervolume_2d(std::move(pts), ref[0], ref[1]);

  // Sweep the third coordinate from the top; each slab contributes the 2-D
  // hypervolume of every point reaching above it.
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a[2] > b[2]; });
  double volume = 0.0;
  std::vector<Point> active;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    active.push_back({pts[k][0], pts[k][1]});
    const double next = k + 1 < pts.size() ? pts[k + 1][2] : ref[2];
    const double height = pts[k][2] - next;
    if (height > 0.0) volume += height * detail::hypervolume_2d(active, ref[0], ref[1]);
  }
  return volume;
}

/// (1/n) sum_i w_i . r_i.
inline double mean_inner_product(const std::vector<ParetoPoint>& points) {
  if (points.empty()) throw DomainError("mean inner product of an empty set");
  double total = 0.0;
  for (const auto& p : points) {
    if (p.preference.size() != p.reward.size()) {
      throw DomainError("preference and reward dimensions differ");
    }
    for (std::size_t k = 0; k < p.reward.size(); ++k) total += p.preference[k] * p.reward[k];
  }
  return total / static_cast<double>(points.size());
}

}  // namespace cage
