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

// Minimal stderr logging. Verbosity comes from the CAGE_LOG environment
// variable: one of error, warn (default), info, debug.

#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string_view>

namespace cage::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

inline Level level_from_env() {
  const char* raw = std::getenv("CAGE_LOG");
  if (raw == nullptr) return Level::kWarn;
  const std::string_view v(raw);
  if (v == "error") return Level::kError;
  if (v == "info") return Level::kInfo;
  if (v == "debug") return Level::kDebug;
  return Level::kWarn;
}

inline Level threshold() {
  static const Level level = level_from_env();
  return level;
}

template <class... Args>
void emit(Level level, std::string_view tag, const Args&... args) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  std::ostringstream out;
  out << "[cage " << tag << "] ";
  (out << ... << args);
  out << '\n';
  std::cerr << out.str();
}

template <class... Args>
void error(const Args&... args) { emit(Level::kError, "error", args...); }
template <class... Args>
void warn(const Args&... args) { emit(Level::kWarn, "warn", args...); }
template <class... Args>
void info(const Args&... args) { emit(Level::kInfo, "info", args...); }
template <class... Args>
void debug(const Args&... args) { emit(Level::kDebug, "debug", args...); }

}  // namespace cage::log
