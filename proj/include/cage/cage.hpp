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

#pragma once

#include "cage/box_ascent.hpp"
#include "cage/decode.hpp"
#include "cage/diagnostics.hpp"
#include "cage/errors.hpp"
#include "cage/game.hpp"
#include "cage/grids.hpp"
#include "cage/io.hpp"
#include "cage/jacobi.hpp"
#include "cage/metrics.hpp"
#include "cage/potential.hpp"
#include "cage/principal_solver.hpp"

namespace cage {
inline constexpr const char* kVersion = "0.1.0";
}  // namespace cage
