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

#include <stdexcept>
#include <string>

namespace cage {

// Input outside a function's mathematical domain (non-finite values, zero
// probabilities where a log-ratio is needed, out-of-range parameters).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A box or feasibility constraint on incentives is violated.
class ConstraintError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input file or record.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A requested policy cannot be implemented under the incentive box.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cage
