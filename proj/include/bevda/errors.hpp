// Copyright 2026 The bevda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace bevda {

/// Invalid configuration value or unreadable config/rig file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate camera geometry (singular preprocessing transform, bad intrinsics).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (shape mismatch, label out of range).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Operation invoked on an object in the wrong lifecycle state.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value detected during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unsupported serialized file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace bevda
