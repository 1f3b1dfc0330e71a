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

#include <cstdint>
#include <vector>

#include "bevda/errors.hpp"

namespace bevda {

/// Semantic classes shared by perspective labels and BEV channels.
enum class SemanticClass : int8_t {
  kDrivable = 0,
  kBoundary = 1,
  kDivider = 2,
  kCrossing = 3,
  kVehicle = 4,
};

inline constexpr int kNumClasses = 5;
inline constexpr int8_t kBackground = -1;

inline const char* class_name(int k) {
  static constexpr const char* kNames[kNumClasses] = {"drivable", "boundary", "divider", "crossing", "vehicle"};
  return (k >= 0 && k < kNumClasses) ? kNames[k] : "background";
}

/// Per-pixel class ids in row-major order; kBackground marks unlabeled pixels.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int8_t> data;

  LabelMap() = default;
  LabelMap(int h, int w, int8_t fill = kBackground)
      : height(h), width(w), data(static_cast<size_t>(h) * static_cast<size_t>(w), fill) {}

  int8_t at(int row, int col) const { return data[static_cast<size_t>(row) * width + col]; }
  int8_t& at(int row, int col) { return data[static_cast<size_t>(row) * width + col]; }
  size_t size() const { return data.size(); }
  bool operator==(const LabelMap&) const = default;
};

}  // namespace bevda
