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

#include <span>
#include <string>
#include <vector>

#include "bevda/geometry.hpp"
#include "bevda/metrics.hpp"

namespace bevda::metrics {

/// Map classes scored as vector elements.
inline constexpr int kVectorClasses[] = {1, 2, 3};  // boundary, divider, crossing

/// Turns BEV class scores [K,rows,cols] (or [1,K,rows,cols]) into polylines:
/// each 4-connected component of cells above `threshold` with at least
/// `min_cells` cells becomes one polyline along the component's principal
/// axis, with vertices at the per-bin centroid every grid resolution. The
/// score is the component's mean class score.
std::vector<Polyline> vectorize_bev(const nn::Tensor& scores, const geometry::BevGrid& grid,
                                    std::span<const int> classes, double threshold = 0.5, int min_cells = 3);

std::string format_polylines(std::span<const Polyline> lines);
void write_polylines(const std::string& path, std::span<const Polyline> lines);

}  // namespace bevda::metrics
