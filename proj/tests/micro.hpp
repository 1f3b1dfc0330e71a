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

#include "bevda/harness.hpp"

namespace bevda::testing {

/// Tiny end-to-end configuration: 2 views of 16x28 pixels, D=6, 8x8 grid.
inline harness::RunConfig micro_config() {
  harness::RunConfig c;
  c.data_seed = 3;
  c.seed = 2;
  c.seeds = {2};
  c.grid = geometry::BevGrid{-8.0, 8.0, -8.0, 8.0, 2.0};
  c.bins = geometry::DepthBins{1.0, 13.0, 6};
  c.dims = nn::ModelDims{3, 4, 5, 6, 4, 6, 5, 4};
  for (auto* r : {&c.source_rig, &c.target_rig}) {
    r->views = 2;
    r->image_height = 16;
    r->image_width = 28;
    r->yaw_offset_deg = 0.0;
  }
  c.target_rig.height = 1.6;
  c.target_rig.pitch_deg = 12.0;
  c.source_scenes = 2;
  c.target_scenes = 2;
  c.eval_scenes = 1;
  c.total_steps = 4;
  c.layout.vehicle_length = 3.0;
  return c;
}

}  // namespace bevda::testing
