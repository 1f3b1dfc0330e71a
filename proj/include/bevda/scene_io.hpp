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

#include <string>
#include <vector>

#include "bevda/harness.hpp"

namespace bevda::io {

/// On-disk scene: config.cfg (run config), rig.cfg, images.tnsr (f64
/// [N,3,H,W]), depth.tnsr (f64 [N,H,W]), labels.tnsr (u8 [N,H,W], class+1,
/// 0 = background), bev_gt.tnsr (u8 [K,rows,cols]) and hd_gt.txt polylines.
struct StoredScene {
  harness::RunConfig config;
  std::vector<geometry::CameraView> rig;
  nn::Tensor images;
  nn::Tensor depth;
  std::vector<LabelMap> labels;
  nn::Tensor bev_gt;  // [1,K,rows,cols]
};

void write_scene_dir(const std::string& dir, const harness::RunConfig& cfg, const harness::SceneData& scene,
                     const std::vector<geometry::CameraView>& rig);
StoredScene read_scene_dir(const std::string& dir);

/// Scene directories below `root` (sorted), or `root` itself when it holds a scene.
std::vector<std::string> list_scene_dirs(const std::string& root);

}  // namespace bevda::io
