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

#include "bevda/scene_io.hpp"

#include <algorithm>
#include <filesystem>

#include "bevda/errors.hpp"
#include "bevda/tnsr.hpp"
#include "bevda/vectorize.hpp"

namespace bevda::io {

namespace fs = std::filesystem;

void write_scene_dir(const std::string& dir, const harness::RunConfig& cfg, const harness::SceneData& scene,
                     const std::vector<geometry::CameraView>& rig) {
  fs::create_directories(dir);
  harness::write_text(dir + "/config.cfg", cfg.to_config().to_text());
  harness::write_text(dir + "/rig.cfg", harness::rig_to_text(rig));
  write_tensor(dir + "/images.tnsr", scene.images);
  write_tensor(dir + "/depth.tnsr", scene.depth);

  const auto n = static_cast<uint64_t>(scene.labels.size());
  const auto h = static_cast<uint64_t>(scene.labels[0].height), w = static_cast<uint64_t>(scene.labels[0].width);
  std::vector<uint8_t> labels;
  for (const auto& l : scene.labels)
    for (int8_t k : l.data) labels.push_back(static_cast<uint8_t>(k + 1));
  write_tnsr(dir + "/labels.tnsr", TnsrArray::from_u8({n, h, w}, labels));

  const auto& g = scene.bev_gt;
  std::vector<uint8_t> gt;
  for (double v : g.values()) gt.push_back(v > 0.5 ? 1 : 0);
  write_tnsr(dir + "/bev_gt.tnsr", TnsrArray::from_u8({static_cast<uint64_t>(kNumClasses),
                                                        static_cast<uint64_t>(cfg.grid.rows()),
                                                        static_cast<uint64_t>(cfg.grid.cols())},
                                                       gt));
  metrics::write_polylines(dir + "/hd_gt.txt", metrics::vectorize_bev(g, cfg.grid, metrics::kVectorClasses));
}

StoredScene read_scene_dir(const std::string& dir) {
  if (!fs::exists(dir + "/images.tnsr")) throw FormatError("not a scene directory: " + dir);
  StoredScene s;
  s.config = harness::RunConfig::load(dir + "/config.cfg");
  s.rig = harness::load_rig(dir + "/rig.cfg");
  s.images = read_tensor(dir + "/images.tnsr");
  s.depth = read_tensor(dir + "/depth.tnsr");
  const auto labels = read_tnsr(dir + "/labels.tnsr");
  if (labels.dtype != Dtype::kU8 || labels.dims.size() != 3) throw FormatError("labels.tnsr must be u8 [N,H,W]");
  const auto plane = static_cast<size_t>(labels.dims[1] * labels.dims[2]);
  for (uint64_t v = 0; v < labels.dims[0]; ++v) {
    LabelMap m(static_cast<int>(labels.dims[1]), static_cast<int>(labels.dims[2]));
    for (size_t p = 0; p < plane; ++p) m.data[p] = static_cast<int8_t>(labels.payload[v * plane + p] - 1);
    s.labels.push_back(std::move(m));
  }
  const nn::Tensor gt = read_tensor(dir + "/bev_gt.tnsr");
  if (gt.rank() != 3) throw FormatError("bev_gt.tnsr must be [K,rows,cols]");
  s.bev_gt = gt.reshaped({1, gt.dim(0), gt.dim(1), gt.dim(2)});
  if (static_cast<int>(s.rig.size()) != s.images.dim(0)) throw FormatError("rig and images disagree on view count");
  return s;
}

std::vector<std::string> list_scene_dirs(const std::string& root) {
  if (!fs::is_directory(root)) throw ConfigError("scene directory not found: " + root);
  if (fs::exists(fs::path(root) / "images.tnsr")) return {root};
  std::vector<std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "images.tnsr")
      out.push_back(entry.path().parent_path().string());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ConfigError("no scenes below " + root);
  return out;
}

}  // namespace bevda::io
