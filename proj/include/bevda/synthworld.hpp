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

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bevda/geometry.hpp"
#include "bevda/labels.hpp"
#include "bevda/nn/tensor.hpp"

namespace bevda::synth {

using nn::Tensor;

enum class Domain { kSource, kTarget };
std::string domain_name(Domain d);

/// Image-space appearance of a domain. Styles never touch labels or depth.
struct DomainStyle {
  double palette_rotation_deg = 0.0;  // rotation of class colors about the gray axis
  double illumination = 1.0;          // global gain
  double noise_sigma = 0.0;           // additive per-pixel Gaussian noise

  static DomainStyle source();
  static DomainStyle target();
  static DomainStyle for_domain(Domain d) { return d == Domain::kSource ? source() : target(); }
};

enum class Augment { kNone, kWeak, kStrong };

/// Ring of cameras around the ego origin.
struct RigSpec {
  int views = 6;
  double height = 1.5;
  double pitch_deg = 10.0;
  double hfov_deg = 90.0;
  double yaw_offset_deg = 0.0;
  int image_height = 64;
  int image_width = 112;
  double principal_row = 0.5;  // cy as a fraction of the image height
  Eigen::Matrix3d preproc = Eigen::Matrix3d::Identity();
};

std::vector<geometry::CameraView> make_rig(const RigSpec& spec);

struct LayoutSpec {
  double road_width_min = 8.0;
  double road_width_max = 14.0;
  double cross_road_width_min = 8.0;
  double cross_road_width_max = 12.0;
  double boundary_width = 1.0;
  double divider_width = 0.6;
  double crossing_depth = 3.0;
  double vehicle_length = 4.0;
  double vehicle_width = 2.0;
  double vehicle_height = 1.2;
};

struct VehicleBox {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  double height = 1.2;

  bool contains_xy(double x, double y) const { return x >= x_min && x < x_max && y >= y_min && y < y_max; }
};

struct SceneSpec {
  uint64_t seed = 0;
  geometry::BevGrid grid;
  LayoutSpec layout;
  int divider_count = -1;   // -1: random in [0, 3]
  int crossing_count = -1;  // -1: random in [0, 2]
  int vehicle_count = -1;   // -1: random in [2, 8]
  int cross_road = -1;      // -1: random, 0: none, 1: present
  std::vector<geometry::CameraView> rig;
  Domain domain = Domain::kSource;

  void validate() const;
};

/// Planar world: a main road along ego x, an optional cross road along ego y,
/// painted markings and axis-aligned vehicle boxes.
struct Scene {
  SceneSpec spec;
  double main_center_y = 0.0;
  double main_width = 10.0;
  bool has_cross = false;
  double cross_center_x = 0.0;
  double cross_width = 10.0;
  std::vector<double> divider_y;
  std::vector<double> crossing_x;
  std::vector<VehicleBox> vehicles;

  /// Class painted on the ground at (x, y), kBackground off-road.
  int8_t ground_class(double x, double y) const;
  /// Class of the top-down surface at (x, y): a vehicle footprint wins over paint.
  int8_t surface_class(double x, double y) const;
  bool operator==(const Scene& other) const;
};

Scene gen_scene(const SceneSpec& spec);

struct RenderedView {
  Tensor image;  // [3,H,W] in [0,1]
  LabelMap labels;
  Tensor depth;  // [H,W] camera z-depth in meters, 0 where the ray hits nothing
  std::vector<uint8_t> vehicle_mask;
};

/// Casts one ray per final-image pixel center; the nearest hit among the
/// ground plane and vehicle boxes defines depth and class.
RenderedView render_view(const Scene& scene, const geometry::CameraView& view, const DomainStyle& style,
                         Augment aug, uint64_t seed, int image_height, int image_width);

/// Image-only augmentation of a [.,3,H,W] or [3,H,W] tensor, clamped to [0,1].
Tensor augment_image(const Tensor& image, Augment aug, uint64_t seed);

/// Exact BEV rasterization at cell centers: [K,rows,cols], one class per cell.
Tensor bev_ground_truth(const Scene& scene, const geometry::BevGrid& grid);

/// Cells whose area, grown by `margin` on every side, spans more than one
/// surface class.
std::vector<uint8_t> boundary_cells(const Scene& scene, const geometry::BevGrid& grid, double margin = 0.0);

/// Degrades labels: boundary pixels copy a neighbour's class (erosion/dilation),
/// then random pixels are flipped to another class, changing exactly
/// round(noise * size) pixels in total.
LabelMap corrupt_pseudo_labels(const LabelMap& labels, double noise, uint64_t seed);

/// Renders every rig view of a scene with one style.
struct SceneRender {
  Tensor images;  // [N,3,H,W]
  std::vector<LabelMap> labels;
  Tensor depth;  // [N,H,W]
  std::vector<std::vector<uint8_t>> vehicle_masks;
};

SceneRender render_scene(const Scene& scene, const DomainStyle& style, Augment aug, uint64_t seed, int image_height,
                         int image_width);

}  // namespace bevda::synth
