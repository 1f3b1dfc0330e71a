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
#include <optional>
#include <span>
#include <vector>

#include "bevda/geometry.hpp"
#include "bevda/labels.hpp"
#include "bevda/nn/tensor.hpp"

namespace bevda::mixing {

using nn::Tensor;

/// Binary source-vehicle masks, one per view, at final-image resolution.
struct InstanceMaskSet {
  int height = 0;
  int width = 0;
  std::vector<std::vector<uint8_t>> masks;
  std::vector<int64_t> counts;

  static InstanceMaskSet from_masks(int height, int width, std::vector<std::vector<uint8_t>> masks);
  /// Pixels whose label equals `cls`.
  static InstanceMaskSet from_labels(std::span<const LabelMap> labels, int8_t cls);
  int views() const { return static_cast<int>(masks.size()); }
  void validate() const;
};

struct MixPlan {
  std::vector<int> mix_views;
  std::optional<int> isolated_view;

  bool empty() const { return mix_views.empty() && !isolated_view; }
  bool mixes(int view) const;
};

/// The view with the most instance pixels is isolated (lowest index on ties);
/// every other view holding instances receives them.
MixPlan plan_mixing(const InstanceMaskSet& masks);

/// On mix views: mask*source + (1-mask)*target per pixel; elsewhere target.
/// Images are [N,C,H,W].
Tensor mix_images(const MixPlan& plan, const InstanceMaskSet& masks, const Tensor& source, const Tensor& target);

/// Per-pixel camera parameters: masked pixels of mix views carry the source
/// view, everything else the target view.
std::vector<geometry::PixelCameraField> mix_projection_params(const MixPlan& plan, const InstanceMaskSet& masks,
                                                              std::span<const geometry::CameraView> source,
                                                              std::span<const geometry::CameraView> target);

/// Map channels come from `target_pseudo` unchanged. The vehicle channel is
/// max(target, source GT) on cells inside the union of mix-view footprints,
/// target elsewhere. Labels are [K,rows,cols] (an optional leading 1 is allowed).
Tensor mix_bev_labels(const MixPlan& plan, const Tensor& source_gt, const Tensor& target_pseudo,
                      std::span<const std::vector<uint8_t>> footprints, int vehicle_channel);

}  // namespace bevda::mixing
