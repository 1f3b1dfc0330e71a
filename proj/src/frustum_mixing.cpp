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

#include "bevda/frustum_mixing.hpp"

#include <algorithm>
#include <numeric>

#include "bevda/errors.hpp"

namespace bevda::mixing {

InstanceMaskSet InstanceMaskSet::from_masks(int height, int width, std::vector<std::vector<uint8_t>> masks) {
  InstanceMaskSet set;
  set.height = height;
  set.width = width;
  set.masks = std::move(masks);
  for (auto& m : set.masks) {
    for (auto& v : m) v = v ? 1 : 0;
    set.counts.push_back(std::accumulate(m.begin(), m.end(), int64_t{0}));
  }
  set.validate();
  return set;
}

InstanceMaskSet InstanceMaskSet::from_labels(std::span<const LabelMap> labels, int8_t cls) {
  require(!labels.empty(), "instance masks: no views");
  std::vector<std::vector<uint8_t>> masks;
  for (const auto& l : labels) {
    require(l.height == labels[0].height && l.width == labels[0].width, "instance masks: view dims differ");
    std::vector<uint8_t> m(l.data.size());
    std::transform(l.data.begin(), l.data.end(), m.begin(), [cls](int8_t v) { return v == cls ? 1 : 0; });
    masks.push_back(std::move(m));
  }
  return from_masks(labels[0].height, labels[0].width, std::move(masks));
}

void InstanceMaskSet::validate() const {
  require(masks.size() == counts.size(), "instance masks: count per view required");
  const auto n = static_cast<size_t>(height) * static_cast<size_t>(width);
  for (size_t v = 0; v < masks.size(); ++v) {
    require(masks[v].size() == n, "instance masks: mask does not match image dims");
    require(counts[v] == std::accumulate(masks[v].begin(), masks[v].end(), int64_t{0}),
            "instance masks: stale occupied-pixel count");
  }
}

bool MixPlan::mixes(int view) const { return std::find(mix_views.begin(), mix_views.end(), view) != mix_views.end(); }

MixPlan plan_mixing(const InstanceMaskSet& masks) {
  MixPlan plan;
  int best = -1;
  for (int v = 0; v < masks.views(); ++v) {
    const int64_t c = masks.counts[static_cast<size_t>(v)];
    if (c > 0 && (best < 0 || c > masks.counts[static_cast<size_t>(best)])) best = v;
  }
  if (best < 0) return plan;
  plan.isolated_view = best;
  for (int v = 0; v < masks.views(); ++v)
    if (v != best && masks.counts[static_cast<size_t>(v)] > 0) plan.mix_views.push_back(v);
  return plan;
}

Tensor mix_images(const MixPlan& plan, const InstanceMaskSet& masks, const Tensor& source, const Tensor& target) {
  require(source.same_shape(target), "mix_images: source and target dims differ");
  require(target.rank() == 4 && target.dim(0) == masks.views() && target.dim(2) == masks.height &&
              target.dim(3) == masks.width,
          "mix_images: images do not match instance masks");
  Tensor out = target;
  const int64_t channels = target.dim(1), plane = target.dim(2) * target.dim(3);
  for (int v : plan.mix_views) {
    const auto& m = masks.masks[static_cast<size_t>(v)];
    for (int64_t c = 0; c < channels; ++c) {
      const int64_t base = (v * channels + c) * plane;
      for (int64_t p = 0; p < plane; ++p)
        if (m[static_cast<size_t>(p)]) out[base + p] = source[base + p];
    }
  }
  return out;
}

std::vector<geometry::PixelCameraField> mix_projection_params(const MixPlan& plan, const InstanceMaskSet& masks,
                                                              std::span<const geometry::CameraView> source,
                                                              std::span<const geometry::CameraView> target) {
  require(static_cast<int>(source.size()) == masks.views() && static_cast<int>(target.size()) == masks.views(),
          "mix_projection_params: one camera per view required");
  std::vector<geometry::PixelCameraField> fields;
  for (int v = 0; v < masks.views(); ++v) {
    auto field = geometry::PixelCameraField::uniform(masks.height, masks.width, target[static_cast<size_t>(v)]);
    if (plan.mixes(v)) {
      field.palette.push_back(source[static_cast<size_t>(v)]);
      const auto& m = masks.masks[static_cast<size_t>(v)];
      for (size_t p = 0; p < m.size(); ++p) field.index[p] = m[p] ? 1 : 0;
    }
    fields.push_back(std::move(field));
  }
  return fields;
}

Tensor mix_bev_labels(const MixPlan& plan, const Tensor& source_gt, const Tensor& target_pseudo,
                      std::span<const std::vector<uint8_t>> footprints, int vehicle_channel) {
  require(source_gt.same_shape(target_pseudo), "mix_bev_labels: label grids differ");
  require(target_pseudo.rank() >= 3, "mix_bev_labels: labels must be [K,rows,cols]");
  const int64_t k = target_pseudo.dim(-3), cells = target_pseudo.dim(-2) * target_pseudo.dim(-1);
  require(vehicle_channel >= 0 && vehicle_channel < k, "mix_bev_labels: vehicle channel out of range");

  std::vector<uint8_t> region(static_cast<size_t>(cells), 0);
  for (int v : plan.mix_views) {
    require(v >= 0 && v < static_cast<int>(footprints.size()), "mix_bev_labels: missing footprint for view");
    const auto& fp = footprints[static_cast<size_t>(v)];
    require(static_cast<int64_t>(fp.size()) == cells, "mix_bev_labels: footprint grid mismatch");
    for (int64_t i = 0; i < cells; ++i) region[static_cast<size_t>(i)] |= fp[static_cast<size_t>(i)];
  }

  Tensor out = target_pseudo;
  const int64_t base = vehicle_channel * cells;
  for (int64_t i = 0; i < cells; ++i)
    if (region[static_cast<size_t>(i)]) out[base + i] = std::max(out[base + i], source_gt[base + i]);
  return out;
}

}  // namespace bevda::mixing
