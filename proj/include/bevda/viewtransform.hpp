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
#include <vector>

#include "bevda/geometry.hpp"
#include "bevda/labels.hpp"
#include "bevda/nn/ops.hpp"

namespace bevda::vt {

using nn::Tensor;
using nn::Var;

/// Point-to-cell buckets in CSR form. Within each cell the point ids appear in
/// the order the points are accumulated.
struct SplatPlan {
  int64_t point_count = 0;
  int cell_count = 0;
  std::vector<int64_t> offsets;
  std::vector<int64_t> point_ids;

  /// Buckets in ascending point order. Negative cells are dropped.
  static SplatPlan build(std::span<const int32_t> cells, int cell_count);
  /// Buckets in ascending order of (view_rank[view], index within view).
  static SplatPlan build(std::span<const int32_t> cells, int cell_count, int64_t points_per_view,
                         std::span<const int> view_rank);
};

/// Cell assignment of every frustum point of a stack of views.
///
/// `cells` is laid out (view, depth, row, col) in the caller's view order. The
/// plan accumulates views in a canonical order (lexicographic on each view's
/// cell array), so pooled maps do not depend on how views were listed.
struct Projection {
  int views = 0;
  int depth = 0;
  int height = 0;
  int width = 0;
  geometry::BevGrid grid;
  std::vector<int32_t> cells;
  SplatPlan plan;

  int64_t points_per_view() const { return static_cast<int64_t>(depth) * height * width; }
};

Projection make_projection(const std::vector<geometry::CellAssignment>& per_view, int depth, int height, int width,
                           const geometry::BevGrid& grid);

Projection make_projection(const geometry::FrustumTemplate& tmpl, std::span<const geometry::CameraView> views,
                           const geometry::BevGrid& grid);

Projection make_projection(const geometry::FrustumTemplate& tmpl,
                           std::span<const geometry::PixelCameraField> fields, const geometry::BevGrid& grid);

/// Softmax over the depth axis of [N,D,h,w] logits.
Var depth_distribution(const Var& logits);

/// Outer product of features [N,C,h,w] with depth weights [N,D,h,w]; result
/// is [N,D,h,w,C].
Var lift(const Var& features, const Var& dist);

/// Sums point features ([P,C] or any shape ending in C with P*C elements)
/// into [1,C,rows,cols] following `plan`. The plan must outlive the graph.
Var splat_pool(const Var& points, const SplatPlan& plan, const geometry::BevGrid& grid);

/// depth_distribution -> lift -> splat_pool over all views of `proj`.
Var view_transform(const Var& features, const Var& depth_logits, const Projection& proj);

/// Nearest-neighbour resampling; never invents classes.
LabelMap resize_labels(const LabelMap& labels, int height, int width);

/// Per-class splat mass on the grid plus its thresholded view.
struct DynamicBevLabels {
  Tensor occupancy;  // [K, rows, cols]
  double threshold = 0.5;

  Tensor binarized() const;
  /// min(occupancy, 1), the regression target of the auxiliary head.
  Tensor clamped() const;
};

/// Index of the largest entry along depth for each pixel; ties go to the lower bin.
std::vector<int> argmax_depth(const Tensor& dist);

/// Splats each labeled pixel's one-hot class at its argmax-depth frustum point.
/// `labels` holds one map per view at the projection's feature dims and
/// `dist` is [N,D,h,w].
DynamicBevLabels mask_view_transform(std::span<const LabelMap> labels, const Tensor& dist, const Projection& proj,
                                     int num_classes, double threshold = 0.5);

}  // namespace bevda::vt
