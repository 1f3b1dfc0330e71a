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

#include "bevda/viewtransform.hpp"

#include <algorithm>
#include <numeric>

#include "bevda/errors.hpp"

namespace bevda::vt {

using nn::Node;

SplatPlan SplatPlan::build(std::span<const int32_t> cells, int cell_count) {
  const auto n = static_cast<int64_t>(cells.size());
  const std::vector<int> rank{0};
  return build(cells, cell_count, n, rank);
}

SplatPlan SplatPlan::build(std::span<const int32_t> cells, int cell_count, int64_t points_per_view,
                           std::span<const int> view_rank) {
  require(points_per_view > 0 || cells.empty(), "splat plan: points per view must be positive");
  require(static_cast<int64_t>(view_rank.size()) * points_per_view == static_cast<int64_t>(cells.size()),
          "splat plan: view rank count does not match cell array");
  SplatPlan plan;
  plan.point_count = static_cast<int64_t>(cells.size());
  plan.cell_count = cell_count;
  plan.offsets.assign(static_cast<size_t>(cell_count) + 1, 0);
  for (int32_t c : cells) {
    require(c < cell_count, "splat plan: cell index out of range");
    if (c >= 0) ++plan.offsets[static_cast<size_t>(c) + 1];
  }
  for (int c = 0; c < cell_count; ++c) plan.offsets[c + 1] += plan.offsets[c];
  plan.point_ids.resize(static_cast<size_t>(plan.offsets.back()));

  // Counting sort: visiting views by rank keeps each bucket in canonical order.
  std::vector<int> by_rank(view_rank.size());
  for (size_t v = 0; v < view_rank.size(); ++v) by_rank[static_cast<size_t>(view_rank[v])] = static_cast<int>(v);
  std::vector<int64_t> cursor(plan.offsets.begin(), plan.offsets.end() - 1);
  for (int v : by_rank) {
    const int64_t base = v * points_per_view;
    for (int64_t p = base; p < base + points_per_view; ++p) {
      const int32_t c = cells[static_cast<size_t>(p)];
      if (c >= 0) plan.point_ids[static_cast<size_t>(cursor[static_cast<size_t>(c)]++)] = p;
    }
  }
  return plan;
}

Projection make_projection(const std::vector<geometry::CellAssignment>& per_view, int depth, int height, int width,
                           const geometry::BevGrid& grid) {
  Projection proj;
  proj.views = static_cast<int>(per_view.size());
  proj.depth = depth;
  proj.height = height;
  proj.width = width;
  proj.grid = grid;
  const int64_t ppv = proj.points_per_view();
  for (const auto& a : per_view) {
    require(static_cast<int64_t>(a.cells.size()) == ppv, "projection: per-view point count mismatch");
    proj.cells.insert(proj.cells.end(), a.cells.begin(), a.cells.end());
  }
  std::vector<int> order(per_view.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return per_view[a].cells < per_view[b].cells; });
  std::vector<int> rank(per_view.size());
  for (size_t r = 0; r < order.size(); ++r) rank[static_cast<size_t>(order[r])] = static_cast<int>(r);
  proj.plan = SplatPlan::build(proj.cells, grid.cell_count(), ppv, rank);
  return proj;
}

Projection make_projection(const geometry::FrustumTemplate& tmpl, std::span<const geometry::CameraView> views,
                           const geometry::BevGrid& grid) {
  std::vector<geometry::CellAssignment> per_view;
  for (const auto& v : views) per_view.push_back(geometry::rasterize_to_cells(geometry::unproject_to_ego(tmpl, v), grid));
  return make_projection(per_view, tmpl.depth, tmpl.height, tmpl.width, grid);
}

Projection make_projection(const geometry::FrustumTemplate& tmpl,
                           std::span<const geometry::PixelCameraField> fields, const geometry::BevGrid& grid) {
  std::vector<geometry::CellAssignment> per_view;
  for (const auto& f : fields) per_view.push_back(geometry::rasterize_to_cells(geometry::unproject_to_ego(tmpl, f), grid));
  return make_projection(per_view, tmpl.depth, tmpl.height, tmpl.width, grid);
}

Var depth_distribution(const Var& logits) {
  require(logits->value.rank() == 4, "depth_distribution: logits must be [N,D,h,w]");
  return nn::softmax(logits, 1);
}

Var lift(const Var& features, const Var& dist) {
  const Tensor& f = features->value;
  const Tensor& d = dist->value;
  require(f.rank() == 4 && d.rank() == 4, "lift: expected [N,C,h,w] features and [N,D,h,w] weights");
  require(f.dim(0) == d.dim(0) && f.dim(2) == d.dim(2) && f.dim(3) == d.dim(3), "lift: shape mismatch");
  const int64_t n = f.dim(0), c = f.dim(1), depth = d.dim(1), plane = f.dim(2) * f.dim(3);

  Tensor out({n, depth, f.dim(2), f.dim(3), c});
  for (int64_t s = 0; s < n; ++s)
    for (int64_t k = 0; k < depth; ++k)
      for (int64_t p = 0; p < plane; ++p) {
        const double w = d[(s * depth + k) * plane + p];
        double* o = out.data() + ((s * depth + k) * plane + p) * c;
        for (int64_t ch = 0; ch < c; ++ch) o[ch] = w * f[(s * c + ch) * plane + p];
      }

  return make_result(std::move(out), {features, dist}, [features, dist, n, c, depth, plane](Node& self) {
    const Tensor& f = features->value;
    const Tensor& d = dist->value;
    for (int64_t s = 0; s < n; ++s)
      for (int64_t k = 0; k < depth; ++k)
        for (int64_t p = 0; p < plane; ++p) {
          const double* g = self.grad.data() + ((s * depth + k) * plane + p) * c;
          const double w = d[(s * depth + k) * plane + p];
          if (features->requires_grad)
            for (int64_t ch = 0; ch < c; ++ch) features->grad[(s * c + ch) * plane + p] += g[ch] * w;
          if (dist->requires_grad) {
            double acc = 0.0;
            for (int64_t ch = 0; ch < c; ++ch) acc += g[ch] * f[(s * c + ch) * plane + p];
            dist->grad[(s * depth + k) * plane + p] += acc;
          }
        }
  });
}

Var splat_pool(const Var& points, const SplatPlan& plan, const geometry::BevGrid& grid) {
  const Tensor& pv = points->value;
  require(pv.rank() >= 1, "splat_pool: points must have a channel axis");
  const int64_t c = pv.dim(-1);
  require(c > 0 && pv.size() == plan.point_count * c, "splat_pool: point count does not match plan");
  require(plan.cell_count == grid.cell_count(), "splat_pool: plan built for a different grid");
  const int64_t cells = plan.cell_count;

  Tensor out({1, c, grid.rows(), grid.cols()});
  const double* in = pv.data();
  double* o = out.data();
  for (int64_t cell = 0; cell < cells; ++cell) {
    const int64_t lo = plan.offsets[static_cast<size_t>(cell)], hi = plan.offsets[static_cast<size_t>(cell) + 1];
    if (lo == hi) continue;
    for (int64_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int64_t q = lo; q < hi; ++q) acc += in[plan.point_ids[static_cast<size_t>(q)] * c + ch];
      o[ch * cells + cell] = acc;
    }
  }

  return make_result(std::move(out), {points}, [points, &plan, c, cells](Node& self) {
    const double* g = self.grad.data();
    double* dp = points->grad.data();
    for (int64_t cell = 0; cell < cells; ++cell) {
      const int64_t lo = plan.offsets[static_cast<size_t>(cell)], hi = plan.offsets[static_cast<size_t>(cell) + 1];
      for (int64_t q = lo; q < hi; ++q) {
        const int64_t p = plan.point_ids[static_cast<size_t>(q)];
        for (int64_t ch = 0; ch < c; ++ch) dp[p * c + ch] += g[ch * cells + cell];
      }
    }
  });
}

Var view_transform(const Var& features, const Var& depth_logits, const Projection& proj) {
  const Tensor& f = features->value;
  const Tensor& l = depth_logits->value;
  require(f.rank() == 4 && f.dim(0) == proj.views && f.dim(2) == proj.height && f.dim(3) == proj.width,
          "view_transform: features do not match projection");
  require(l.rank() == 4 && l.dim(0) == proj.views && l.dim(1) == proj.depth && l.dim(2) == proj.height &&
              l.dim(3) == proj.width,
          "view_transform: depth logits do not match projection");
  return splat_pool(lift(features, depth_distribution(depth_logits)), proj.plan, proj.grid);
}

LabelMap resize_labels(const LabelMap& labels, int height, int width) {
  require(height > 0 && width > 0, "resize_labels: target dims must be positive");
  require(labels.height > 0 && labels.width > 0, "resize_labels: empty input");
  LabelMap out(height, width);
  for (int r = 0; r < height; ++r) {
    const int sr = std::min(labels.height - 1, static_cast<int>((static_cast<int64_t>(2 * r + 1) * labels.height) / (2 * height)));
    for (int c = 0; c < width; ++c) {
      const int sc = std::min(labels.width - 1, static_cast<int>((static_cast<int64_t>(2 * c + 1) * labels.width) / (2 * width)));
      out.at(r, c) = labels.at(sr, sc);
    }
  }
  return out;
}

Tensor DynamicBevLabels::binarized() const {
  Tensor out(occupancy.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = occupancy[i] > threshold ? 1.0 : 0.0;
  return out;
}

Tensor DynamicBevLabels::clamped() const {
  Tensor out(occupancy.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::min(occupancy[i], 1.0);
  return out;
}

std::vector<int> argmax_depth(const Tensor& dist) {
  require(dist.rank() == 4, "argmax_depth: expected [N,D,h,w]");
  const int64_t n = dist.dim(0), depth = dist.dim(1), plane = dist.dim(2) * dist.dim(3);
  std::vector<int> best(static_cast<size_t>(n * plane), 0);
  for (int64_t s = 0; s < n; ++s)
    for (int64_t p = 0; p < plane; ++p) {
      int arg = 0;
      double mx = dist[(s * depth) * plane + p];
      for (int64_t k = 1; k < depth; ++k) {
        const double v = dist[(s * depth + k) * plane + p];
        if (v > mx) {
          mx = v;
          arg = static_cast<int>(k);
        }
      }
      best[static_cast<size_t>(s * plane + p)] = arg;
    }
  return best;
}

DynamicBevLabels mask_view_transform(std::span<const LabelMap> labels, const Tensor& dist, const Projection& proj,
                                     int num_classes, double threshold) {
  require(static_cast<int>(labels.size()) == proj.views, "mask_view_transform: one label map per view required");
  require(dist.rank() == 4 && dist.dim(0) == proj.views && dist.dim(1) == proj.depth && dist.dim(2) == proj.height &&
              dist.dim(3) == proj.width,
          "mask_view_transform: depth distribution does not match projection");
  const int64_t cells = proj.grid.cell_count();
  const int64_t plane = static_cast<int64_t>(proj.height) * proj.width;
  const auto best = argmax_depth(dist);

  DynamicBevLabels out;
  out.threshold = threshold;
  out.occupancy = Tensor({num_classes, proj.grid.rows(), proj.grid.cols()});
  for (int v = 0; v < proj.views; ++v) {
    const LabelMap& lm = labels[static_cast<size_t>(v)];
    require(lm.height == proj.height && lm.width == proj.width, "mask_view_transform: label dims mismatch");
    for (int64_t p = 0; p < plane; ++p) {
      const int8_t cls = lm.data[static_cast<size_t>(p)];
      if (cls == kBackground) continue;
      require(cls >= 0 && cls < num_classes, "mask_view_transform: class id out of range");
      const int k = best[static_cast<size_t>(v * plane + p)];
      const int32_t cell = proj.cells[static_cast<size_t>(v * proj.points_per_view() + k * plane + p)];
      if (cell >= 0) out.occupancy[cls * cells + cell] += 1.0;
    }
  }
  return out;
}

}  // namespace bevda::vt
