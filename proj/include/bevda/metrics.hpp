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
#include <array>
#include <span>
#include <string>
#include <vector>

#include "bevda/nn/tensor.hpp"

namespace bevda::metrics {

/// IoU of two binary maps (entries > 0.5 count as set). Both empty -> 1.
double iou(std::span<const double> pred, std::span<const double> gt);

/// Per-class IoU over [K, ...] binary tensors.
std::vector<double> per_class_iou(const nn::Tensor& pred, const nn::Tensor& gt);
double miou(const nn::Tensor& pred, const nn::Tensor& gt);

/// Streaming intersection/union counts for evaluating many maps at once.
class IouAccumulator {
 public:
  explicit IouAccumulator(int num_classes);
  void add(const nn::Tensor& pred, const nn::Tensor& gt);
  std::vector<double> per_class() const;
  double mean() const;

 private:
  std::vector<int64_t> inter_;
  std::vector<int64_t> uni_;
};

struct Polyline {
  std::vector<Eigen::Vector2d> points;
  double score = 1.0;
  int class_id = 0;

  void validate() const;
  double length() const;
};

/// Points at arc length 0, step, 2*step, ... plus the final vertex.
std::vector<Eigen::Vector2d> resample(const Polyline& line, double step);

/// 0.5 * (mean_a min_b |a-b| + mean_b min_a |a-b|) over resampled points.
double chamfer_distance(const Polyline& a, const Polyline& b, double sample_step = 0.1);

inline constexpr std::array<double, 3> kChamferThresholds{0.5, 1.0, 1.5};

/// Average precision for one class at one threshold. Predictions are matched
/// greedily in descending score order to the closest unmatched ground truth
/// within `threshold`; AP is the all-point interpolated area under the
/// precision-recall curve. With no ground truth, AP is 1 if there are no
/// predictions and 0 otherwise.
double chamfer_ap(std::span<const Polyline> preds, std::span<const Polyline> gts, double threshold,
                  double sample_step = 0.1);

struct ChamferReport {
  std::vector<int> classes;
  /// ap[c][t] for classes[c] and kChamferThresholds[t].
  std::vector<std::array<double, 3>> ap;
  std::vector<double> class_map;
  double map = 0.0;
};

/// Per-class AP at each threshold, averaged over thresholds, then over the
/// classes present in either input.
ChamferReport chamfer_map(std::span<const Polyline> preds, std::span<const Polyline> gts,
                          double sample_step = 0.1);

/// Polyline text: one per line, "class score x0 y0 x1 y1 ...". '#' starts a comment.
std::vector<Polyline> parse_polylines(const std::string& text);
std::vector<Polyline> read_polylines(const std::string& path);

}  // namespace bevda::metrics
