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

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "bevda/geometry.hpp"
#include "bevda/nn/tensor.hpp"

namespace bevda::testing {

/// Per-point scatter-add of [P,C] features into [1,C,rows,cols].
inline nn::Tensor naive_scatter(const nn::Tensor& points, std::span<const int32_t> cells,
                                const geometry::BevGrid& grid) {
  const int64_t c = points.dim(-1);
  nn::Tensor out({1, c, grid.rows(), grid.cols()});
  const int64_t plane = grid.cell_count();
  for (size_t p = 0; p < cells.size(); ++p) {
    if (cells[p] < 0) continue;
    for (int64_t ch = 0; ch < c; ++ch) out[ch * plane + cells[p]] += points[static_cast<int64_t>(p) * c + ch];
  }
  return out;
}

// Greedy matching in score order and all-point interpolated AP, given the
// pairwise distances directly.
inline double oracle_ap(const std::vector<double>& scores, const std::vector<std::vector<double>>& dist, int num_gt,
                        double threshold) {
  if (num_gt == 0) return scores.empty() ? 1.0 : 0.0;
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  std::vector<bool> used(static_cast<size_t>(num_gt), false);
  std::vector<double> prec, rec;
  int tp = 0, fp = 0;
  for (size_t i : order) {
    int best = -1;
    for (int g = 0; g < num_gt; ++g)
      if (!used[static_cast<size_t>(g)] && dist[i][static_cast<size_t>(g)] <= threshold &&
          (best < 0 || dist[i][static_cast<size_t>(g)] < dist[i][static_cast<size_t>(best)]))
        best = g;
    if (best >= 0) {
      used[static_cast<size_t>(best)] = true;
      ++tp;
    } else {
      ++fp;
    }
    prec.push_back(double(tp) / (tp + fp));
    rec.push_back(double(tp) / num_gt);
  }
  double ap = 0.0, prev_r = 0.0;
  for (size_t i = 0; i < prec.size(); ++i) {
    double envelope = 0.0;
    for (size_t j = i; j < prec.size(); ++j) envelope = std::max(envelope, prec[j]);
    ap += (rec[i] - prev_r) * envelope;
    prev_r = rec[i];
  }
  return ap;
}

}  // namespace bevda::testing
