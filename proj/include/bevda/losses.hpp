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

#include "bevda/geometry.hpp"
#include "bevda/nn/ops.hpp"

namespace bevda::loss {

using nn::Tensor;
using nn::Var;

struct LossWeights {
  double lambda1 = 0.5;
  double lambda2 = 0.01;
  double alpha = 0.99;
  double beta_max = 0.1;
  double dice_eps = 1.0;

  void validate() const;
};

/// Soft Dice loss averaged over classes. `probs` and `target` are [N,K,...];
/// class k gathers every element with index k on axis 1:
///   1 - (2*sum(P*G) + eps) / (sum(P) + sum(G) + eps).
Var dice_loss(const Var& probs, const Tensor& target, double eps = 1.0);
double dice_loss(const Tensor& probs, const Tensor& target, double eps = 1.0);

/// Mean squared difference over all elements.
Var l2_map_loss(const Var& pred, const Tensor& target);
double l2_map_loss(const Tensor& pred, const Tensor& target);

/// Mean binary cross-entropy with logits:
///   max(x,0) - x*g + log1p(exp(-|x|)).
Var task_loss(const Var& logits, const Tensor& target);
double task_loss(const Tensor& logits, const Tensor& target);

/// One-hot depth-bin target per pixel; -1 where the ground-truth depth is
/// missing or outside the bin range. `gt_depth` is [N,h,w].
std::vector<int> depth_targets(const Tensor& gt_depth, const geometry::DepthBins& bins);

/// Mean over valid pixels of -log p[true bin] for a [N,D,h,w] distribution;
/// zero when no pixel is valid. Probabilities are floored at 1e-12.
Var depth_loss(const Var& dist, const Tensor& gt_depth, const geometry::DepthBins& bins);
double depth_loss(const Tensor& dist, const Tensor& gt_depth, const geometry::DepthBins& bins);

template <typename T>
struct SourceParts {
  T gt;
  T perspective;
  T dynamic;
  T depth;
};

template <typename T>
struct TargetParts {
  T pseudo;
  T mix;
  T augment;
  T perspective;
  T dynamic;
};

/// Loss^s = Loss_gt + lambda1*Loss_p + lambda2*Loss_y + Loss_d.
template <typename T>
T source_total(const SourceParts<T>& p, const LossWeights& w) {
  return p.gt + w.lambda1 * p.perspective + w.lambda2 * p.dynamic + p.depth;
}

/// Loss^t = beta*(Loss_pl + Loss_mix + 2*Loss_da) + lambda1*Loss_p + lambda2*Loss_y.
template <typename T>
T target_total(const TargetParts<T>& p, const LossWeights& w, double beta) {
  return beta * (p.pseudo + p.mix + 2.0 * p.augment) + w.lambda1 * p.perspective + w.lambda2 * p.dynamic;
}

}  // namespace bevda::loss
