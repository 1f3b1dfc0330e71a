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

#include "bevda/losses.hpp"

#include <cmath>

#include "bevda/errors.hpp"

namespace bevda::loss {

using nn::Node;

void LossWeights::validate() const {
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0)) throw ConfigError("loss weights must be non-negative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("EMA momentum must lie in (0, 1)");
  if (!(beta_max >= 0.0)) throw ConfigError("beta_max must be non-negative");
  if (!(dice_eps > 0.0)) throw ConfigError("dice epsilon must be positive");
}

Var dice_loss(const Var& probs, const Tensor& target, double eps) {
  const Tensor& p = probs->value;
  require(p.same_shape(target), "dice_loss: shape mismatch");
  require(p.rank() >= 2, "dice_loss: expected [N,K,...]");
  const int64_t n = p.dim(0), k = p.dim(1), inner = p.size() / (n * k);

  std::vector<double> inter(static_cast<size_t>(k), 0.0), ps(static_cast<size_t>(k), 0.0),
      gs(static_cast<size_t>(k), 0.0);
  for (int64_t s = 0; s < n; ++s)
    for (int64_t c = 0; c < k; ++c)
      for (int64_t i = 0; i < inner; ++i) {
        const int64_t idx = (s * k + c) * inner + i;
        inter[c] += p[idx] * target[idx];
        ps[c] += p[idx];
        gs[c] += target[idx];
      }
  double total = 0.0;
  for (int64_t c = 0; c < k; ++c) total += 1.0 - (2.0 * inter[c] + eps) / (ps[c] + gs[c] + eps);
  total /= static_cast<double>(k);

  return make_result(Tensor({1}, total), {probs},
                     [probs, target, inter, ps, gs, n, k, inner, eps](Node& self) {
                       const double g = self.grad[0] / static_cast<double>(k);
                       for (int64_t c = 0; c < k; ++c) {
                         const double num = 2.0 * inter[c] + eps;
                         const double den = ps[c] + gs[c] + eps;
                         // d/dP of -(num/den) = -(2G*den - num) / den^2
                         for (int64_t s = 0; s < n; ++s)
                           for (int64_t i = 0; i < inner; ++i) {
                             const int64_t idx = (s * k + c) * inner + i;
                             probs->grad[idx] += -g * (2.0 * target[idx] * den - num) / (den * den);
                           }
                       }
                     });
}

double dice_loss(const Tensor& probs, const Tensor& target, double eps) {
  return dice_loss(nn::constant(probs), target, eps)->value[0];
}

Var l2_map_loss(const Var& pred, const Tensor& target) {
  const Tensor& p = pred->value;
  require(p.same_shape(target), "l2_map_loss: shape mismatch");
  require(p.size() > 0, "l2_map_loss: empty input");
  double acc = 0.0;
  for (int64_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - target[i];
    acc += d * d;
  }
  const double inv_n = 1.0 / static_cast<double>(p.size());
  return make_result(Tensor({1}, acc * inv_n), {pred}, [pred, target, inv_n](Node& self) {
    const double g = 2.0 * self.grad[0] * inv_n;
    for (int64_t i = 0; i < pred->value.size(); ++i) pred->grad[i] += g * (pred->value[i] - target[i]);
  });
}

double l2_map_loss(const Tensor& pred, const Tensor& target) { return l2_map_loss(nn::constant(pred), target)->value[0]; }

Var task_loss(const Var& logits, const Tensor& target) {
  const Tensor& x = logits->value;
  require(x.same_shape(target), "task_loss: shape mismatch");
  require(x.size() > 0, "task_loss: empty input");
  double acc = 0.0;
  for (int64_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    acc += std::max(v, 0.0) - v * target[i] + std::log1p(std::exp(-std::abs(v)));
  }
  const double inv_n = 1.0 / static_cast<double>(x.size());
  return make_result(Tensor({1}, acc * inv_n), {logits}, [logits, target, inv_n](Node& self) {
    const double g = self.grad[0] * inv_n;
    for (int64_t i = 0; i < logits->value.size(); ++i) {
      const double v = logits->value[i];
      const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      logits->grad[i] += g * (s - target[i]);
    }
  });
}

double task_loss(const Tensor& logits, const Tensor& target) { return task_loss(nn::constant(logits), target)->value[0]; }

std::vector<int> depth_targets(const Tensor& gt_depth, const geometry::DepthBins& bins) {
  std::vector<int> out(static_cast<size_t>(gt_depth.size()), -1);
  for (int64_t i = 0; i < gt_depth.size(); ++i) {
    if (auto b = bins.bin_of(gt_depth[i])) out[static_cast<size_t>(i)] = *b;
  }
  return out;
}

Var depth_loss(const Var& dist, const Tensor& gt_depth, const geometry::DepthBins& bins) {
  const Tensor& d = dist->value;
  require(d.rank() == 4 && d.dim(1) == bins.count, "depth_loss: distribution must be [N,D,h,w]");
  require(gt_depth.rank() == 3 && gt_depth.dim(0) == d.dim(0) && gt_depth.dim(1) == d.dim(2) &&
              gt_depth.dim(2) == d.dim(3),
          "depth_loss: ground-truth depth must be [N,h,w]");
  constexpr double kFloor = 1e-12;
  const int64_t n = d.dim(0), depth = d.dim(1), plane = d.dim(2) * d.dim(3);
  const auto targets = depth_targets(gt_depth, bins);
  double acc = 0.0;
  int64_t valid = 0;
  for (int64_t s = 0; s < n; ++s)
    for (int64_t p = 0; p < plane; ++p) {
      const int k = targets[static_cast<size_t>(s * plane + p)];
      if (k < 0) continue;
      acc -= std::log(std::max(d[(s * depth + k) * plane + p], kFloor));
      ++valid;
    }
  if (valid == 0) return make_result(Tensor({1}, 0.0), {dist}, [](Node&) {});
  const double inv_n = 1.0 / static_cast<double>(valid);
  return make_result(Tensor({1}, acc * inv_n), {dist}, [dist, targets, n, depth, plane, inv_n](Node& self) {
    const double g = self.grad[0] * inv_n;
    for (int64_t s = 0; s < n; ++s)
      for (int64_t p = 0; p < plane; ++p) {
        const int k = targets[static_cast<size_t>(s * plane + p)];
        if (k < 0) continue;
        const int64_t idx = (s * depth + k) * plane + p;
        const double v = dist->value[idx];
        if (v > kFloor) dist->grad[idx] -= g / v;
      }
  });
}

double depth_loss(const Tensor& dist, const Tensor& gt_depth, const geometry::DepthBins& bins) {
  return depth_loss(nn::constant(dist), gt_depth, bins)->value[0];
}

}  // namespace bevda::loss
