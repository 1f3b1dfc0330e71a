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

#include <random>

#include "bevda/errors.hpp"
#include "bevda/frustum_mixing.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bevda;
using namespace bevda::mixing;
using nn::Tensor;

namespace {

InstanceMaskSet masks_with_counts(const std::vector<int>& counts, int h = 4, int w = 5) {
  std::vector<std::vector<uint8_t>> m;
  for (int c : counts) {
    std::vector<uint8_t> mask(static_cast<size_t>(h * w), 0);
    for (int i = 0; i < c; ++i) mask[static_cast<size_t>(i)] = 1;
    m.push_back(mask);
  }
  return InstanceMaskSet::from_masks(h, w, m);
}

InstanceMaskSet random_masks(std::mt19937_64& rng, int views, int h, int w) {
  std::vector<std::vector<uint8_t>> m(static_cast<size_t>(views));
  for (auto& mask : m) {
    mask.resize(static_cast<size_t>(h * w));
    const uint64_t density = rng() % 4;
    for (auto& x : mask) x = (rng() % 8) < density;
  }
  return InstanceMaskSet::from_masks(h, w, m);
}

}  // namespace

TEST_CASE("isolated view rule") {
  auto p = plan_mixing(masks_with_counts({10, 50, 0}, 8, 8));
  CHECK(p.isolated_view == 1);
  CHECK(p.mix_views == std::vector<int>{0});
  p = plan_mixing(masks_with_counts({0, 0}));
  CHECK(p.empty());
  CHECK(p.mix_views.empty());
  p = plan_mixing(masks_with_counts({7, 7}, 4, 4));
  CHECK(p.isolated_view == 0);
  CHECK(p.mix_views == std::vector<int>{1});
  p = plan_mixing(masks_with_counts({3, 5, 0, 5, 1}));
  CHECK(p.isolated_view == 1);
  CHECK(p.mix_views == std::vector<int>{0, 3, 4});
  p = plan_mixing(masks_with_counts({0, 4, 0}));
  CHECK(p.isolated_view == 1);
  CHECK(p.mix_views.empty());
}

TEST_CASE("mixed image provenance") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int views = 1 + static_cast<int>(rng() % 5);
    const auto masks = random_masks(rng, views, 6, 9);
    const auto plan = plan_mixing(masks);
    const Tensor src = testing::random_tensor({views, 3, 6, 9}, rng);
    const Tensor tgt = testing::random_tensor({views, 3, 6, 9}, rng);
    const Tensor out = mix_images(plan, masks, src, tgt);
    for (int v = 0; v < views; ++v)
      for (int c = 0; c < 3; ++c)
        for (int p = 0; p < 54; ++p) {
          const int64_t i = (v * 3 + c) * 54 + p;
          const bool pasted = plan.mixes(v) && masks.masks[static_cast<size_t>(v)][static_cast<size_t>(p)];
          CHECK(out[i] == (pasted ? src[i] : tgt[i]));
        }
  }
}

TEST_CASE("full paste and empty plan") {
  std::mt19937_64 rng(3);
  const Tensor src = testing::random_tensor({2, 3, 4, 5}, rng);
  const Tensor tgt = testing::random_tensor({2, 3, 4, 5}, rng);
  auto masks = InstanceMaskSet::from_masks(4, 5, {std::vector<uint8_t>(20, 1), std::vector<uint8_t>(20, 1)});
  MixPlan plan;
  plan.mix_views = {1};
  plan.isolated_view = 0;
  const Tensor out = mix_images(plan, masks, src, tgt);
  for (int64_t i = 0; i < 60; ++i) CHECK(out[i] == tgt[i]);
  for (int64_t i = 60; i < 120; ++i) CHECK(out[i] == src[i]);
  CHECK(mix_images(MixPlan{}, masks, src, tgt) == tgt);
  CHECK_THROWS_AS(mix_images(plan, masks, src, Tensor({2, 3, 4, 4})), ContractViolation);
}

TEST_CASE("per-pixel camera fields") {
  const auto s = geometry::make_camera(10, 10, 5, 5, 0.0, 0.1, Eigen::Vector3d(0, 0, 1.5));
  const auto t = geometry::make_camera(12, 12, 5, 5, 0.0, 0.2, Eigen::Vector3d(0, 0, 1.6));
  const std::vector<geometry::CameraView> src{s, s}, tgt{t, t};
  std::vector<uint8_t> checker(20), full(20, 1);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 5; ++c) checker[static_cast<size_t>(r * 5 + c)] = (r + c) % 2;
  const auto masks = InstanceMaskSet::from_masks(4, 5, {full, checker});
  const auto plan = plan_mixing(masks);
  REQUIRE(plan.isolated_view == 0);

  const auto none = mix_projection_params(MixPlan{}, masks, src, tgt);
  for (const auto& f : none)
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 5; ++c) CHECK(f.at(r, c) == t);

  const auto fields = mix_projection_params(plan, masks, src, tgt);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 5; ++c) {
      CHECK(fields[0].at(r, c) == t);
      CHECK(fields[1].at(r, c) == ((r + c) % 2 ? s : t));
    }

  MixPlan both;
  both.mix_views = {0, 1};
  const auto pasted = mix_projection_params(both, InstanceMaskSet::from_masks(4, 5, {full, full}), src, tgt);
  for (const auto& f : pasted)
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 5; ++c) CHECK(f.at(r, c) == s);
}

TEST_CASE("mixed BEV labels") {
  const int k = 5, rows = 4, cols = 4, cells = 16;
  Tensor pseudo({k, rows, cols}), gt({k, rows, cols});
  std::mt19937_64 rng(4);
  for (auto& x : pseudo.values()) x = static_cast<double>(rng() % 100) / 100.0;
  // Source vehicles: one in view 0's footprint, one in view 1's.
  gt[4 * cells + 1] = 1.0;
  gt[4 * cells + 14] = 1.0;
  std::vector<std::vector<uint8_t>> fps(2, std::vector<uint8_t>(cells, 0));
  for (int c = 0; c < 8; ++c) fps[0][static_cast<size_t>(c)] = 1;
  for (int c = 8; c < 16; ++c) fps[1][static_cast<size_t>(c)] = 1;

  CHECK(mix_bev_labels(MixPlan{}, gt, pseudo, fps, 4) == pseudo);

  MixPlan plan;
  plan.mix_views = {0};
  plan.isolated_view = 1;
  const Tensor out = mix_bev_labels(plan, gt, pseudo, fps, 4);
  CHECK(out[4 * cells + 1] == 1.0);
  CHECK(out[4 * cells + 14] == pseudo[4 * cells + 14]);
  for (int64_t i = 0; i < 4 * cells; ++i) CHECK(out[i] == pseudo[i]);
  for (int c = 8; c < 16; ++c) CHECK(out[4 * cells + c] == pseudo[4 * cells + c]);
  CHECK_THROWS_AS(mix_bev_labels(plan, gt, Tensor({k, rows, cols + 1}), fps, 4), ContractViolation);
}
