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

#include <algorithm>
#include <random>

#include "bevda/errors.hpp"
#include "bevda/metrics.hpp"
#include "bevda/vectorize.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bevda;
using namespace bevda::metrics;
using nn::Tensor;

namespace {

Polyline segment(double x0, double y0, double x1, double y1, double score = 1.0, int cls = 1) {
  Polyline p;
  p.points = {{x0, y0}, {x1, y1}};
  p.score = score;
  p.class_id = cls;
  return p;
}

}  // namespace

TEST_CASE("iou") {
  std::vector<double> a{1, 1, 0, 0}, b{0, 0, 1, 1}, gt{1, 1, 1, 1};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, b) == 0.0);
  CHECK(iou(a, gt) == 0.5);
  CHECK(iou(std::vector<double>(4, 0.0), std::vector<double>(4, 0.0)) == 1.0);
  Tensor p({2, 2}, {1, 0, 1, 1}), g({2, 2}, {1, 1, 0, 1});
  CHECK(per_class_iou(p, g) == std::vector<double>{0.5, 0.5});
  CHECK(miou(g, g) == 1.0);
  CHECK(miou(Tensor({2, 2}), g) == 0.0);
  IouAccumulator acc(2);
  acc.add(p, g);
  acc.add(g, g);
  CHECK(acc.per_class() == std::vector<double>{3.0 / 4.0, 2.0 / 3.0});
  CHECK_THROWS_AS(per_class_iou(Tensor({2, 3}), g), ContractViolation);
}

TEST_CASE("chamfer distance") {
  const auto a = segment(0, 0, 1, 0), b = segment(0, 1, 1, 1);
  CHECK(chamfer_distance(a, a) == 0.0);
  CHECK(chamfer_distance(a, b) == doctest::Approx(1.0).epsilon(1e-3));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 50; ++i) {
    Polyline p, q;
    for (int k = 0; k < 3; ++k) p.points.emplace_back(u(rng), u(rng)), q.points.emplace_back(u(rng), u(rng));
    CHECK(chamfer_distance(p, q) == doctest::Approx(chamfer_distance(q, p)).epsilon(1e-12));
  }
}

TEST_CASE("chamfer AP simple cases") {
  const std::vector<Polyline> gt{segment(0, 0, 4, 0)};
  for (double t : kChamferThresholds) {
    CHECK(chamfer_ap(gt, gt, t) == 1.0);
    CHECK(chamfer_ap({}, gt, t) == 0.0);
  }
  CHECK(chamfer_ap({}, {}, 1.0) == 1.0);
  CHECK(chamfer_ap(gt, {}, 1.0) == 0.0);
}

TEST_CASE("chamfer AP matches the brute-force oracle") {
  std::mt19937_64 rng(8);
  const double offsets[] = {0.0, 0.3, 0.7, 0.8, 1.2, 1.3, 2.0, 3.0};
  for (int trial = 0; trial < 50; ++trial) {
    const int num_gt = static_cast<int>(rng() % 4);
    const int num_pred = 1 + static_cast<int>(rng() % 5);
    std::vector<Polyline> gts, preds;
    // Ground-truth segments far apart so each prediction is near at most one.
    for (int g = 0; g < num_gt; ++g) gts.push_back(segment(0, 10.0 * g, 5, 10.0 * g));
    std::vector<double> scores;
    std::vector<std::vector<double>> dist;
    for (int p = 0; p < num_pred; ++p) {
      const int near = static_cast<int>(rng() % 5);
      const double off = offsets[rng() % 8];
      const double base = near < num_gt ? 10.0 * near : 100.0 + 10.0 * p;
      preds.push_back(segment(0, base + off, 5, base + off, 0.05 + 0.9 * (p + 1) / (num_pred + 1.0)));
      scores.push_back(preds.back().score);
      std::vector<double> row;
      for (int g = 0; g < num_gt; ++g) row.push_back(std::abs(base + off - 10.0 * g));
      dist.push_back(row);
    }
    std::shuffle(preds.begin(), preds.end(), rng);
    // Rebuild the oracle inputs in the shuffled order.
    scores.clear();
    dist.clear();
    for (const auto& p : preds) {
      scores.push_back(p.score);
      std::vector<double> row;
      for (int g = 0; g < num_gt; ++g) row.push_back(std::abs(p.points[0].y() - 10.0 * g));
      dist.push_back(row);
    }
    for (double t : kChamferThresholds)
      CHECK(chamfer_ap(preds, gts, t) == doctest::Approx(testing::oracle_ap(scores, dist, num_gt, t)).epsilon(1e-12));
  }
}

TEST_CASE("three predictions against two ground truths") {
  const std::vector<Polyline> gts{segment(0, 0, 4, 0), segment(0, 10, 4, 10)};
  const std::vector<Polyline> preds{segment(0, 0.2, 4, 0.2, 0.9), segment(0, 5, 4, 5, 0.8),
                                    segment(0, 10.7, 4, 10.7, 0.7)};
  // Threshold 0.5: TP, FP, FP -> precision 1 at recall 0.5.
  CHECK(chamfer_ap(preds, gts, 0.5) == doctest::Approx(0.5));
  // Threshold 1.0: TP, FP, TP -> 0.5*1 + 0.5*(2/3).
  CHECK(chamfer_ap(preds, gts, 1.0) == doctest::Approx(0.5 + 1.0 / 3.0));
  const auto rep = chamfer_map(preds, gts);
  CHECK(rep.classes == std::vector<int>{1});
  CHECK(rep.map == doctest::Approx((0.5 + 2 * (0.5 + 1.0 / 3.0)) / 3.0));
}

TEST_CASE("polyline text round trip") {
  const auto lines = parse_polylines("# comment\n2 0.5 0 0 1 0 2 1\n1 1 3 3 4 4\n");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].class_id == 2);
  CHECK(lines[0].points.size() == 3);
  CHECK(parse_polylines(format_polylines(lines)).size() == 2);
  CHECK_THROWS_AS(parse_polylines("1 1 0 0 1\n"), FormatError);
}

TEST_CASE("vectorizing a straight divider") {
  geometry::BevGrid g{-8.0, 8.0, -8.0, 8.0, 1.0};
  Tensor scores({5, 16, 16});
  for (int r = 2; r < 14; ++r) scores[(2 * 16 + r) * 16 + 9] = 0.9;
  const int classes[] = {2};
  const auto lines = vectorize_bev(scores, g, classes);
  REQUIRE(lines.size() == 1);
  CHECK(lines[0].class_id == 2);
  CHECK(lines[0].score == doctest::Approx(0.9));
  CHECK(lines[0].length() == doctest::Approx(11.0).epsilon(0.1));
  for (const auto& p : lines[0].points) CHECK(p.y() == doctest::Approx(1.5));
}
