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

#include <cmath>
#include <random>

#include "bevda/errors.hpp"
#include "bevda/losses.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bevda;
using namespace bevda::loss;
using nn::Tensor;

TEST_CASE("dice loss") {
  Tensor g({1, 1, 8}, {1, 1, 1, 0, 0, 0, 0, 0});
  CHECK(dice_loss(g, g, 1.0) <= 1.0 / 7.0 + 1e-15);
  CHECK(dice_loss(g, g, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
  Tensor p({1, 1, 8}, {0, 0, 0, 1, 1, 1, 0, 0});
  CHECK(dice_loss(p, g, 1.0) == doctest::Approx(1.0 - 1.0 / 7.0).epsilon(1e-14));
  Tensor a({1, 1, 4}, {1, 1, 0, 0}), b({1, 1, 4}, {0, 1, 1, 0});
  CHECK(dice_loss(a, b, 1.0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK_THROWS_AS(dice_loss(a, g, 1.0), ContractViolation);
}

TEST_CASE("l2 map loss") {
  std::mt19937_64 rng(3);
  const Tensor x = testing::random_tensor({2, 3, 4}, rng);
  CHECK(l2_map_loss(x, x) == 0.0);
  Tensor y = x;
  for (auto& v : y.values()) v += 0.25;
  CHECK(l2_map_loss(y, x) == doctest::Approx(0.0625).epsilon(1e-12));
  const Tensor z = testing::random_tensor({2, 3, 4}, rng);
  double acc = 0.0;
  for (int64_t i = 0; i < x.size(); ++i) acc += (x[i] - z[i]) * (x[i] - z[i]);
  CHECK(std::abs(l2_map_loss(x, z) - acc / 24.0) <= 1e-7 * acc / 24.0);
}

TEST_CASE("task loss") {
  CHECK(task_loss(Tensor({1, 1}, 40.0), Tensor({1, 1}, 1.0)) < 1e-15);
  CHECK(task_loss(Tensor({2, 3}, 0.0), Tensor({2, 3}, {0, 1, 0, 1, 1, 0})) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  std::mt19937_64 rng(4);
  const Tensor x = testing::random_tensor({50}, rng, -30.0, 30.0);
  Tensor g({50});
  for (auto& v : g.values()) v = static_cast<double>(rng() % 2);
  long double acc = 0;
  for (int i = 0; i < 50; ++i) {
    const long double p = 1.0L / (1.0L + std::exp(-static_cast<long double>(x[i])));
    acc += g[i] > 0.5 ? -std::log(p) : -std::log1p(-p);
  }
  const double want = static_cast<double>(acc / 50);
  CHECK(std::abs(task_loss(x, g) - want) <= 1e-6 * want);
}

TEST_CASE("depth loss") {
  geometry::DepthBins bins{1.0, 5.0, 4};
  Tensor depth({1, 1, 2}, {1.5, 3.2});
  Tensor onehot({1, 4, 1, 2});
  onehot[0 * 2 + 0] = 1.0;
  onehot[2 * 2 + 1] = 1.0;
  CHECK(depth_loss(onehot, depth, bins) == doctest::Approx(0.0));
  CHECK(depth_loss(Tensor({1, 4, 1, 2}, 0.25), depth, bins) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(depth_loss(Tensor({1, 4, 1, 2}, 0.25), Tensor({1, 1, 2}, {0.0, 9.0}), bins) == 0.0);
  CHECK(depth_targets(depth, bins) == std::vector<int>{0, 2});
}

TEST_CASE("composite losses") {
  LossWeights w;
  SourceParts<double> zero{0, 0, 0, 0};
  CHECK(source_total(zero, w) == 0.0);
  CHECK(source_total(SourceParts<double>{1, 1, 1, 1}, w) == doctest::Approx(2.51).epsilon(1e-15));
  CHECK(target_total(TargetParts<double>{1, 1, 1, 1, 1}, w, 0.1) == doctest::Approx(0.91).epsilon(1e-15));
  CHECK(target_total(TargetParts<double>{3, 4, 5, 1, 1}, w, 0.0) == doctest::Approx(0.51).epsilon(1e-15));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng), e = u(rng), beta = u(rng) / 50.0;
    w.lambda1 = u(rng);
    w.lambda2 = u(rng);
    CHECK(source_total(SourceParts<double>{a, b, c, d}, w) == doctest::Approx(a + w.lambda1 * b + w.lambda2 * c + d));
    CHECK(target_total(TargetParts<double>{a, b, c, d, e}, w, beta) ==
          doctest::Approx(beta * (a + b + 2 * c) + w.lambda1 * d + w.lambda2 * e));
  }
  LossWeights bad;
  bad.dice_eps = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
