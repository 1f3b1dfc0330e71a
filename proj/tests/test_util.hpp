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

#include <Eigen/Geometry>
#include <cmath>
#include <random>

#include "bevda/geometry.hpp"
#include "bevda/nn/tensor.hpp"

namespace bevda::testing {

inline geometry::CameraView random_camera(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  geometry::CameraView v;
  v.intrinsics << 200.0 + 100.0 * u(rng), 0.0, 60.0 + 10.0 * u(rng), 0.0, 200.0 + 100.0 * u(rng),
      30.0 + 10.0 * u(rng), 0.0, 0.0, 1.0;
  v.rotation = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized().toRotationMatrix();
  v.translation = Eigen::Vector3d(2.0 * u(rng), 2.0 * u(rng), 1.5 + 0.5 * u(rng));
  const double s = 1.0 + 0.3 * u(rng);
  v.preproc << s, 0.1 * u(rng), 5.0 * u(rng), 0.0, s, 5.0 * u(rng), 0.0, 0.0, 1.0;
  return v;
}

inline nn::Tensor random_tensor(nn::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  nn::Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& x : t.values()) x = u(rng);
  return t;
}

}  // namespace bevda::testing
