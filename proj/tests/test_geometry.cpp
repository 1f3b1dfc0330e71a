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

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "bevda/errors.hpp"
#include "bevda/geometry.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bevda;
using namespace bevda::geometry;

namespace {

// 4x4 homogeneous chain: ego <- camera <- ray <- raw pixel <- final pixel.
Eigen::Vector3d homogeneous_oracle(const CameraView& v, double u, double vv, double d) {
  Eigen::Matrix4d extr = Eigen::Matrix4d::Identity();
  extr.topLeftCorner<3, 3>() = v.rotation;
  extr.topRightCorner<3, 1>() = v.translation;
  Eigen::Matrix4d kinv = Eigen::Matrix4d::Identity();
  kinv.topLeftCorner<3, 3>() = v.intrinsics.inverse();
  Eigen::Matrix4d tinv = Eigen::Matrix4d::Identity();
  tinv.topLeftCorner<3, 3>() = v.preproc.inverse();
  const Eigen::Vector4d p = extr * kinv * tinv * Eigen::Vector4d(u * d, vv * d, d, 1.0);
  return p.head<3>();
}

}  // namespace

TEST_CASE("frustum template uses bin centers at pixel centers") {
  const auto t = build_frustum_template(1, 1, 4.0, DepthBins{1.0, 3.0, 2});
  REQUIRE(t.size() == 2);
  CHECK(t.uvd[0] == Eigen::Vector3d(2.0, 2.0, 1.5));
  CHECK(t.uvd[1] == Eigen::Vector3d(2.0, 2.0, 2.5));
  CHECK(build_frustum_template(2, 3, 1.0, DepthBins{1.0, 5.0, 4}).size() == 24);
}

TEST_CASE("bin centers increase strictly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double lo = u(rng);
    DepthBins b{lo, lo + u(rng), 1 + static_cast<int>(rng() % 64)};
    for (int k = 0; k < b.count; ++k) {
      const double brute = b.d_min + (b.d_max - b.d_min) * (2 * k + 1) / (2.0 * b.count);
      CHECK(b.center(k) == doctest::Approx(brute).epsilon(1e-12));
      if (k > 0) CHECK(b.center(k) > b.center(k - 1));
    }
  }
}

TEST_CASE("invalid bins and grids are rejected") {
  CHECK_THROWS_AS(build_frustum_template(1, 1, 1.0, DepthBins{2.0, 1.0, 4}), ConfigError);
  CHECK_THROWS_AS(build_frustum_template(1, 1, 1.0, DepthBins{1.0, 2.0, 0}), ConfigError);
  CHECK_THROWS_AS((BevGrid{0.0, 1.0, 0.0, 1.0, 0.3}.validate()), ConfigError);
}

TEST_CASE("unprojection of simple cameras") {
  CameraView v;
  FrustumTemplate t;
  t.depth = t.height = t.width = 1;
  t.uvd = {Eigen::Vector3d(0.0, 0.0, 5.0)};
  CHECK(unproject_to_ego(t, v).points[0] == Eigen::Vector3d(0.0, 0.0, 5.0));
  v.translation = Eigen::Vector3d(1.0, 0.0, 0.0);
  CHECK(unproject_to_ego(t, v).points[0] == Eigen::Vector3d(1.0, 0.0, 5.0));
}

TEST_CASE("unprojection matches the homogeneous matrix chain") {
  std::mt19937_64 rng(11);
  const auto tmpl = build_frustum_template(4, 6, 8.0, DepthBins{1.0, 20.0, 7});
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = testing::random_camera(rng);
    const auto cloud = unproject_to_ego(tmpl, v);
    for (int64_t p = 0; p < tmpl.size(); ++p) {
      const auto& q = tmpl.uvd[static_cast<size_t>(p)];
      const Eigen::Vector3d want = homogeneous_oracle(v, q.x(), q.y(), q.z());
      CHECK((cloud.points[static_cast<size_t>(p)] - want).norm() <= 1e-9 * (1.0 + want.norm()));
    }
  }
}

TEST_CASE("singular preprocessing is a geometry error") {
  CameraView v;
  v.preproc = Eigen::Matrix3d::Zero();
  const auto tmpl = build_frustum_template(1, 1, 1.0, DepthBins{1.0, 2.0, 1});
  CHECK_THROWS_AS(unproject_to_ego(tmpl, v), GeometryError);
}

TEST_CASE("rasterization") {
  BevGrid g{-50.0, 50.0, -50.0, 50.0, 0.5};
  FrustumCloud c;
  c.points = {{0.0, 0.0, 3.0}, {-50.0001, 0.0, 0.0}, {49.9, -50.0, 0.0}, {50.0, 0.0, 0.0}};
  const auto a = rasterize_to_cells(c, g);
  CHECK(a.cells[0] == g.flat({100, 100}));
  CHECK_FALSE(a.valid(1));
  CHECK(a.cells[2] == g.flat({199, 0}));
  CHECK_FALSE(a.valid(3));
}

TEST_CASE("rasterization agrees with per-point floor division") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  BevGrid g{-25.0, 25.0, -20.0, 20.0, 0.5};
  FrustumCloud c;
  for (int i = 0; i < 10000; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  const auto a = rasterize_to_cells(c, g);
  for (size_t i = 0; i < c.points.size(); ++i) {
    const auto& p = c.points[i];
    const double fr = std::floor((p.x() - g.x_min) / g.resolution);
    const double fc = std::floor((p.y() - g.y_min) / g.resolution);
    const bool inside = fr >= 0 && fr < g.rows() && fc >= 0 && fc < g.cols();
    CHECK(a.cells[i] == (inside ? static_cast<int>(fr) * g.cols() + static_cast<int>(fc) : -1));
  }
}

TEST_CASE("forward camera footprint is a forward wedge") {
  const auto v = make_camera(16.0, 16.0, 16.0, 8.0, 0.0, 0.0, Eigen::Vector3d::Zero());
  BevGrid g{-20.0, 20.0, -20.0, 20.0, 1.0};
  DepthBins bins{1.0, 15.0, 14};
  const auto fp = frustum_footprint(v, 8, 16, 2.0, bins, g);
  CHECK(fp[static_cast<size_t>(g.flat(*g.cell_of(8.0, 0.2)))] == 1);
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c)
      if (g.cell_center(r, c).x() + 0.5 * g.resolution < 0.0) CHECK(fp[static_cast<size_t>(g.flat({r, c}))] == 0);

  // Single-slice bins: the footprint is the image of one depth.
  const auto one = frustum_footprint(v, 4, 8, 4.0, DepthBins{7.0, 7.5, 1}, g);
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c)
      if (one[static_cast<size_t>(g.flat({r, c}))]) CHECK(g.cell_center(r, c).x() == doctest::Approx(7.5));
}

TEST_CASE("footprint contains every rasterized cell") {
  std::mt19937_64 rng(21);
  BevGrid g{-10.0, 10.0, -10.0, 10.0, 0.5};
  DepthBins bins{1.0, 9.0, 8};
  for (int trial = 0; trial < 20; ++trial) {
    const auto v = testing::random_camera(rng);
    const auto fp = frustum_footprint(v, 5, 7, 8.0, bins, g);
    const auto cells = rasterize_to_cells(unproject_to_ego(build_frustum_template(5, 7, 8.0, bins), v), g);
    for (int32_t c : cells.cells)
      if (c >= 0) CHECK(fp[static_cast<size_t>(c)] == 1);
  }
}

TEST_CASE("unproject then project returns the pixel") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 100.0), d(0.5, 60.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v = testing::random_camera(rng);
    const Eigen::Vector3d uvd(u(rng), u(rng), d(rng));
    const Eigen::Vector3d back = v.project(v.unproject(uvd.x(), uvd.y(), uvd.z()));
    CHECK((back - uvd).norm() / uvd.norm() <= 1e-6);
  }
}
