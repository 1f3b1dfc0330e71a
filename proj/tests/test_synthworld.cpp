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
#include <queue>

#include "bevda/errors.hpp"
#include "bevda/synthworld.hpp"
#include "doctest.h"

using namespace bevda;
using namespace bevda::synth;
using nn::Tensor;

namespace {

SceneSpec base_spec(uint64_t seed) {
  SceneSpec s;
  s.seed = seed;
  s.grid = geometry::BevGrid{-16.0, 16.0, -16.0, 16.0, 0.25};
  RigSpec rig;
  rig.views = 4;
  s.rig = make_rig(rig);
  return s;
}

int components(const Tensor& bev, int channel, int rows, int cols) {
  std::vector<uint8_t> seen(static_cast<size_t>(rows * cols), 0);
  auto on = [&](int r, int c) { return bev[(channel * rows + r) * cols + c] > 0.5; };
  int count = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!on(r, c) || seen[static_cast<size_t>(r * cols + c)]) continue;
      ++count;
      std::queue<std::pair<int, int>> q;
      q.push({r, c});
      seen[static_cast<size_t>(r * cols + c)] = 1;
      while (!q.empty()) {
        auto [y, x] = q.front();
        q.pop();
        const int dy[] = {1, -1, 0, 0}, dx[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int ny = y + dy[k], nx = x + dx[k];
          if (ny < 0 || nx < 0 || ny >= rows || nx >= cols || !on(ny, nx) || seen[static_cast<size_t>(ny * cols + nx)])
            continue;
          seen[static_cast<size_t>(ny * cols + nx)] = 1;
          q.push({ny, nx});
        }
      }
    }
  return count;
}

}  // namespace

TEST_CASE("scenes are deterministic per seed") {
  CHECK(gen_scene(base_spec(5)) == gen_scene(base_spec(5)));
  CHECK_FALSE(gen_scene(base_spec(5)) == gen_scene(base_spec(6)));
}

TEST_CASE("zero vehicles") {
  auto spec = base_spec(2);
  spec.vehicle_count = 0;
  const auto scene = gen_scene(spec);
  CHECK(scene.vehicles.empty());
  const auto r = render_scene(scene, DomainStyle::source(), Augment::kNone, 1, 24, 40);
  for (const auto& m : r.vehicle_masks)
    for (uint8_t x : m) CHECK(x == 0);
}

TEST_CASE("divider count equals connected divider components") {
  for (int n = 0; n <= 3; ++n)
    for (uint64_t seed = 0; seed < 5; ++seed) {
      auto spec = base_spec(seed * 7 + n);
      spec.divider_count = n;
      const auto scene = gen_scene(spec);
      CHECK(static_cast<int>(scene.divider_y.size()) == n);
      const auto bev = bev_ground_truth(scene, spec.grid);
      CHECK(components(bev, 2, spec.grid.rows(), spec.grid.cols()) == n);
    }
}

TEST_CASE("principal ray depth is height over sine of the depression angle") {
  auto spec = base_spec(3);
  spec.vehicle_count = 0;
  const auto scene = gen_scene(spec);
  for (double pitch : {8.0, 15.0, 30.0}) {
    const double h = 1.7;
    // Odd dims put a pixel center on the principal point.
    const auto view = geometry::make_camera(40.0, 40.0, 32.5, 16.5, 0.4, pitch * M_PI / 180.0, Eigen::Vector3d(0, 0, h));
    const auto rv = render_view(scene, view, DomainStyle::source(), Augment::kNone, 1, 33, 65);
    const double want = h / std::sin(pitch * M_PI / 180.0);
    CHECK(std::abs(rv.depth[16 * 65 + 32] - want) <= 1e-6 * want);
  }
}

TEST_CASE("pixel labels match the ground class at the ray hit") {
  auto spec = base_spec(4);
  spec.vehicle_count = 0;
  spec.cross_road = 1;
  const auto scene = gen_scene(spec);
  RigSpec rs;
  rs.views = 3;
  rs.image_height = 24;
  rs.image_width = 40;
  const auto rig = make_rig(rs);
  for (const auto& view : rig) {
    const auto rv = render_view(scene, view, DomainStyle::target(), Augment::kNone, 2, 24, 40);
    int checked = 0;
    for (int r = 0; r < 24; ++r)
      for (int c = 0; c < 40; ++c) {
        const double d = rv.depth[r * 40 + c];
        if (d <= 0.0) {
          CHECK(rv.labels.at(r, c) == kBackground);
          continue;
        }
        const Eigen::Vector3d p = view.unproject(c + 0.5, r + 0.5, d);
        CHECK(std::abs(p.z()) < 1e-9);
        CHECK(rv.labels.at(r, c) == scene.ground_class(p.x(), p.y()));
        ++checked;
      }
    CHECK(checked > 0);
  }
}

TEST_CASE("rendering is deterministic and rejects buried cameras") {
  const auto scene = gen_scene(base_spec(9));
  const auto& view = scene.spec.rig[0];
  const auto a = render_view(scene, view, DomainStyle::source(), Augment::kNone, 4, 16, 24);
  const auto b = render_view(scene, view, DomainStyle::source(), Augment::kNone, 4, 16, 24);
  CHECK(a.image == b.image);
  CHECK(a.labels == b.labels);
  auto low = view;
  low.translation.z() = -0.5;
  CHECK_THROWS_AS(render_view(scene, low, DomainStyle::source(), Augment::kNone, 4, 16, 24), ConfigError);
  const auto strong = render_view(scene, view, DomainStyle::target(), Augment::kStrong, 4, 16, 24);
  for (double x : strong.image.values()) CHECK((x >= 0.0 && x <= 1.0));
}

TEST_CASE("BEV ground truth of hand-built scenes") {
  Scene s;
  s.spec = base_spec(1);
  s.spec.grid = geometry::BevGrid{-10.0, 10.0, -10.0, 10.0, 0.5};
  s.main_width = 100.0;
  const auto& g = s.spec.grid;
  Tensor empty = bev_ground_truth(s, g);
  const int64_t cells = g.cell_count();
  for (int64_t i = 0; i < cells; ++i) CHECK(empty[i] == 1.0);
  for (int64_t i = cells; i < empty.size(); ++i) CHECK(empty[i] == 0.0);

  s.vehicles.push_back(VehicleBox{2.0, 6.0, -1.0, 1.0, 1.2});
  const Tensor with = bev_ground_truth(s, g);
  double vehicle = 0.0;
  for (int64_t i = 4 * cells; i < 5 * cells; ++i) vehicle += with[i];
  CHECK(vehicle == 32.0);
  for (int64_t i = 0; i < cells; ++i) CHECK(with[i] + with[4 * cells + i] == 1.0);
}

TEST_CASE("boundary cells catch thin slivers") {
  Scene s;
  s.spec = base_spec(1);
  s.spec.grid = geometry::BevGrid{-4.0, 4.0, -4.0, 4.0, 1.0};
  s.main_width = 100.0;
  const auto& g = s.spec.grid;
  // Divider paint covers y in [-0.03, 0.57): 3 cm of the column left of y = 0.
  s.divider_y = {0.27};
  s.vehicles.push_back(VehicleBox{1.0, 3.0, 2.0, 3.0, 1.2});
  const auto mask = boundary_cells(s, g);
  for (int r = 0; r < g.rows(); ++r) {
    CHECK(mask[static_cast<size_t>(r * g.cols() + 3)] == 1);
    CHECK(mask[static_cast<size_t>(r * g.cols() + 4)] == 1);
    CHECK(mask[static_cast<size_t>(r * g.cols() + 2)] == 0);
    // Vehicle edges on cell edges leave its cells pure.
    CHECK(mask[static_cast<size_t>(r * g.cols() + 6)] == 0);
  }
  const auto grown = boundary_cells(s, g, 0.1);
  CHECK(grown[static_cast<size_t>(4 * g.cols() + 2)] == 0);
  CHECK(boundary_cells(s, g, 1.0)[static_cast<size_t>(4 * g.cols() + 2)] == 1);
  CHECK(grown[static_cast<size_t>(4 * g.cols() + 6)] == 1);  // vehicle edge at y = 2
  CHECK(grown[static_cast<size_t>(4 * g.cols() + 0)] == 0);
}

TEST_CASE("pseudo-label corruption") {
  LabelMap m(60, 80, 0);
  for (int r = 30; r < 60; ++r)
    for (int c = 0; c < 80; ++c) m.at(r, c) = static_cast<int8_t>((c / 10) % 5);
  CHECK(corrupt_pseudo_labels(m, 0.0, 3) == m);
  for (double noise : {0.02, 0.1, 0.3}) {
    const auto out = corrupt_pseudo_labels(m, noise, 7);
    CHECK(out == corrupt_pseudo_labels(m, noise, 7));
    int64_t changed = 0;
    for (size_t i = 0; i < m.size(); ++i) {
      changed += out.data[i] != m.data[i];
      CHECK((out.data[i] >= kBackground && out.data[i] < kNumClasses));
    }
    const double rate = double(changed) / double(m.size());
    CHECK(rate <= noise + 1e-12);
    CHECK(rate >= 0.9 * noise);
  }
  CHECK_THROWS_AS(corrupt_pseudo_labels(m, 1.5, 1), ContractViolation);
}

TEST_CASE("scene spec validation") {
  auto spec = base_spec(1);
  spec.divider_count = 4;
  CHECK_THROWS_AS(gen_scene(spec), ConfigError);
  spec = base_spec(1);
  spec.rig[0].translation.z() = 0.0;
  CHECK_THROWS_AS(gen_scene(spec), ConfigError);
}
