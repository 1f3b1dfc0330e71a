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

#include "bevda/bev_network.hpp"
#include "bevda/errors.hpp"
#include "bevda/losses.hpp"
#include "bevda/mean_teacher.hpp"
#include "bevda/synthworld.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bevda;
using namespace bevda::mt;
using nn::ParamSet;
using nn::Tensor;

namespace {

struct Micro {
  nn::ModelDims dims;
  vt::Projection proj;
  Tensor images;
};

Micro micro() {
  Micro m;
  m.dims = {3, 4, 4, 6, 4, 6, 5, 4};
  synth::RigSpec spec;
  spec.views = 2;
  spec.image_height = 16;
  spec.image_width = 28;
  const auto rig = synth::make_rig(spec);
  const auto tmpl = geometry::build_frustum_template(4, 7, 4.0, geometry::DepthBins{1.0, 13.0, 6});
  m.proj = vt::make_projection(tmpl, rig, geometry::BevGrid{-8.0, 8.0, -8.0, 8.0, 2.0});
  std::mt19937_64 rng(5);
  m.images = testing::random_tensor({2, 3, 16, 28}, rng, 0.0, 1.0);
  return m;
}

double distance(const ParamSet& a, const ParamSet& b) {
  const auto x = a.flatten(), y = b.flatten();
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("ema single step and fixed point") {
  ParamSet t, s;
  t.add("w", Tensor({3}, 0.0));
  s.add("w", Tensor({3}, 1.0));
  ema_update(t, s, 0.99);
  for (double x : t.get("w").values()) CHECK(x == doctest::Approx(0.01).epsilon(1e-14));
  ParamSet u = s;
  ema_update(u, s, 0.99);
  CHECK(u == s);
}

TEST_CASE("ema distance decays geometrically") {
  std::mt19937_64 rng(2);
  ParamSet s, t;
  s.add("a", testing::random_tensor({40}, rng));
  t.add("a", testing::random_tensor({40}, rng));
  const double d0 = distance(t, s);
  for (int k = 1; k <= 300; ++k) {
    ema_update(t, s, 0.99);
    if (k % 50 == 0) CHECK(std::abs(distance(t, s) - std::pow(0.99, k) * d0) <= 1e-12 * std::pow(0.99, k) * d0);
  }
}

TEST_CASE("rampup schedule") {
  CHECK(rampup_beta(0, 2000, 0.1) == 0.0);
  CHECK(rampup_beta(1000, 2000, 0.1) == 0.1);
  CHECK(rampup_beta(1999, 2000, 0.1) == 0.1);
  CHECK(rampup_beta(500, 2000, 0.1) == doctest::Approx(0.1 * std::exp(-1.25)).epsilon(1e-14));
  CHECK(rampup_beta(500, 2000, 0.1) == doctest::Approx(0.02865).epsilon(1e-3));
  double prev = 0.0;
  for (int64_t s = 0; s <= 2000; ++s) {
    const double b = rampup_beta(s, 2000, 0.1);
    CHECK(b >= prev);
    CHECK(b <= 0.1);
    prev = b;
  }
  CHECK_THROWS(rampup_beta(1, 0, 0.1));
}

TEST_CASE("teacher pseudo-labels") {
  const auto m = micro();
  auto state = init_train_state(nn::init_model(m.dims, 3), 10, 0.99, 0.1);
  CHECK(teacher_pseudo_labels(state, m.images, m.proj) == predict_bev(state.student, m.images, m.proj));

  for (auto name : {"dec.conv2.w", "dec.conv2.b"}) state.teacher.get(name).fill(0.0);
  const Tensor flat = teacher_pseudo_labels(state, m.images, m.proj);
  for (double x : flat.values()) CHECK(x == 0.5);

  state.teacher_initialized = false;
  CHECK_THROWS_AS(teacher_pseudo_labels(state, m.images, m.proj), StateError);
  CHECK_THROWS_AS(ema_update(state), StateError);
}

TEST_CASE("pseudo-labels carry no gradient to the teacher") {
  const auto m = micro();
  auto state = init_train_state(nn::init_model(m.dims, 4), 10, 0.99, 0.1);
  state.student = nn::init_model(m.dims, 5);
  const auto teacher_leaves = nn::make_leaves(state.teacher, true);
  const Tensor pl = teacher_pseudo_labels(state, m.images, m.proj);
  nn::BoundModel student(state.student, true);
  const auto pass = forward_bev(student, nn::constant(m.images), m.proj);
  nn::backward(loss::l2_map_loss(nn::sigmoid(pass.logits), pl));
  for (const auto& g : nn::collect_grads(teacher_leaves))
    for (double x : g.values()) CHECK(x == 0.0);
  double student_norm = 0.0;
  for (const auto& g : nn::collect_grads(student.leaves()))
    for (double x : g.values()) student_norm += x * x;
  CHECK(student_norm > 0.0);
}
