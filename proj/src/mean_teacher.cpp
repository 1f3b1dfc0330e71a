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

#include "bevda/mean_teacher.hpp"

#include <cmath>

#include "bevda/bev_network.hpp"
#include "bevda/errors.hpp"

namespace bevda::mt {

void TrainState::validate() const {
  require(student.same_layout(teacher), "train state: student and teacher layouts differ");
  require(total_steps > 0, "train state: total_steps must be positive");
  require(step >= 0 && step <= total_steps, "train state: step outside [0, total_steps]");
  require(alpha > 0.0 && alpha < 1.0, "train state: alpha must lie in (0, 1)");
}

TrainState init_train_state(nn::ParamSet student, int64_t total_steps, double alpha, double beta_max) {
  TrainState s;
  s.teacher = student;
  s.student = std::move(student);
  s.teacher_initialized = true;
  s.total_steps = total_steps;
  s.alpha = alpha;
  s.beta_max = beta_max;
  s.validate();
  return s;
}

void ema_update(nn::ParamSet& teacher, const nn::ParamSet& student, double alpha) {
  require(teacher.same_layout(student), "ema_update: parameter layouts differ");
  require(alpha > 0.0 && alpha < 1.0, "ema_update: alpha must lie in (0, 1)");
  auto& te = teacher.entries();
  const auto& se = student.entries();
  for (size_t i = 0; i < te.size(); ++i) {
    auto t = te[i].value.values();
    auto s = se[i].value.values();
    for (size_t j = 0; j < t.size(); ++j) t[j] = alpha * t[j] + (1.0 - alpha) * s[j];
  }
}

void ema_update(TrainState& state) {
  if (!state.teacher_initialized) throw StateError("ema_update: teacher is not initialized");
  ema_update(state.teacher, state.student, state.alpha);
}

double rampup_beta(int64_t step, int64_t total_steps, double beta_max) {
  require(total_steps > 0, "rampup_beta: total_steps must be positive");
  if (step <= 0) return 0.0;
  const double t = std::min(static_cast<double>(step) / (0.5 * static_cast<double>(total_steps)), 1.0);
  const double gap = 1.0 - t;
  return beta_max * std::exp(-5.0 * gap * gap);
}

nn::Tensor teacher_pseudo_labels(const TrainState& state, const nn::Tensor& weak_images, const vt::Projection& proj) {
  if (!state.teacher_initialized || state.teacher.count() == 0)
    throw StateError("teacher_pseudo_labels: teacher is not initialized");
  return predict_bev(state.teacher, weak_images, proj);
}

}  // namespace bevda::mt
