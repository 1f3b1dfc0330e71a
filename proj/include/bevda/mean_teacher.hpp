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

#include <cstdint>

#include "bevda/nn/params.hpp"
#include "bevda/viewtransform.hpp"

namespace bevda::mt {

/// Student and EMA teacher parameters plus the schedule position.
struct TrainState {
  nn::ParamSet student;
  nn::ParamSet teacher;
  bool teacher_initialized = false;
  int64_t step = 0;
  int64_t total_steps = 1;
  double alpha = 0.99;
  double beta_max = 0.1;

  void validate() const;
};

/// Fresh state whose teacher is a copy of `student`.
TrainState init_train_state(nn::ParamSet student, int64_t total_steps, double alpha, double beta_max);

/// teacher <- alpha*teacher + (1-alpha)*student, elementwise.
void ema_update(nn::ParamSet& teacher, const nn::ParamSet& student, double alpha);
void ema_update(TrainState& state);

/// beta_max * exp(-5 * (1 - min(step / (total/2), 1))^2), exactly 0 at step 0.
double rampup_beta(int64_t step, int64_t total_steps, double beta_max);

/// Teacher BEV scores on weakly augmented target views, [1,K,rows,cols] in [0,1].
nn::Tensor teacher_pseudo_labels(const TrainState& state, const nn::Tensor& weak_images, const vt::Projection& proj);

}  // namespace bevda::mt
