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

#include "bevda/nn/model.hpp"
#include "bevda/viewtransform.hpp"

namespace bevda {

/// Intermediate values of one multi-view forward pass.
struct BevPass {
  nn::EncoderOutput enc;
  nn::Var dist;    // [N,D,h,w]
  nn::Var bev;     // [1,C,rows,cols]
  nn::Var logits;  // [1,K,rows,cols]
};

/// Encoder -> depth softmax -> lift/splat -> BEV decoder.
BevPass forward_bev(const nn::BoundModel& model, const nn::Var& images, const vt::Projection& proj);

/// Gradient-free BEV class scores sigmoid(logits), [1,K,rows,cols].
nn::Tensor predict_bev(const nn::ParamSet& params, const nn::Tensor& images, const vt::Projection& proj);

}  // namespace bevda
