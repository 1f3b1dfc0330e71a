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
#include <string>
#include <vector>

#include "bevda/nn/ops.hpp"
#include "bevda/nn/params.hpp"

namespace bevda::nn {

struct ModelDims {
  int image_channels = 3;
  int stem = 6;        // per-pixel linear stage
  int mid = 8;         // first 3x3 stage (stride 2)
  int encoder = 16;    // second 3x3 stage (stride 2)
  int features = 8;    // C, perspective feature channels
  int depth_bins = 24; // D
  int classes = 5;     // K
  int bev_hidden = 8;

  void validate() const;
};

/// Parameter tensors of the encoder, perspective head, BEV decoder and
/// auxiliary head, initialized uniform(+-1/sqrt(fan_in)) from `seed`.
ParamSet init_model(const ModelDims& dims, uint64_t seed);

/// A ParamSet bound to graph leaves for one forward pass.
class BoundModel {
 public:
  BoundModel(const ParamSet& params, bool requires_grad);
  BoundModel(const ParamSet& params, std::vector<Var> leaves);

  const Var& operator[](const std::string& name) const;
  const std::vector<Var>& leaves() const { return leaves_; }

 private:
  const ParamSet* params_;
  std::vector<Var> leaves_;
};

struct EncoderOutput {
  Var features;      // [N,C,h,w]
  Var depth_logits;  // [N,D,h,w]
};

/// images [N,3,H,W] -> stride-4 features and depth logits.
EncoderOutput encode(const BoundModel& m, const Var& images);

/// Perspective segmentation logits [N,K,h,w].
Var pv_head(const BoundModel& m, const Var& features);

/// BEV segmentation logits [1,K,rows,cols].
Var bev_decoder(const BoundModel& m, const Var& bev);

/// Auxiliary prediction of the dynamic labels, [1,K,rows,cols].
Var aux_head(const BoundModel& m, const Var& bev);

}  // namespace bevda::nn
