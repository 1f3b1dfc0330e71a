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

#include "bevda/nn/autodiff.hpp"

namespace bevda::fxda {

enum class Mode { kAuto, kDropout, kChannelExchange, kPositionExchange };

Mode parse_mode(const std::string& name);  // auto|dropout|channel|position
std::string mode_name(Mode mode);

struct FxdaConfig {
  Mode mode = Mode::kAuto;
  double rate = 0.5;
  uint64_t seed = 0;

  void validate() const;
};

/// Concrete mode for a config; kAuto draws one of the three uniformly from the seed.
Mode resolve_mode(const FxdaConfig& cfg);

/// Augments BEV features [N,C,H,W] built from weakly augmented views.
///  - dropout: channels dropped with probability rate, survivors scaled by 1/(1-rate)
///  - channel exchange: each channel taken from `strong` with probability rate
///  - position exchange: each cell's full feature vector taken from `strong`
///    with probability rate
/// Exchanged elements are copied, so every output element equals one input element.
nn::Var fxda_apply(const nn::Var& weak, const nn::Var& strong, const FxdaConfig& cfg);
nn::Tensor fxda_apply(const nn::Tensor& weak, const nn::Tensor& strong, const FxdaConfig& cfg);

}  // namespace bevda::fxda
