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

#include "bevda/nn/autodiff.hpp"

namespace bevda::nn {

// Elementwise arithmetic. Operands must share a shape.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);

Var operator+(const Var& a, const Var& b);
Var operator*(double factor, const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);

Var relu(const Var& x);
Var sigmoid(const Var& x);

/// Softmax along `axis`, stabilized by subtracting the per-slice max.
Var softmax(const Var& x, int axis);

/// Per-pixel linear map. x: [N,Cin,H,W], w: [Cout,Cin], b: [Cout].
Var linear1x1(const Var& x, const Var& w, const Var& b);

/// 3x3 convolution with zero padding 1. x: [N,Cin,H,W], w: [Cout,Cin,3,3],
/// b: [Cout]. Output spatial size is (H-1)/stride+1 by (W-1)/stride+1.
Var conv3x3(const Var& x, const Var& w, const Var& b, int stride);

/// Normalizes each pixel's channel vector to zero mean and unit variance.
/// x: [N,C,H,W].
Var channel_norm(const Var& x, double eps = 1e-5);

/// Normalizes each channel of each sample over its spatial positions.
/// x: [N,C,H,W].
Var spatial_norm(const Var& x, double eps = 1e-5);

Var reshape(const Var& x, Shape shape);

}  // namespace bevda::nn
