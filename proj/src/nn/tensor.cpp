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

#include "bevda/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bevda/errors.hpp"

namespace bevda::nn {

int64_t shape_size(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    require(d >= 0, "negative tensor dimension");
    n *= d;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_size(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  require(static_cast<int64_t>(data_.size()) == shape_size(shape_),
          "tensor value count does not match shape " + shape_string(shape_));
}

int64_t Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  require(axis >= 0 && axis < rank(), "tensor axis out of range");
  return shape_[static_cast<size_t>(axis)];
}

int64_t Tensor::offset(std::initializer_list<int64_t> index) const {
  require(static_cast<int>(index.size()) == rank(), "index rank mismatch");
  int64_t off = 0;
  size_t a = 0;
  for (int64_t i : index) {
    require(i >= 0 && i < shape_[a], "tensor index out of range");
    off = off * shape_[a] + i;
    ++a;
  }
  return off;
}

double& Tensor::at(std::initializer_list<int64_t> index) { return data_[static_cast<size_t>(offset(index))]; }

double Tensor::at(std::initializer_list<int64_t> index) const {
  return data_[static_cast<size_t>(offset(index))];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const {
  require(shape_size(shape) == size(), "reshape must preserve element count");
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace bevda::nn
