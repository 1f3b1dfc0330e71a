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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace bevda::nn {

using Shape = std::vector<int64_t>;

int64_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int axis) const;
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  /// Multi-index access; index count must equal rank.
  double& at(std::initializer_list<int64_t> index);
  double at(std::initializer_list<int64_t> index) const;

  void fill(double value);
  Tensor reshaped(Shape shape) const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  bool operator==(const Tensor& other) const = default;

 private:
  int64_t offset(std::initializer_list<int64_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

}  // namespace bevda::nn
