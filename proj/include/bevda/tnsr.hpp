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

#include "bevda/nn/params.hpp"
#include "bevda/nn/tensor.hpp"

namespace bevda::io {

enum class Dtype : uint8_t { kF32 = 1, kF64 = 2, kU8 = 3 };

inline constexpr uint32_t kTnsrVersion = 1;

size_t dtype_size(Dtype dtype);

/// One array in its on-disk representation; `payload` holds little-endian
/// row-major elements.
struct TnsrArray {
  Dtype dtype = Dtype::kF64;
  std::vector<uint64_t> dims;
  std::vector<uint8_t> payload;

  uint64_t element_count() const;
  bool operator==(const TnsrArray&) const = default;

  static TnsrArray from_f64(const nn::Tensor& t);
  static TnsrArray from_f32(const nn::Tensor& t);
  static TnsrArray from_u8(const std::vector<uint64_t>& dims, const std::vector<uint8_t>& values);
  /// Widens any dtype to a double tensor.
  nn::Tensor to_tensor() const;
};

std::vector<uint8_t> encode_tnsr(const TnsrArray& array);
/// Throws FormatError on a bad magic, unknown version or dtype, or a payload
/// whose length disagrees with the dims.
TnsrArray decode_tnsr(const std::vector<uint8_t>& bytes);

void write_tnsr(const std::string& path, const TnsrArray& array);
TnsrArray read_tnsr(const std::string& path);

void write_tensor(const std::string& path, const nn::Tensor& t);
nn::Tensor read_tensor(const std::string& path);

/// Checkpoint directory: one f64 TNSR file per parameter plus `manifest.txt`
/// listing `name file` pairs in order. `meta` lines are stored verbatim as
/// `# key = value` comments.
void save_checkpoint(const std::string& dir, const nn::ParamSet& params, const std::string& meta = {});
nn::ParamSet load_checkpoint(const std::string& dir);
/// The `key = value` metadata written with the checkpoint.
std::string checkpoint_meta(const std::string& dir);

}  // namespace bevda::io
