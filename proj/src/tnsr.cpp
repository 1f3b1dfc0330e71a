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

#include "bevda/tnsr.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bevda/errors.hpp"

namespace bevda::io {

static_assert(std::endian::native == std::endian::little, "TNSR I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::vector<uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T take(const std::vector<uint8_t>& in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("tnsr: truncated header");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::vector<uint64_t> dims_of(const nn::Tensor& t) { return {t.shape().begin(), t.shape().end()}; }

}  // namespace

size_t dtype_size(Dtype dtype) {
  switch (dtype) {
    case Dtype::kF32: return 4;
    case Dtype::kF64: return 8;
    case Dtype::kU8: return 1;
  }
  throw FormatError("tnsr: unknown dtype");
}

uint64_t TnsrArray::element_count() const {
  uint64_t n = 1;
  for (uint64_t d : dims) n *= d;
  return n;
}

TnsrArray TnsrArray::from_f64(const nn::Tensor& t) {
  TnsrArray a{Dtype::kF64, dims_of(t), {}};
  a.payload.resize(static_cast<size_t>(t.size()) * 8);
  if (t.size() > 0) std::memcpy(a.payload.data(), t.data(), a.payload.size());
  return a;
}

TnsrArray TnsrArray::from_f32(const nn::Tensor& t) {
  TnsrArray a{Dtype::kF32, dims_of(t), {}};
  a.payload.reserve(static_cast<size_t>(t.size()) * 4);
  for (double v : t.values()) put(a.payload, static_cast<float>(v));
  return a;
}

TnsrArray TnsrArray::from_u8(const std::vector<uint64_t>& dims, const std::vector<uint8_t>& values) {
  TnsrArray a{Dtype::kU8, dims, values};
  require(a.element_count() == values.size(), "tnsr: u8 payload does not match dims");
  return a;
}

nn::Tensor TnsrArray::to_tensor() const {
  nn::Shape shape(dims.begin(), dims.end());
  nn::Tensor t(shape);
  const auto n = static_cast<size_t>(element_count());
  for (size_t i = 0; i < n; ++i) {
    switch (dtype) {
      case Dtype::kF64: {
        double v;
        std::memcpy(&v, payload.data() + 8 * i, 8);
        t[static_cast<int64_t>(i)] = v;
        break;
      }
      case Dtype::kF32: {
        float v;
        std::memcpy(&v, payload.data() + 4 * i, 4);
        t[static_cast<int64_t>(i)] = v;
        break;
      }
      case Dtype::kU8:
        t[static_cast<int64_t>(i)] = payload[i];
        break;
    }
  }
  return t;
}

std::vector<uint8_t> encode_tnsr(const TnsrArray& array) {
  require(array.dims.size() <= 255, "tnsr: too many dims");
  require(array.payload.size() == array.element_count() * dtype_size(array.dtype),
          "tnsr: payload length does not match dims");
  std::vector<uint8_t> out = {'T', 'N', 'S', 'R'};
  put<uint32_t>(out, kTnsrVersion);
  put<uint8_t>(out, static_cast<uint8_t>(array.dtype));
  put<uint8_t>(out, static_cast<uint8_t>(array.dims.size()));
  for (uint64_t d : array.dims) put<uint64_t>(out, d);
  out.insert(out.end(), array.payload.begin(), array.payload.end());
  return out;
}

TnsrArray decode_tnsr(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "TNSR", 4) != 0) throw FormatError("tnsr: bad magic");
  size_t pos = 4;
  const auto version = take<uint32_t>(bytes, pos);
  if (version != kTnsrVersion) throw FormatError("tnsr: unsupported version " + std::to_string(version));
  const auto code = take<uint8_t>(bytes, pos);
  if (code < 1 || code > 3) throw FormatError("tnsr: unknown dtype code " + std::to_string(code));
  TnsrArray a;
  a.dtype = static_cast<Dtype>(code);
  const auto ndim = take<uint8_t>(bytes, pos);
  for (int i = 0; i < ndim; ++i) a.dims.push_back(take<uint64_t>(bytes, pos));
  const uint64_t expected = a.element_count() * dtype_size(a.dtype);
  if (bytes.size() - pos != expected) throw FormatError("tnsr: payload length does not match dims");
  a.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return a;
}

void write_tnsr(const std::string& path, const TnsrArray& array) {
  const auto bytes = encode_tnsr(array);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("tnsr: cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("tnsr: write failed for " + path);
}

TnsrArray read_tnsr(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("tnsr: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tnsr(bytes);
}

void write_tensor(const std::string& path, const nn::Tensor& t) { write_tnsr(path, TnsrArray::from_f64(t)); }

nn::Tensor read_tensor(const std::string& path) { return read_tnsr(path).to_tensor(); }

void save_checkpoint(const std::string& dir, const nn::ParamSet& params, const std::string& meta) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir + "/manifest.txt");
  if (!manifest) throw FormatError("checkpoint: cannot write manifest in " + dir);
  std::istringstream meta_in(meta);
  for (std::string line; std::getline(meta_in, line);)
    if (!line.empty()) manifest << "# " << line << "\n";
  for (const auto& e : params.entries()) {
    const std::string file = e.name + ".tnsr";
    write_tensor(dir + "/" + file, e.value);
    manifest << e.name << " " << file << "\n";
  }
}

nn::ParamSet load_checkpoint(const std::string& dir) {
  std::ifstream manifest(dir + "/manifest.txt");
  if (!manifest) throw FormatError("checkpoint: missing manifest in " + dir);
  nn::ParamSet params;
  for (std::string line; std::getline(manifest, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string name, file;
    if (!(fields >> name >> file)) throw FormatError("checkpoint: malformed manifest line '" + line + "'");
    const auto array = read_tnsr(dir + "/" + file);
    if (array.dtype != Dtype::kF64) throw FormatError("checkpoint: parameter " + name + " is not f64");
    params.add(name, array.to_tensor());
  }
  return params;
}

std::string checkpoint_meta(const std::string& dir) {
  std::ifstream manifest(dir + "/manifest.txt");
  if (!manifest) throw FormatError("checkpoint: missing manifest in " + dir);
  std::string out;
  for (std::string line; std::getline(manifest, line);)
    if (line.rfind("# ", 0) == 0) out += line.substr(2) + "\n";
  return out;
}

}  // namespace bevda::io
