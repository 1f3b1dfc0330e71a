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

#include "bevda/nn/model.hpp"

#include <random>

#include "bevda/errors.hpp"

namespace bevda::nn {

void ModelDims::validate() const {
  for (int v : {image_channels, stem, mid, encoder, features, depth_bins, classes, bev_hidden})
    if (v < 1) throw ConfigError("model dimensions must be positive");
}

ParamSet init_model(const ModelDims& d, uint64_t seed) {
  d.validate();
  std::mt19937_64 rng(seed);
  ParamSet p;
  auto dense = [&](const std::string& name, int out, int in) {
    p.add(name + ".w", init_uniform({out, in}, in, rng));
    p.add(name + ".b", init_uniform({out}, in, rng));
  };
  auto conv = [&](const std::string& name, int out, int in) {
    p.add(name + ".w", init_uniform({out, in, 3, 3}, in * 9, rng));
    p.add(name + ".b", init_uniform({out}, in * 9, rng));
  };
  dense("enc.stem", d.stem, d.image_channels);
  conv("enc.conv1", d.mid, d.stem);
  conv("enc.conv2", d.encoder, d.mid);
  dense("enc.feat", d.features, d.encoder);
  dense("enc.depth", d.depth_bins, d.encoder);
  dense("enc.row", d.depth_bins, 2);
  conv("pv.conv", d.features, d.features);
  dense("pv.out", d.classes, d.features);
  conv("dec.conv1", d.bev_hidden, d.features);
  conv("dec.conv2", d.classes, d.bev_hidden);
  dense("aux.out", d.classes, d.features);
  return p;
}

BoundModel::BoundModel(const ParamSet& params, bool requires_grad)
    : params_(&params), leaves_(make_leaves(params, requires_grad)) {}

BoundModel::BoundModel(const ParamSet& params, std::vector<Var> leaves)
    : params_(&params), leaves_(std::move(leaves)) {
  require(leaves_.size() == params.count(), "bound model: leaf count mismatch");
}

const Var& BoundModel::operator[](const std::string& name) const {
  const auto& e = params_->entries();
  for (size_t i = 0; i < e.size(); ++i)
    if (e[i].name == name) return leaves_[i];
  throw ContractViolation("bound model: unknown parameter " + name);
}

namespace {

// Row coordinate r in [-1, 1] and r^2 at every feature pixel. The convolutions
// are translation invariant, so depth logits get the image row from here.
Tensor row_coordinates(int64_t n, int64_t h, int64_t w) {
  Tensor t({n, 2, h, w});
  for (int64_t b = 0; b < n; ++b)
    for (int64_t i = 0; i < h; ++i) {
      double r = h > 1 ? 2.0 * i / double(h - 1) - 1.0 : 0.0;
      for (int64_t j = 0; j < w; ++j) {
        t[((b * 2 + 0) * h + i) * w + j] = r;
        t[((b * 2 + 1) * h + i) * w + j] = r * r;
      }
    }
  return t;
}

}  // namespace

EncoderOutput encode(const BoundModel& m, const Var& images) {
  Var x = relu(linear1x1(images, m["enc.stem.w"], m["enc.stem.b"]));
  x = relu(conv3x3(x, m["enc.conv1.w"], m["enc.conv1.b"], 2));
  x = relu(conv3x3(x, m["enc.conv2.w"], m["enc.conv2.b"], 2));
  const Shape& s = x->value.shape();
  Var rows = constant(row_coordinates(s[0], s[2], s[3]));
  Var depth = linear1x1(x, m["enc.depth.w"], m["enc.depth.b"]) + linear1x1(rows, m["enc.row.w"], m["enc.row.b"]);
  return {linear1x1(x, m["enc.feat.w"], m["enc.feat.b"]), depth};
}

Var pv_head(const BoundModel& m, const Var& features) {
  Var x = relu(conv3x3(features, m["pv.conv.w"], m["pv.conv.b"], 1));
  return linear1x1(x, m["pv.out.w"], m["pv.out.b"]);
}

Var bev_decoder(const BoundModel& m, const Var& bev) {
  Var x = relu(conv3x3(spatial_norm(bev), m["dec.conv1.w"], m["dec.conv1.b"], 1));
  return conv3x3(x, m["dec.conv2.w"], m["dec.conv2.b"], 1);
}

Var aux_head(const BoundModel& m, const Var& bev) {
  return linear1x1(channel_norm(relu(bev)), m["aux.out.w"], m["aux.out.b"]);
}

}  // namespace bevda::nn
