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

#include "bevda/bev_network.hpp"

#include "bevda/errors.hpp"

namespace bevda {

BevPass forward_bev(const nn::BoundModel& model, const nn::Var& images, const vt::Projection& proj) {
  BevPass pass;
  pass.enc = nn::encode(model, images);
  const auto& f = pass.enc.features->value;
  require(f.dim(0) == proj.views && f.dim(2) == proj.height && f.dim(3) == proj.width &&
              pass.enc.depth_logits->value.dim(1) == proj.depth,
          "forward_bev: encoder output does not match the projection");
  pass.dist = vt::depth_distribution(pass.enc.depth_logits);
  pass.bev = vt::splat_pool(vt::lift(pass.enc.features, pass.dist), proj.plan, proj.grid);
  pass.logits = nn::bev_decoder(model, pass.bev);
  return pass;
}

nn::Tensor predict_bev(const nn::ParamSet& params, const nn::Tensor& images, const vt::Projection& proj) {
  nn::NoGradGuard guard;
  const nn::BoundModel model(params, false);
  return nn::sigmoid(forward_bev(model, nn::constant(images), proj).logits)->value;
}

}  // namespace bevda
