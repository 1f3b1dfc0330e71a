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

#include "bevda/feature_exchange.hpp"

#include <random>

#include "bevda/errors.hpp"

namespace bevda::fxda {

using nn::Node;
using nn::Tensor;
using nn::Var;

Mode parse_mode(const std::string& name) {
  if (name == "auto") return Mode::kAuto;
  if (name == "dropout") return Mode::kDropout;
  if (name == "channel") return Mode::kChannelExchange;
  if (name == "position") return Mode::kPositionExchange;
  throw ConfigError("fxda.mode must be auto|dropout|channel|position, got '" + name + "'");
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::kAuto: return "auto";
    case Mode::kDropout: return "dropout";
    case Mode::kChannelExchange: return "channel";
    case Mode::kPositionExchange: return "position";
  }
  return "auto";
}

void FxdaConfig::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("fxda.rate must lie in [0, 1]");
}

namespace {

// One generator per call; the mode draw comes first so fixed-mode and
// auto-mode configs sharing a seed use the same remaining stream.
struct Draws {
  Mode mode;
  std::mt19937_64 rng;
};

Draws start(const FxdaConfig& cfg) {
  Draws d{cfg.mode, std::mt19937_64(cfg.seed)};
  const uint64_t pick = d.rng() % 3;
  if (cfg.mode == Mode::kAuto)
    d.mode = pick == 0 ? Mode::kDropout : (pick == 1 ? Mode::kChannelExchange : Mode::kPositionExchange);
  return d;
}

}  // namespace

Mode resolve_mode(const FxdaConfig& cfg) { return start(cfg).mode; }

Var fxda_apply(const Var& weak, const Var& strong, const FxdaConfig& cfg) {
  cfg.validate();
  const Tensor& w = weak->value;
  const Tensor& s = strong->value;
  require(w.same_shape(s), "fxda: weak and strong features differ in shape");
  require(w.rank() == 4, "fxda: features must be [N,C,H,W]");
  const int64_t n = w.dim(0), c = w.dim(1), plane = w.dim(2) * w.dim(3);

  auto draws = start(cfg);
  std::bernoulli_distribution coin(cfg.rate);
  // take[i]: 1 = strong element, 0 = weak element scaled by `keep_scale[i]`.
  std::vector<uint8_t> take(static_cast<size_t>(w.size()), 0);
  std::vector<double> keep_scale(static_cast<size_t>(w.size()), 1.0);

  switch (draws.mode) {
    case Mode::kDropout: {
      const double survivor = cfg.rate < 1.0 ? 1.0 / (1.0 - cfg.rate) : 0.0;
      for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
          const double f = coin(draws.rng) ? 0.0 : survivor;
          std::fill_n(keep_scale.begin() + (b * c + ch) * plane, plane, f);
        }
      break;
    }
    case Mode::kChannelExchange:
      for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch)
          if (coin(draws.rng)) std::fill_n(take.begin() + (b * c + ch) * plane, plane, 1);
      break;
    case Mode::kPositionExchange:
      for (int64_t b = 0; b < n; ++b)
        for (int64_t p = 0; p < plane; ++p)
          if (coin(draws.rng))
            for (int64_t ch = 0; ch < c; ++ch) take[static_cast<size_t>((b * c + ch) * plane + p)] = 1;
      break;
    case Mode::kAuto:
      break;
  }

  const bool scaled = draws.mode == Mode::kDropout;
  Tensor out(w.shape());
  for (int64_t i = 0; i < out.size(); ++i) {
    if (take[static_cast<size_t>(i)])
      out[i] = s[i];
    else
      out[i] = scaled ? w[i] * keep_scale[static_cast<size_t>(i)] : w[i];
  }

  return make_result(std::move(out), {weak, strong}, [weak, strong, take, keep_scale, scaled](Node& self) {
    for (int64_t i = 0; i < self.value.size(); ++i) {
      if (take[static_cast<size_t>(i)]) {
        if (strong->requires_grad) strong->grad[i] += self.grad[i];
      } else if (weak->requires_grad) {
        weak->grad[i] += scaled ? self.grad[i] * keep_scale[static_cast<size_t>(i)] : self.grad[i];
      }
    }
  });
}

Tensor fxda_apply(const Tensor& weak, const Tensor& strong, const FxdaConfig& cfg) {
  return fxda_apply(nn::constant(weak), nn::constant(strong), cfg)->value;
}

}  // namespace bevda::fxda
