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

#include <cmath>

#include "bevda/bev_network.hpp"
#include "bevda/errors.hpp"
#include "bevda/harness.hpp"
#include "bevda/metrics.hpp"
#include "doctest.h"
#include "micro.hpp"

using namespace bevda;
using namespace bevda::harness;
using nn::Tensor;

namespace {

struct Fixture {
  RunConfig cfg = testing::micro_config();
  Dataset data = build_dataset(cfg);
};

mt::TrainState fresh_state(const RunConfig& cfg) {
  return mt::init_train_state(nn::init_model(cfg.dims, cfg.seed), cfg.total_steps, cfg.weights.alpha,
                              cfg.weights.beta_max);
}

}  // namespace

TEST_CASE("toggles") {
  CHECK(Toggles::parse("all").label() == "mt+sgps+dacl+fxda+cdfm");
  CHECK(Toggles::parse("none").label() == "mt");
  CHECK(Toggles::parse("source_only").label() == "source_only");
  CHECK(Toggles::parse("sgps,fxda").label() == "mt+sgps+fxda");
  CHECK_THROWS_AS(Toggles::parse("sgps,bogus"), ConfigError);
  CHECK(ablation_rows().size() == 6);
}

TEST_CASE("config round trip") {
  auto cfg = testing::micro_config();
  cfg.toggles = Toggles::parse("dacl,cdfm");
  cfg.fxda.mode = fxda::Mode::kDropout;
  const RunConfig back = RunConfig::from_config(cfg.to_config());
  CHECK(back.to_config().to_text() == cfg.to_config().to_text());
  CHECK(back.toggles == cfg.toggles);
  CHECK_THROWS_AS(RunConfig::from_config(Config::parse("train.bogus = 1\n")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_config(Config::parse("train.lr = -1\n")), ConfigError);
}

TEST_CASE("step zero has no rampup contribution") {
  Fixture f;
  auto state = fresh_state(f.cfg);
  auto opt = make_optimizer(f.cfg);
  const auto r = train_step(state, *opt, f.data, f.cfg, draw_batch(f.cfg, f.data, 0));
  CHECK(r.beta == 0.0);
  CHECK(r.target_total == doctest::Approx(0.5 * r.perspective_t + 0.01 * r.dynamic_t).epsilon(1e-14));
  CHECK(state.step == 1);
}

TEST_CASE("zero weights reduce the step to supervised training") {
  Fixture f;
  f.cfg.weights.lambda1 = 0.0;
  f.cfg.weights.lambda2 = 0.0;
  f.cfg.depth_loss = false;
  const auto state = fresh_state(f.cfg);
  const auto in = prepare_step(state, f.data, f.cfg, draw_batch(f.cfg, f.data, 0));
  REQUIRE(in.beta == 0.0);

  const nn::BoundModel all(state.student, true);
  const auto terms = compose_losses(all, in, f.data, f.cfg);
  CHECK(terms.total->value[0] == terms.gt->value[0]);
  nn::backward(terms.total);
  const auto g_all = nn::collect_grads(all.leaves());

  const nn::BoundModel sup(state.student, true);
  nn::backward(compose_losses(sup, in, f.data, f.cfg).gt);
  const auto g_sup = nn::collect_grads(sup.leaves());
  for (size_t i = 0; i < g_all.size(); ++i) {
    CHECK(g_all[i] == g_sup[i]);
    const auto& name = state.student.entries()[i].name;
    if (name.rfind("pv.", 0) == 0 || name.rfind("aux.", 0) == 0)
      for (double x : g_all[i].values()) CHECK(x == 0.0);
  }
}

TEST_CASE("total equals the hand-composed sum of separately computed terms") {
  Fixture f;
  auto state = fresh_state(f.cfg);
  state.step = f.cfg.total_steps / 2;
  const auto in = prepare_step(state, f.data, f.cfg, draw_batch(f.cfg, f.data, state.step));
  REQUIRE(in.beta == doctest::Approx(0.1));
  const nn::BoundModel model(state.student, true);
  const double total = compose_losses(model, in, f.data, f.cfg).total->value[0];

  nn::NoGradGuard guard;
  const nn::BoundModel m(state.student, false);
  const auto shape = nn::Shape{1, kNumClasses, f.cfg.grid.rows(), f.cfg.grid.cols()};
  auto sig = [](Tensor t) {
    for (double& x : t.values()) x = 1.0 / (1.0 + std::exp(-x));
    return t;
  };
  const auto src = forward_bev(m, nn::constant(in.source_images), f.data.source_proj);
  const auto strong = forward_bev(m, nn::constant(in.target_strong), f.data.target_proj);
  const double gt = loss::task_loss(src.logits->value, in.source->bev_gt);
  const double depth = loss::depth_loss(src.dist->value, in.source->depth_feat, f.cfg.bins);
  const double p_s = loss::dice_loss(sig(nn::pv_head(m, src.enc.features)->value), in.source->pseudo_onehot);
  const double p_t = loss::dice_loss(sig(nn::pv_head(m, strong.enc.features)->value), in.target->pseudo_onehot);
  const auto dyn_s = vt::mask_view_transform(in.source->pseudo, src.dist->value, f.data.source_proj, kNumClasses);
  const auto dyn_t = vt::mask_view_transform(in.target->pseudo, strong.dist->value, f.data.target_proj, kNumClasses);
  const double y_s = loss::l2_map_loss(nn::aux_head(m, src.bev)->value, dyn_s.clamped().reshaped(shape));
  const double y_t = loss::l2_map_loss(nn::aux_head(m, strong.bev)->value, dyn_t.clamped().reshaped(shape));
  const double pl = loss::l2_map_loss(sig(strong.logits->value), in.pseudo_bev);
  double mix = 0.0;
  if (in.has_mix)
    mix = loss::l2_map_loss(sig(forward_bev(m, nn::constant(in.mixed_images), in.mix_proj).logits->value),
                            in.mix_labels);
  const auto weak = nn::encode(m, nn::constant(in.target_weak));
  const Tensor weak_bev = vt::view_transform(weak.features, weak.depth_logits, f.data.target_proj)->value;
  const Tensor swapped = fxda::fxda_apply(weak_bev, strong.bev->value, in.fxda);
  const double da = loss::l2_map_loss(sig(nn::bev_decoder(m, nn::constant(swapped))->value), in.pseudo_bev);

  const double want = gt + 0.5 * p_s + 0.01 * y_s + depth + 0.1 * (pl + mix + 2.0 * da) + 0.5 * p_t + 0.01 * y_t;
  CHECK(std::abs(total - want) <= 1e-6 * std::max(1.0, std::abs(want)));
}

TEST_CASE("train step lifecycle and diagnostics") {
  Fixture f;
  auto state = fresh_state(f.cfg);
  auto opt = make_optimizer(f.cfg);
  for (int64_t s = 0; s < f.cfg.total_steps; ++s) train_step(state, *opt, f.data, f.cfg, draw_batch(f.cfg, f.data, s));
  CHECK_THROWS_AS(train_step(state, *opt, f.data, f.cfg, draw_batch(f.cfg, f.data, 0)), StateError);

  auto bad = fresh_state(f.cfg);
  bad.student.get("dec.conv2.b")[0] = std::nan("");
  try {
    train_step(bad, *opt, f.data, f.cfg, draw_batch(f.cfg, f.data, 0));
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("loss_gt") != std::string::npos);
  }
  auto uninit = fresh_state(f.cfg);
  uninit.teacher_initialized = false;
  CHECK_THROWS_AS(train_step(uninit, *opt, f.data, f.cfg, draw_batch(f.cfg, f.data, 0)), StateError);
}

TEST_CASE("runs are reproducible") {
  Fixture f;
  const auto a = run_train(f.cfg, f.data);
  const auto b = run_train(f.cfg, f.data);
  CHECK(loss_csv(a.log) == loss_csv(b.log));
  CHECK(a.state.teacher == b.state.teacher);
  CHECK(a.log.size() == static_cast<size_t>(f.cfg.total_steps));
}

TEST_CASE("evaluation against ground truth") {
  Fixture f;
  metrics::IouAccumulator acc(kNumClasses);
  const nn::Shape shape{kNumClasses, f.cfg.grid.rows(), f.cfg.grid.cols()};
  for (const auto& s : f.data.eval) acc.add(s.bev_gt.reshaped(shape), s.bev_gt.reshaped(shape));
  CHECK(acc.mean() == 1.0);
  auto params = nn::init_model(f.cfg.dims, 1);
  params.get("dec.conv2.w").fill(0.0);
  params.get("dec.conv2.b").fill(-5.0);
  const auto r = evaluate(params, f.data.eval, f.data.target_proj);
  for (size_t k = 0; k < r.per_class.size(); ++k) {
    double present = 0.0;
    for (const auto& s : f.data.eval)
      for (int64_t i = 0; i < f.cfg.grid.cell_count(); ++i) present += s.bev_gt[static_cast<int64_t>(k) * f.cfg.grid.cell_count() + i];
    if (present > 0.0) CHECK(r.per_class[k] == 0.0);
  }
}
