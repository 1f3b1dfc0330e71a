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
#include <memory>
#include <string>
#include <vector>

#include "bevda/config.hpp"
#include "bevda/feature_exchange.hpp"
#include "bevda/geometry.hpp"
#include "bevda/losses.hpp"
#include "bevda/mean_teacher.hpp"
#include "bevda/nn/model.hpp"
#include "bevda/synthworld.hpp"
#include "bevda/viewtransform.hpp"

namespace bevda::harness {

using nn::Tensor;
using nn::Var;

/// Which adaptation branches contribute to the target loss. With
/// `source_only` the step optimizes Loss_gt + Loss_d alone; with every
/// branch off it is the plain mean-teacher baseline (Loss_pl only).
struct Toggles {
  bool sgps = true;
  bool dacl = true;
  bool cdfm = true;
  bool fxda = true;
  bool source_only = false;

  /// "all", "none", "source_only" or a comma list of sgps,dacl,cdfm,fxda.
  static Toggles parse(const std::string& text);
  std::string label() const;
  bool operator==(const Toggles&) const = default;
};

/// Every field has a default; configs/default.cfg lists every key.
struct RunConfig {
  uint64_t data_seed = 7;
  uint64_t seed = 1;
  std::vector<uint64_t> seeds{1, 2, 3};

  geometry::BevGrid grid{-16.0, 16.0, -16.0, 16.0, 1.0};
  geometry::DepthBins bins{1.0, 23.0, 11};
  nn::ModelDims dims;
  synth::RigSpec source_rig{6, 1.5, 10.0, 90.0, 0.0, 32, 64};
  synth::RigSpec target_rig{6, 1.6, 12.0, 90.0, 0.0, 32, 64};
  std::string source_rig_file;
  std::string target_rig_file;
  synth::LayoutSpec layout;

  int source_scenes = 40;
  int target_scenes = 40;
  int eval_scenes = 20;
  double pseudo_noise = 0.05;

  int64_t total_steps = 2000;
  std::string optimizer = "sgd";  // sgd or adam
  double lr = 0.05;
  double momentum = 0.9;
  double clip_norm = 0.0;
  loss::LossWeights weights;
  bool depth_loss = true;
  fxda::FxdaConfig fxda;
  Toggles toggles;

  std::string out_dir;
  int64_t log_every = 0;

  static RunConfig from_config(const Config& cfg);
  static RunConfig load(const std::string& path);
  Config to_config() const;
  void validate() const;

  int feature_height() const;
  int feature_width() const;
  int stride() const { return 4; }
};

/// Rig files list per-view keys: rig.views, view<i>.fx/fy/cx/cy,
/// view<i>.rotation (9 values, row-major), view<i>.translation (3) and
/// optionally view<i>.preproc (9).
std::vector<geometry::CameraView> rig_from_config(const Config& cfg);
std::vector<geometry::CameraView> load_rig(const std::string& path);
std::string rig_to_text(std::span<const geometry::CameraView> rig);

/// One rendered scene with everything training and evaluation read.
struct SceneData {
  synth::Scene scene;
  Tensor images;                   // [N,3,H,W] domain-styled, unaugmented
  std::vector<LabelMap> labels;    // exact, image resolution
  std::vector<LabelMap> pseudo;    // corrupted labels at feature resolution
  Tensor pseudo_onehot;            // [N,K,h,w]
  Tensor depth;                    // [N,H,W] exact depth
  Tensor depth_feat;               // [N,h,w] depth at feature-pixel centers
  Tensor bev_gt;                   // [1,K,rows,cols]
  std::vector<std::vector<uint8_t>> vehicle_masks;
};

SceneData make_scene_data(const RunConfig& cfg, synth::Domain domain, uint64_t scene_seed,
                          const std::vector<geometry::CameraView>& rig);

struct Dataset {
  geometry::FrustumTemplate tmpl;
  std::vector<geometry::CameraView> source_rig;
  std::vector<geometry::CameraView> target_rig;
  vt::Projection source_proj;
  vt::Projection target_proj;
  std::vector<std::vector<uint8_t>> source_footprints;
  std::vector<SceneData> source;
  std::vector<SceneData> target;
  std::vector<SceneData> eval;
};

std::vector<geometry::CameraView> source_rig(const RunConfig& cfg);
std::vector<geometry::CameraView> target_rig(const RunConfig& cfg);
uint64_t scene_seed(const RunConfig& cfg, synth::Domain domain, int split, int index);
Dataset build_dataset(const RunConfig& cfg);

/// Scalar value of every loss term for one step.
struct LossReport {
  int64_t step = 0;
  double beta = 0.0;
  double gt = 0.0;
  double perspective_s = 0.0;
  double dynamic_s = 0.0;
  double depth = 0.0;
  double pseudo = 0.0;
  double mix = 0.0;
  double augment = 0.0;
  double perspective_t = 0.0;
  double dynamic_t = 0.0;
  double source_total = 0.0;
  double target_total = 0.0;
  double total = 0.0;

  static std::vector<std::string> columns();
  std::vector<double> values() const;
  std::string csv_row() const;
};

/// Which scenes a step draws and the seeds of its random augmentations.
struct StepBatch {
  int source_index = 0;
  int target_index = 0;
  uint64_t aug_seed = 0;
};

StepBatch draw_batch(const RunConfig& cfg, const Dataset& data, int64_t step);

/// Inputs of one step with every random draw and teacher output fixed, so
/// the loss graph is a deterministic function of the student parameters.
struct StepInputs {
  const SceneData* source = nullptr;
  const SceneData* target = nullptr;
  Tensor source_images;  // weak
  Tensor target_weak;
  Tensor target_strong;
  Tensor pseudo_bev;  // teacher scores on target_weak, [1,K,rows,cols]
  bool has_mix = false;
  Tensor mixed_images;
  vt::Projection mix_proj;
  Tensor mix_labels;  // [1,K,rows,cols]
  fxda::FxdaConfig fxda;
  double beta = 0.0;
};

StepInputs prepare_step(const mt::TrainState& state, const Dataset& data, const RunConfig& cfg,
                        const StepBatch& batch);

/// Dynamic BEV labels (clamped) built from the student's own argmax depth.
struct DynamicTargets {
  Tensor source;
  Tensor target;
};

/// Graph of every loss term; disabled terms are constant zeros.
struct LossTerms {
  Var gt, perspective_s, dynamic_s, depth;
  Var pseudo, mix, augment, perspective_t, dynamic_t;
  Var source_total, target_total, total;
  DynamicTargets targets;

  LossReport report(int64_t step, double beta) const;
};

/// With `fixed`, the dynamic labels are taken from it instead of the
/// student's current depth, so the graph is smooth in the parameters.
LossTerms compose_losses(const nn::BoundModel& student, const StepInputs& in, const Dataset& data,
                         const RunConfig& cfg, const DynamicTargets* fixed = nullptr);

/// One optimization step: losses, backward, SGD, EMA. Throws NumericError
/// naming the first non-finite term.
LossReport train_step(mt::TrainState& state, nn::Optimizer& opt, const Dataset& data, const RunConfig& cfg,
                      const StepBatch& batch);

std::unique_ptr<nn::Optimizer> make_optimizer(const RunConfig& cfg);

struct EvalResult {
  std::vector<double> per_class;
  double miou = 0.0;
};

/// Thresholds sigmoid scores at 0.5 against the BEV ground truth of every scene.
EvalResult evaluate(const nn::ParamSet& params, const std::vector<SceneData>& scenes, const vt::Projection& proj);

std::string eval_csv(const EvalResult& result);

struct TrainResult {
  mt::TrainState state;
  std::vector<LossReport> log;
  EvalResult eval;
  double seconds = 0.0;
};

std::string loss_csv(const std::vector<LossReport>& log);

/// Trains from cfg.seed and evaluates the teacher on the held-out target
/// scenes. With a non-empty out_dir, writes loss.csv, metrics.csv,
/// student/ and teacher/ checkpoints and the resolved config.
TrainResult run_train(const RunConfig& cfg, const Dataset& data);
TrainResult run_train(const RunConfig& cfg);

struct AblationRow {
  Toggles toggles;
  EvalResult eval;
};

/// Ablation rows in cumulative order: source only, MT, +SGPS, +SGPS+FXDA, +SGPS+DACL+FXDA, all.
std::vector<Toggles> ablation_rows();
std::vector<AblationRow> ablation_runner(const RunConfig& cfg, const std::vector<Toggles>& rows);
std::string ablation_csv(const std::vector<AblationRow>& rows);

void write_text(const std::string& path, const std::string& text);

}  // namespace bevda::harness
