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

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "bevda/bev_network.hpp"
#include "bevda/errors.hpp"
#include "bevda/frustum_mixing.hpp"
#include "bevda/harness.hpp"
#include "bevda/metrics.hpp"
#include "bevda/scene_io.hpp"
#include "bevda/tnsr.hpp"
#include "bevda/vectorize.hpp"

namespace {

using namespace bevda;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

harness::RunConfig load_config(const std::string& path) {
  if (path.empty()) return harness::RunConfig{};
  return harness::RunConfig::load(path);
}

std::string scene_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%03d", i);
  return buf;
}

int cmd_gen_scenes(const std::string& config, const std::string& out) {
  const auto cfg = load_config(config);
  const auto data = harness::build_dataset(cfg);
  struct Split {
    const char* name;
    synth::Domain domain;
    int index;
    const std::vector<harness::SceneData>* scenes;
  };
  const Split splits[] = {{"source", synth::Domain::kSource, 0, &data.source},
                          {"target", synth::Domain::kTarget, 0, &data.target},
                          {"eval", synth::Domain::kTarget, 1, &data.eval}};
  std::ostringstream manifest;
  manifest << "# path seed domain\n";
  for (const auto& split : splits) {
    const auto& rig = split.domain == synth::Domain::kSource ? data.source_rig : data.target_rig;
    for (size_t i = 0; i < split.scenes->size(); ++i) {
      const auto rel = std::string(split.name) + "/" + scene_name(static_cast<int>(i));
      io::write_scene_dir(out + "/" + rel, cfg, (*split.scenes)[i], rig);
      manifest << rel << " " << harness::scene_seed(cfg, split.domain, split.index, static_cast<int>(i)) << " "
               << (split.domain == synth::Domain::kSource ? "source" : "target") << "\n";
    }
  }
  harness::write_text(out + "/config.cfg", cfg.to_config().to_text());
  harness::write_text(out + "/manifest.txt", manifest.str());
  std::cout << "wrote " << data.source.size() << " source, " << data.target.size() << " target and "
            << data.eval.size() << " eval scenes to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config, const std::string& out, const std::string& toggle) {
  auto cfg = load_config(config);
  if (!out.empty()) cfg.out_dir = out;
  if (!toggle.empty()) cfg.toggles = harness::Toggles::parse(toggle);
  if (cfg.log_every == 0) cfg.log_every = 100;
  const auto result = harness::run_train(cfg);
  std::cout << harness::eval_csv(result.eval);
  std::cout << "# " << cfg.toggles.label() << " seed " << cfg.seed << ", " << cfg.total_steps << " steps in "
            << fmt(result.seconds) << " s\n";
  return 0;
}

int eval_semantic(const std::string& ckpt, const std::string& scenes, std::ostream& out) {
  const auto params = io::load_checkpoint(ckpt);
  const auto cfg = harness::RunConfig::from_config(Config::parse(io::checkpoint_meta(ckpt), ckpt));
  const auto tmpl = geometry::build_frustum_template(cfg.feature_height(), cfg.feature_width(), cfg.stride(), cfg.bins);
  metrics::IouAccumulator acc(kNumClasses);
  for (const auto& dir : io::list_scene_dirs(scenes)) {
    const auto s = io::read_scene_dir(dir);
    if (!(s.config.grid == cfg.grid)) throw ConfigError(dir + ": scene grid differs from the checkpoint grid");
    const auto proj = vt::make_projection(tmpl, s.rig, cfg.grid);
    nn::Tensor scores = predict_bev(params, s.images, proj);
    for (double& v : scores.values()) v = v > 0.5 ? 1.0 : 0.0;
    const nn::Shape shape{kNumClasses, cfg.grid.rows(), cfg.grid.cols()};
    acc.add(scores.reshaped(shape), s.bev_gt.reshaped(shape));
  }
  out << harness::eval_csv({acc.per_class(), acc.mean()});
  return 0;
}

void ap_rows(const metrics::ChamferReport& r, const std::string& prefix, std::ostream& out) {
  for (size_t c = 0; c < r.classes.size(); ++c) {
    out << prefix << class_name(r.classes[c]);
    for (double ap : r.ap[c]) out << "," << fmt(ap);
    out << "," << fmt(r.class_map[c]) << "\n";
  }
}

int eval_hd(const std::string& ckpt, const std::string& scenes, const std::string& pred, const std::string& gt,
            std::ostream& out) {
  out << "scene,class,ap_0.5,ap_1.0,ap_1.5,map\n";
  if (!pred.empty() || !gt.empty()) {
    if (pred.empty() || gt.empty()) throw ConfigError("eval --task hd needs both --pred and --gt");
    const auto r = metrics::chamfer_map(metrics::read_polylines(pred), metrics::read_polylines(gt));
    ap_rows(r, "-,", out);
    out << "-,mean,,,," << fmt(r.map) << "\n";
    return 0;
  }
  if (ckpt.empty() || scenes.empty()) throw ConfigError("eval --task hd needs --ckpt and --scenes, or --pred and --gt");
  const auto params = io::load_checkpoint(ckpt);
  const auto cfg = harness::RunConfig::from_config(Config::parse(io::checkpoint_meta(ckpt), ckpt));
  const auto tmpl = geometry::build_frustum_template(cfg.feature_height(), cfg.feature_width(), cfg.stride(), cfg.bins);
  double total = 0.0;
  int count = 0;
  for (const auto& dir : io::list_scene_dirs(scenes)) {
    const auto s = io::read_scene_dir(dir);
    const auto proj = vt::make_projection(tmpl, s.rig, cfg.grid);
    const auto scores = predict_bev(params, s.images, proj);
    const auto preds = metrics::vectorize_bev(scores, cfg.grid, metrics::kVectorClasses);
    const auto gts = metrics::read_polylines(dir + "/hd_gt.txt");
    const auto r = metrics::chamfer_map(preds, gts);
    ap_rows(r, fs::path(dir).filename().string() + ",", out);
    total += r.map;
    ++count;
  }
  out << "all,mean,,,," << fmt(count ? total / count : 0.0) << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& scenes, const std::string& task, const std::string& out_path,
             const std::string& pred, const std::string& gt) {
  std::ostringstream out;
  if (task == "semantic") {
    if (ckpt.empty() || scenes.empty()) throw ConfigError("eval --task semantic needs --ckpt and --scenes");
    eval_semantic(ckpt, scenes, out);
  } else if (task == "hd") {
    eval_hd(ckpt, scenes, pred, gt, out);
  } else {
    throw ConfigError("--task must be semantic or hd");
  }
  if (out_path.empty() || out_path == "-")
    std::cout << out.str();
  else
    harness::write_text(out_path, out.str());
  return 0;
}

int cmd_ablate(const std::string& config, const std::string& out) {
  auto cfg = load_config(config);
  if (!out.empty()) cfg.out_dir = out;
  if (cfg.log_every == 0) cfg.log_every = 500;
  const auto rows = harness::ablation_runner(cfg, harness::ablation_rows());
  std::cout << harness::ablation_csv(rows);
  return 0;
}

int cmd_mix_demo(const std::string& config, const std::string& out) {
  auto cfg = load_config(config);
  cfg.source_scenes = cfg.target_scenes = cfg.eval_scenes = 1;
  const auto data = harness::build_dataset(cfg);
  const auto& src = data.source[0];
  const auto& tgt = data.target[0];
  const int H = cfg.source_rig.image_height, W = cfg.source_rig.image_width;
  const auto masks = mixing::InstanceMaskSet::from_masks(H, W, src.vehicle_masks);
  const auto plan = mixing::plan_mixing(masks);
  const auto mixed = mixing::mix_images(plan, masks, src.images, tgt.images);
  const auto fields = mixing::mix_projection_params(plan, masks, data.source_rig, data.target_rig);
  const auto target_labels = tgt.bev_gt;
  const auto mixed_labels = mixing::mix_bev_labels(plan, src.bev_gt, target_labels, data.source_footprints,
                                                   static_cast<int>(SemanticClass::kVehicle));

  fs::create_directories(out);
  io::write_tensor(out + "/source_images.tnsr", src.images);
  io::write_tensor(out + "/target_images.tnsr", tgt.images);
  io::write_tensor(out + "/mixed_images.tnsr", mixed);
  io::write_tensor(out + "/mixed_labels.tnsr", mixed_labels);
  std::vector<uint8_t> provenance;
  for (const auto& f : fields) provenance.insert(provenance.end(), f.index.begin(), f.index.end());
  io::write_tnsr(out + "/camera_index.tnsr",
                 io::TnsrArray::from_u8({fields.size(), static_cast<uint64_t>(H), static_cast<uint64_t>(W)},
                                        provenance));
  std::ostringstream summary;
  summary << "mix_views =";
  for (int v : plan.mix_views) summary << " " << v;
  summary << "\nisolated_view = " << (plan.isolated_view ? std::to_string(*plan.isolated_view) : "none") << "\n";
  for (int v = 0; v < masks.views(); ++v) summary << "view" << v << ".instance_pixels = " << masks.counts[v] << "\n";
  harness::write_text(out + "/plan.txt", summary.str());
  std::cout << summary.str();
  return 0;
}

int cmd_project(const std::string& scene, int view, const std::string& out) {
  const auto s = io::read_scene_dir(scene);
  if (view < 0 || view >= static_cast<int>(s.rig.size()))
    throw ConfigError("--view must lie in [0, " + std::to_string(s.rig.size()) + ")");
  const auto& cfg = s.config;
  const auto tmpl = geometry::build_frustum_template(cfg.feature_height(), cfg.feature_width(), cfg.stride(), cfg.bins);
  const auto cloud = geometry::unproject_to_ego(tmpl, s.rig[static_cast<size_t>(view)]);
  const auto cells = geometry::rasterize_to_cells(cloud, cfg.grid);
  const auto footprint = geometry::footprint_of(cells, cfg.grid);

  std::ostringstream pts;
  pts << "# k i j x y z cell\n";
  pts.precision(9);
  for (int k = 0; k < tmpl.depth; ++k)
    for (int i = 0; i < tmpl.height; ++i)
      for (int j = 0; j < tmpl.width; ++j) {
        const auto idx = tmpl.index(k, i, j);
        const auto& p = cloud.points[static_cast<size_t>(idx)];
        pts << k << " " << i << " " << j << " " << p.x() << " " << p.y() << " " << p.z() << " "
            << cells.cells[static_cast<size_t>(idx)] << "\n";
      }
  std::ostringstream fp;
  for (int r = 0; r < cfg.grid.rows(); ++r) {
    for (int c = 0; c < cfg.grid.cols(); ++c) fp << (footprint[static_cast<size_t>(r * cfg.grid.cols() + c)] ? '1' : '0');
    fp << "\n";
  }
  if (out.empty()) {
    std::cout << pts.str() << "# footprint rows=" << cfg.grid.rows() << " cols=" << cfg.grid.cols() << "\n" << fp.str();
  } else {
    fs::create_directories(out);
    harness::write_text(out + "/frustum_cloud.txt", pts.str());
    harness::write_text(out + "/footprint.txt", fp.str());
    std::cout << cloud.points.size() << " points, " << cells.valid_count() << " inside the grid\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-camera BEV domain adaptation toolkit"};
  app.require_subcommand(1);

  std::string config, out, toggle, ckpt, scenes, task = "semantic", pred, gt, scene;
  int view = 0;

  auto* gen = app.add_subcommand("gen-scenes", "Render source, target and eval scenes to disk");
  gen->add_option("--config", config, "Run config file");
  gen->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train student and teacher, then evaluate the teacher");
  train->add_option("--config", config, "Run config file");
  train->add_option("--out", out, "Output directory");
  train->add_option("--toggle", toggle, "sgps,dacl,cdfm,fxda | all | none | source_only");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on stored scenes");
  eval->add_option("--ckpt", ckpt, "Checkpoint directory");
  eval->add_option("--scenes", scenes, "Scene directory");
  eval->add_option("--task", task, "semantic | hd");
  eval->add_option("--out", out, "Output CSV (stdout when omitted)");
  eval->add_option("--pred", pred, "Predicted polylines (hd task)");
  eval->add_option("--gt", gt, "Ground-truth polylines (hd task)");

  auto* ablate = app.add_subcommand("ablate", "Run every ablation row and write ablation.csv");
  ablate->add_option("--config", config, "Run config file");
  ablate->add_option("--out", out, "Output directory");

  auto* mix = app.add_subcommand("mix-demo", "Mix one source scene into one target scene");
  mix->add_option("--config", config, "Run config file");
  mix->add_option("--out", out, "Output directory")->required();

  auto* project = app.add_subcommand("project", "Dump one view's frustum cloud and BEV footprint");
  project->add_option("--scene", scene, "Scene directory")->required();
  project->add_option("--view", view, "View index")->required();
  project->add_option("--out", out, "Output directory (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_scenes(config, out);
    if (*train) return cmd_train(config, out, toggle);
    if (*eval) return cmd_eval(ckpt, scenes, task, out, pred, gt);
    if (*ablate) return cmd_ablate(config, out);
    if (*mix) return cmd_mix_demo(config, out);
    if (*project) return cmd_project(scene, view, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
