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

#include "bevda/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "bevda/bev_network.hpp"
#include "bevda/errors.hpp"
#include "bevda/frustum_mixing.hpp"
#include "bevda/metrics.hpp"
#include "bevda/seed.hpp"
#include "bevda/tnsr.hpp"

namespace bevda::harness {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string nums(std::span<const double> v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + num(v[i]);
  return out;
}

Eigen::Matrix3d matrix_from(const std::vector<double>& v, const std::string& key) {
  if (v.size() != 9) throw ConfigError(key + " expects 9 values");
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = v[static_cast<size_t>(i)];
  return m;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k = {
        "run.seed", "run.seeds", "data.seed", "data.source_scenes", "data.target_scenes", "data.eval_scenes",
        "data.pseudo_noise", "grid.x_min", "grid.x_max", "grid.y_min", "grid.y_max", "grid.resolution",
        "depth.min", "depth.max", "depth.bins", "model.stem", "model.mid", "model.encoder", "model.features",
        "model.bev_hidden", "layout.road_width_min", "layout.road_width_max", "layout.cross_road_width_min",
        "layout.cross_road_width_max", "layout.boundary_width", "layout.divider_width", "layout.crossing_depth",
        "layout.vehicle_length", "layout.vehicle_width", "layout.vehicle_height", "train.total_steps", "train.optimizer", "train.lr",
        "train.momentum", "train.clip_norm", "train.log_every", "train.toggles", "loss.lambda1", "loss.lambda2", "mt.alpha",
        "mt.beta_max", "loss.dice_eps", "loss.depth", "fxda.mode", "fxda.rate", "output.dir"};
    for (const std::string rig : {"source_rig", "target_rig"})
      for (const std::string f :
           {"views", "height", "pitch_deg", "hfov_deg", "yaw_offset_deg", "image_height", "image_width", "principal_row", "file"})
        k.push_back(rig + "." + f);
    return k;
  }();
  return keys;
}

synth::RigSpec rig_spec_from(const Config& c, const std::string& p, synth::RigSpec r) {
  r.views = static_cast<int>(c.get_int(p + ".views", r.views));
  r.height = c.get_double(p + ".height", r.height);
  r.pitch_deg = c.get_double(p + ".pitch_deg", r.pitch_deg);
  r.hfov_deg = c.get_double(p + ".hfov_deg", r.hfov_deg);
  r.yaw_offset_deg = c.get_double(p + ".yaw_offset_deg", r.yaw_offset_deg);
  r.image_height = static_cast<int>(c.get_int(p + ".image_height", r.image_height));
  r.image_width = static_cast<int>(c.get_int(p + ".image_width", r.image_width));
  r.principal_row = c.get_double(p + ".principal_row", r.principal_row);
  return r;
}

void rig_spec_to(Config& c, const std::string& p, const synth::RigSpec& r, const std::string& file) {
  c.set(p + ".views", std::to_string(r.views));
  c.set(p + ".height", num(r.height));
  c.set(p + ".pitch_deg", num(r.pitch_deg));
  c.set(p + ".hfov_deg", num(r.hfov_deg));
  c.set(p + ".yaw_offset_deg", num(r.yaw_offset_deg));
  c.set(p + ".image_height", std::to_string(r.image_height));
  c.set(p + ".image_width", std::to_string(r.image_width));
  c.set(p + ".principal_row", num(r.principal_row));
  if (!file.empty()) c.set(p + ".file", file);
}

int downsample(int n) { return (n - 1) / 2 + 1; }

Var zero_scalar() { return nn::constant(Tensor({1}, 0.0)); }

Tensor one_hot(std::span<const LabelMap> labels, int classes) {
  const int n = static_cast<int>(labels.size());
  const int h = labels[0].height, w = labels[0].width;
  Tensor out({n, classes, h, w});
  const int64_t plane = static_cast<int64_t>(h) * w;
  for (int v = 0; v < n; ++v)
    for (int64_t p = 0; p < plane; ++p) {
      const int8_t k = labels[static_cast<size_t>(v)].data[static_cast<size_t>(p)];
      if (k >= 0 && k < classes) out[(static_cast<int64_t>(v) * classes + k) * plane + p] = 1.0;
    }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Toggles

Toggles Toggles::parse(const std::string& text) {
  Toggles t{false, false, false, false, false};
  if (text == "all") return Toggles{};
  if (text == "none" || text.empty()) return t;
  if (text == "source_only") {
    t.source_only = true;
    return t;
  }
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (item == "sgps")
      t.sgps = true;
    else if (item == "dacl")
      t.dacl = true;
    else if (item == "cdfm")
      t.cdfm = true;
    else if (item == "fxda")
      t.fxda = true;
    else
      throw ConfigError("unknown toggle '" + item + "' (expected sgps,dacl,cdfm,fxda, all, none or source_only)");
  }
  return t;
}

std::string Toggles::label() const {
  if (source_only) return "source_only";
  std::string out = "mt";
  if (sgps) out += "+sgps";
  if (dacl) out += "+dacl";
  if (fxda) out += "+fxda";
  if (cdfm) out += "+cdfm";
  return out;
}

// ---------------------------------------------------------------------------
// RunConfig

RunConfig RunConfig::from_config(const Config& c) {
  const auto& known = known_keys();
  for (const auto& key : c.keys())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(c.origin() + ": unknown key " + key);

  RunConfig r;
  r.seed = static_cast<uint64_t>(c.get_int("run.seed", static_cast<int64_t>(r.seed)));
  if (c.has("run.seeds")) {
    r.seeds.clear();
    for (double s : c.get_doubles("run.seeds")) {
      if (s < 0 || s != std::floor(s)) throw ConfigError("run.seeds expects non-negative integers");
      r.seeds.push_back(static_cast<uint64_t>(s));
    }
  }
  r.data_seed = static_cast<uint64_t>(c.get_int("data.seed", static_cast<int64_t>(r.data_seed)));
  r.source_scenes = static_cast<int>(c.get_int("data.source_scenes", r.source_scenes));
  r.target_scenes = static_cast<int>(c.get_int("data.target_scenes", r.target_scenes));
  r.eval_scenes = static_cast<int>(c.get_int("data.eval_scenes", r.eval_scenes));
  r.pseudo_noise = c.get_double("data.pseudo_noise", r.pseudo_noise);

  r.grid.x_min = c.get_double("grid.x_min", r.grid.x_min);
  r.grid.x_max = c.get_double("grid.x_max", r.grid.x_max);
  r.grid.y_min = c.get_double("grid.y_min", r.grid.y_min);
  r.grid.y_max = c.get_double("grid.y_max", r.grid.y_max);
  r.grid.resolution = c.get_double("grid.resolution", r.grid.resolution);
  r.bins.d_min = c.get_double("depth.min", r.bins.d_min);
  r.bins.d_max = c.get_double("depth.max", r.bins.d_max);
  r.bins.count = static_cast<int>(c.get_int("depth.bins", r.bins.count));

  r.dims.stem = static_cast<int>(c.get_int("model.stem", r.dims.stem));
  r.dims.mid = static_cast<int>(c.get_int("model.mid", r.dims.mid));
  r.dims.encoder = static_cast<int>(c.get_int("model.encoder", r.dims.encoder));
  r.dims.features = static_cast<int>(c.get_int("model.features", r.dims.features));
  r.dims.bev_hidden = static_cast<int>(c.get_int("model.bev_hidden", r.dims.bev_hidden));
  r.dims.depth_bins = r.bins.count;
  r.dims.classes = kNumClasses;

  auto& L = r.layout;
  L.road_width_min = c.get_double("layout.road_width_min", L.road_width_min);
  L.road_width_max = c.get_double("layout.road_width_max", L.road_width_max);
  L.cross_road_width_min = c.get_double("layout.cross_road_width_min", L.cross_road_width_min);
  L.cross_road_width_max = c.get_double("layout.cross_road_width_max", L.cross_road_width_max);
  L.boundary_width = c.get_double("layout.boundary_width", L.boundary_width);
  L.divider_width = c.get_double("layout.divider_width", L.divider_width);
  L.crossing_depth = c.get_double("layout.crossing_depth", L.crossing_depth);
  L.vehicle_length = c.get_double("layout.vehicle_length", L.vehicle_length);
  L.vehicle_width = c.get_double("layout.vehicle_width", L.vehicle_width);
  L.vehicle_height = c.get_double("layout.vehicle_height", L.vehicle_height);

  r.source_rig = rig_spec_from(c, "source_rig", r.source_rig);
  r.target_rig = rig_spec_from(c, "target_rig", r.target_rig);
  r.source_rig_file = c.get_string("source_rig.file", "");
  r.target_rig_file = c.get_string("target_rig.file", "");
  // Relative rig paths resolve against the config file's directory.
  const auto base = std::filesystem::path(c.origin()).parent_path();
  for (std::string* f : {&r.source_rig_file, &r.target_rig_file}) {
    if (f->empty() || std::filesystem::path(*f).is_absolute() || c.origin().front() == '<') continue;
    *f = (base / *f).string();
  }
  for (const std::string* f : {&r.source_rig_file, &r.target_rig_file})
    if (!f->empty() && !std::filesystem::exists(*f)) throw ConfigError("rig file not found: " + *f);

  r.total_steps = c.get_int("train.total_steps", r.total_steps);
  r.optimizer = c.get_string("train.optimizer", r.optimizer);
  r.lr = c.get_double("train.lr", r.lr);
  r.momentum = c.get_double("train.momentum", r.momentum);
  r.clip_norm = c.get_double("train.clip_norm", r.clip_norm);
  r.log_every = c.get_int("train.log_every", r.log_every);
  if (c.has("train.toggles")) r.toggles = Toggles::parse(c.get_string("train.toggles", "all"));

  auto& W = r.weights;
  W.lambda1 = c.get_double("loss.lambda1", W.lambda1);
  W.lambda2 = c.get_double("loss.lambda2", W.lambda2);
  W.alpha = c.get_double("mt.alpha", W.alpha);
  W.beta_max = c.get_double("mt.beta_max", W.beta_max);
  W.dice_eps = c.get_double("loss.dice_eps", W.dice_eps);
  r.depth_loss = c.get_bool("loss.depth", r.depth_loss);

  r.fxda.mode = fxda::parse_mode(c.get_string("fxda.mode", fxda::mode_name(r.fxda.mode)));
  r.fxda.rate = c.get_double("fxda.rate", r.fxda.rate);
  r.out_dir = c.get_string("output.dir", r.out_dir);
  r.validate();
  return r;
}

RunConfig RunConfig::load(const std::string& path) { return from_config(Config::load(path)); }

Config RunConfig::to_config() const {
  Config c;
  c.set("run.seed", std::to_string(seed));
  std::string s;
  for (size_t i = 0; i < seeds.size(); ++i) s += (i ? "," : "") + std::to_string(seeds[i]);
  c.set("run.seeds", s);
  c.set("data.seed", std::to_string(data_seed));
  c.set("data.source_scenes", std::to_string(source_scenes));
  c.set("data.target_scenes", std::to_string(target_scenes));
  c.set("data.eval_scenes", std::to_string(eval_scenes));
  c.set("data.pseudo_noise", num(pseudo_noise));
  c.set("grid.x_min", num(grid.x_min));
  c.set("grid.x_max", num(grid.x_max));
  c.set("grid.y_min", num(grid.y_min));
  c.set("grid.y_max", num(grid.y_max));
  c.set("grid.resolution", num(grid.resolution));
  c.set("depth.min", num(bins.d_min));
  c.set("depth.max", num(bins.d_max));
  c.set("depth.bins", std::to_string(bins.count));
  c.set("model.stem", std::to_string(dims.stem));
  c.set("model.mid", std::to_string(dims.mid));
  c.set("model.encoder", std::to_string(dims.encoder));
  c.set("model.features", std::to_string(dims.features));
  c.set("model.bev_hidden", std::to_string(dims.bev_hidden));
  c.set("layout.road_width_min", num(layout.road_width_min));
  c.set("layout.road_width_max", num(layout.road_width_max));
  c.set("layout.cross_road_width_min", num(layout.cross_road_width_min));
  c.set("layout.cross_road_width_max", num(layout.cross_road_width_max));
  c.set("layout.boundary_width", num(layout.boundary_width));
  c.set("layout.divider_width", num(layout.divider_width));
  c.set("layout.crossing_depth", num(layout.crossing_depth));
  c.set("layout.vehicle_length", num(layout.vehicle_length));
  c.set("layout.vehicle_width", num(layout.vehicle_width));
  c.set("layout.vehicle_height", num(layout.vehicle_height));
  rig_spec_to(c, "source_rig", source_rig, source_rig_file);
  rig_spec_to(c, "target_rig", target_rig, target_rig_file);
  c.set("train.total_steps", std::to_string(total_steps));
  c.set("train.optimizer", optimizer);
  c.set("train.lr", num(lr));
  c.set("train.momentum", num(momentum));
  c.set("train.clip_norm", num(clip_norm));
  c.set("train.log_every", std::to_string(log_every));
  std::string list;
  for (const auto& [on, name] : {std::pair{toggles.sgps, "sgps"}, {toggles.dacl, "dacl"}, {toggles.cdfm, "cdfm"},
                                 {toggles.fxda, "fxda"}})
    if (on) list += (list.empty() ? "" : ",") + std::string(name);
  c.set("train.toggles", toggles.source_only ? "source_only" : (list.empty() ? "none" : list));
  c.set("loss.lambda1", num(weights.lambda1));
  c.set("loss.lambda2", num(weights.lambda2));
  c.set("mt.alpha", num(weights.alpha));
  c.set("mt.beta_max", num(weights.beta_max));
  c.set("loss.dice_eps", num(weights.dice_eps));
  c.set("loss.depth", depth_loss ? "true" : "false");
  c.set("fxda.mode", fxda::mode_name(fxda.mode));
  c.set("fxda.rate", num(fxda.rate));
  if (!out_dir.empty()) c.set("output.dir", out_dir);
  return c;
}

void RunConfig::validate() const {
  grid.validate();
  bins.validate();
  dims.validate();
  weights.validate();
  fxda.validate();
  if (dims.depth_bins != bins.count) throw ConfigError("model depth bins must equal depth.bins");
  if (dims.classes != kNumClasses) throw ConfigError("model classes must equal the label classes");
  if (source_scenes < 1 || target_scenes < 1 || eval_scenes < 1) throw ConfigError("scene counts must be positive");
  if (!(pseudo_noise >= 0.0 && pseudo_noise <= 1.0)) throw ConfigError("data.pseudo_noise must lie in [0, 1]");
  if (total_steps < 1) throw ConfigError("train.total_steps must be positive");
  if (optimizer != "sgd" && optimizer != "adam") throw ConfigError("train.optimizer must be sgd or adam");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (!(clip_norm >= 0.0)) throw ConfigError("train.clip_norm must be non-negative");
  if (seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
  for (const auto* r : {&source_rig, &target_rig})
    if (r->image_height % 4 != 0 || r->image_width % 4 != 0 || r->image_height < 4 || r->image_width < 4)
      throw ConfigError("rig image dims must be positive multiples of 4");
  if (source_rig.image_height != target_rig.image_height || source_rig.image_width != target_rig.image_width)
    throw ConfigError("source and target rigs must share image dims");
  if (source_rig.views != target_rig.views) throw ConfigError("source and target rigs must have the same view count");
}

int RunConfig::feature_height() const { return downsample(downsample(source_rig.image_height)); }
int RunConfig::feature_width() const { return downsample(downsample(source_rig.image_width)); }

// ---------------------------------------------------------------------------
// Rig files

std::vector<geometry::CameraView> rig_from_config(const Config& c) {
  const int64_t n = c.get_int("rig.views", 0);
  if (n < 1) throw ConfigError(c.origin() + ": rig.views must be positive");
  std::vector<geometry::CameraView> rig;
  for (int64_t i = 0; i < n; ++i) {
    const std::string p = "view" + std::to_string(i) + ".";
    for (const char* key : {"fx", "fy", "cx", "cy", "rotation", "translation"})
      if (!c.has(p + key)) throw ConfigError(c.origin() + ": missing key " + p + key);
    geometry::CameraView v;
    v.intrinsics << c.get_double(p + "fx", 0), 0, c.get_double(p + "cx", 0), 0, c.get_double(p + "fy", 0),
        c.get_double(p + "cy", 0), 0, 0, 1;
    v.rotation = matrix_from(c.get_doubles(p + "rotation"), p + "rotation");
    const auto t = c.get_doubles(p + "translation");
    if (t.size() != 3) throw ConfigError(p + "translation expects 3 values");
    v.translation = Eigen::Vector3d(t[0], t[1], t[2]);
    if (c.has(p + "preproc")) v.preproc = matrix_from(c.get_doubles(p + "preproc"), p + "preproc");
    try {
      v.validate();
    } catch (const GeometryError& e) {
      throw ConfigError(c.origin() + ": view " + std::to_string(i) + ": " + e.what());
    }
    rig.push_back(v);
  }
  return rig;
}

std::vector<geometry::CameraView> load_rig(const std::string& path) { return rig_from_config(Config::load(path)); }

std::string rig_to_text(std::span<const geometry::CameraView> rig) {
  std::ostringstream out;
  out << "rig.views = " << rig.size() << "\n";
  for (size_t i = 0; i < rig.size(); ++i) {
    const auto& v = rig[i];
    const std::string p = "view" + std::to_string(i) + ".";
    out << p << "fx = " << num(v.intrinsics(0, 0)) << "\n" << p << "fy = " << num(v.intrinsics(1, 1)) << "\n";
    out << p << "cx = " << num(v.intrinsics(0, 2)) << "\n" << p << "cy = " << num(v.intrinsics(1, 2)) << "\n";
    std::vector<double> r, t, pp;
    for (int k = 0; k < 9; ++k) {
      r.push_back(v.rotation(k / 3, k % 3));
      pp.push_back(v.preproc(k / 3, k % 3));
    }
    for (int k = 0; k < 3; ++k) t.push_back(v.translation[k]);
    out << p << "rotation = " << nums(r) << "\n";
    out << p << "translation = " << nums(t) << "\n";
    out << p << "preproc = " << nums(pp) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Data

std::vector<geometry::CameraView> source_rig(const RunConfig& cfg) {
  auto rig = cfg.source_rig_file.empty() ? synth::make_rig(cfg.source_rig) : load_rig(cfg.source_rig_file);
  if (static_cast<int>(rig.size()) != cfg.source_rig.views) throw ConfigError("source rig file view count mismatch");
  return rig;
}

std::vector<geometry::CameraView> target_rig(const RunConfig& cfg) {
  auto rig = cfg.target_rig_file.empty() ? synth::make_rig(cfg.target_rig) : load_rig(cfg.target_rig_file);
  if (static_cast<int>(rig.size()) != cfg.target_rig.views) throw ConfigError("target rig file view count mismatch");
  return rig;
}

uint64_t scene_seed(const RunConfig& cfg, synth::Domain domain, int split, int index) {
  return mix_seed(cfg.data_seed, static_cast<uint64_t>(domain == synth::Domain::kSource ? 0 : 1) * 4 + split,
                  static_cast<uint64_t>(index));
}

SceneData make_scene_data(const RunConfig& cfg, synth::Domain domain, uint64_t seed,
                          const std::vector<geometry::CameraView>& rig) {
  synth::SceneSpec spec;
  spec.seed = seed;
  spec.grid = cfg.grid;
  spec.layout = cfg.layout;
  spec.rig = rig;
  spec.domain = domain;
  const int H = cfg.source_rig.image_height, W = cfg.source_rig.image_width;
  const int h = cfg.feature_height(), w = cfg.feature_width(), s = cfg.stride();

  SceneData d;
  d.scene = synth::gen_scene(spec);
  auto render =
      synth::render_scene(d.scene, synth::DomainStyle::for_domain(domain), synth::Augment::kNone, mix_seed(seed, 1), H, W);
  d.images = std::move(render.images);
  d.labels = std::move(render.labels);
  d.depth = std::move(render.depth);
  d.vehicle_masks = std::move(render.vehicle_masks);

  const int n = static_cast<int>(rig.size());
  for (int v = 0; v < n; ++v) {
    const auto noisy = synth::corrupt_pseudo_labels(d.labels[static_cast<size_t>(v)], cfg.pseudo_noise,
                                                    mix_seed(seed, 2, static_cast<uint64_t>(v)));
    d.pseudo.push_back(vt::resize_labels(noisy, h, w));
  }
  d.pseudo_onehot = one_hot(d.pseudo, kNumClasses);

  d.depth_feat = Tensor({n, h, w});
  for (int v = 0; v < n; ++v)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const int r = std::min(H - 1, i * s + s / 2), c = std::min(W - 1, j * s + s / 2);
        d.depth_feat.at({v, i, j}) = d.depth.at({v, r, c});
      }

  d.bev_gt = synth::bev_ground_truth(d.scene, cfg.grid).reshaped({1, kNumClasses, cfg.grid.rows(), cfg.grid.cols()});
  return d;
}

Dataset build_dataset(const RunConfig& cfg) {
  cfg.validate();
  Dataset data;
  data.tmpl = geometry::build_frustum_template(cfg.feature_height(), cfg.feature_width(), cfg.stride(), cfg.bins);
  data.source_rig = source_rig(cfg);
  data.target_rig = target_rig(cfg);
  data.source_proj = vt::make_projection(data.tmpl, data.source_rig, cfg.grid);
  data.target_proj = vt::make_projection(data.tmpl, data.target_rig, cfg.grid);
  for (const auto& v : data.source_rig)
    data.source_footprints.push_back(
        geometry::footprint_of(geometry::rasterize_to_cells(geometry::unproject_to_ego(data.tmpl, v), cfg.grid),
                               cfg.grid));
  using synth::Domain;
  for (int i = 0; i < cfg.source_scenes; ++i)
    data.source.push_back(make_scene_data(cfg, Domain::kSource, scene_seed(cfg, Domain::kSource, 0, i), data.source_rig));
  for (int i = 0; i < cfg.target_scenes; ++i)
    data.target.push_back(make_scene_data(cfg, Domain::kTarget, scene_seed(cfg, Domain::kTarget, 0, i), data.target_rig));
  for (int i = 0; i < cfg.eval_scenes; ++i)
    data.eval.push_back(make_scene_data(cfg, Domain::kTarget, scene_seed(cfg, Domain::kTarget, 1, i), data.target_rig));
  return data;
}

// ---------------------------------------------------------------------------
// Loss report

std::vector<std::string> LossReport::columns() {
  return {"step",      "beta",     "loss_gt",   "loss_p_s",    "loss_y_s",    "loss_d",     "loss_pl",
          "loss_mix",  "loss_da",  "loss_p_t",  "loss_y_t",    "loss_source", "loss_target", "loss_total"};
}

std::vector<double> LossReport::values() const {
  return {static_cast<double>(step), beta, gt, perspective_s, dynamic_s, depth, pseudo, mix, augment,
          perspective_t, dynamic_t, source_total, target_total, total};
}

std::string LossReport::csv_row() const {
  std::string out = std::to_string(step);
  const auto v = values();
  for (size_t i = 1; i < v.size(); ++i) out += "," + num(v[i]);
  return out;
}

LossReport LossTerms::report(int64_t step, double beta) const {
  LossReport r;
  r.step = step;
  r.beta = beta;
  r.gt = gt->value[0];
  r.perspective_s = perspective_s->value[0];
  r.dynamic_s = dynamic_s->value[0];
  r.depth = depth->value[0];
  r.pseudo = pseudo->value[0];
  r.mix = mix->value[0];
  r.augment = augment->value[0];
  r.perspective_t = perspective_t->value[0];
  r.dynamic_t = dynamic_t->value[0];
  r.source_total = source_total->value[0];
  r.target_total = target_total->value[0];
  r.total = total->value[0];
  return r;
}

// ---------------------------------------------------------------------------
// Step

StepBatch draw_batch(const RunConfig& cfg, const Dataset& data, int64_t step) {
  require(!data.source.empty() && !data.target.empty(), "draw_batch: empty dataset");
  const uint64_t h = mix_seed(cfg.seed, 0x5eb, static_cast<uint64_t>(step));
  StepBatch b;
  b.source_index = static_cast<int>(h % data.source.size());
  b.target_index = static_cast<int>(mix_seed(h, 1) % data.target.size());
  b.aug_seed = mix_seed(h, 2);
  return b;
}

StepInputs prepare_step(const mt::TrainState& state, const Dataset& data, const RunConfig& cfg,
                        const StepBatch& batch) {
  require(batch.source_index >= 0 && batch.source_index < static_cast<int>(data.source.size()),
          "prepare_step: source index out of range");
  require(batch.target_index >= 0 && batch.target_index < static_cast<int>(data.target.size()),
          "prepare_step: target index out of range");
  StepInputs in;
  in.source = &data.source[static_cast<size_t>(batch.source_index)];
  in.target = &data.target[static_cast<size_t>(batch.target_index)];
  in.source_images = synth::augment_image(in.source->images, synth::Augment::kWeak, mix_seed(batch.aug_seed, 1));
  in.target_weak = synth::augment_image(in.target->images, synth::Augment::kWeak, mix_seed(batch.aug_seed, 2));
  in.target_strong = synth::augment_image(in.target->images, synth::Augment::kStrong, mix_seed(batch.aug_seed, 3));
  in.beta = mt::rampup_beta(state.step, state.total_steps, state.beta_max);
  in.fxda = cfg.fxda;
  in.fxda.seed = mix_seed(batch.aug_seed, 4);
  if (cfg.toggles.source_only) return in;

  in.pseudo_bev = mt::teacher_pseudo_labels(state, in.target_weak, data.target_proj);
  if (cfg.toggles.cdfm) {
    const int H = cfg.source_rig.image_height, W = cfg.source_rig.image_width;
    const auto masks = mixing::InstanceMaskSet::from_masks(H, W, in.source->vehicle_masks);
    const auto plan = mixing::plan_mixing(masks);
    if (!plan.mix_views.empty()) {
      in.has_mix = true;
      in.mixed_images = mixing::mix_images(plan, masks, in.source_images, in.target_weak);
      const auto fields = mixing::mix_projection_params(plan, masks, data.source_rig, data.target_rig);
      in.mix_proj = vt::make_projection(data.tmpl, fields, cfg.grid);
      in.mix_labels = mixing::mix_bev_labels(plan, in.source->bev_gt, in.pseudo_bev, data.source_footprints,
                                             static_cast<int>(SemanticClass::kVehicle));
    }
  }
  return in;
}

LossTerms compose_losses(const nn::BoundModel& student, const StepInputs& in, const Dataset& data,
                         const RunConfig& cfg, const DynamicTargets* fixed) {
  const auto& tg = cfg.toggles;
  const bool adapt = !tg.source_only;
  const nn::Shape bev_shape{1, kNumClasses, cfg.grid.rows(), cfg.grid.cols()};
  LossTerms t;
  t.perspective_s = t.dynamic_s = t.pseudo = t.mix = t.augment = t.perspective_t = t.dynamic_t = zero_scalar();

  const BevPass src = forward_bev(student, nn::constant(in.source_images), data.source_proj);
  t.gt = loss::task_loss(src.logits, in.source->bev_gt);
  t.depth = cfg.depth_loss ? loss::depth_loss(src.dist, in.source->depth_feat, cfg.bins) : zero_scalar();
  if (adapt && tg.sgps)
    t.perspective_s = loss::dice_loss(nn::sigmoid(nn::pv_head(student, src.enc.features)), in.source->pseudo_onehot,
                                      cfg.weights.dice_eps);
  if (adapt && tg.dacl) {
    t.targets.source =
        fixed ? fixed->source
              : vt::mask_view_transform(in.source->pseudo, src.dist->value, data.source_proj, kNumClasses)
                    .clamped()
                    .reshaped(bev_shape);
    t.dynamic_s = loss::l2_map_loss(nn::aux_head(student, src.bev), t.targets.source);
  }

  if (adapt) {
    const BevPass strong = forward_bev(student, nn::constant(in.target_strong), data.target_proj);
    t.pseudo = loss::l2_map_loss(nn::sigmoid(strong.logits), in.pseudo_bev);
    if (tg.sgps)
      t.perspective_t = loss::dice_loss(nn::sigmoid(nn::pv_head(student, strong.enc.features)),
                                        in.target->pseudo_onehot, cfg.weights.dice_eps);
    if (tg.dacl) {
      t.targets.target =
          fixed ? fixed->target
                : vt::mask_view_transform(in.target->pseudo, strong.dist->value, data.target_proj, kNumClasses)
                      .clamped()
                      .reshaped(bev_shape);
      t.dynamic_t = loss::l2_map_loss(nn::aux_head(student, strong.bev), t.targets.target);
    }
    if (tg.cdfm && in.has_mix) {
      const BevPass mixed = forward_bev(student, nn::constant(in.mixed_images), in.mix_proj);
      t.mix = loss::l2_map_loss(nn::sigmoid(mixed.logits), in.mix_labels);
    }
    if (tg.fxda) {
      const auto enc = nn::encode(student, nn::constant(in.target_weak));
      const Var weak_bev = vt::view_transform(enc.features, enc.depth_logits, data.target_proj);
      const Var exchanged = fxda::fxda_apply(weak_bev, strong.bev, in.fxda);
      t.augment = loss::l2_map_loss(nn::sigmoid(nn::bev_decoder(student, exchanged)), in.pseudo_bev);
    }
  }

  t.source_total = loss::source_total(loss::SourceParts<Var>{t.gt, t.perspective_s, t.dynamic_s, t.depth}, cfg.weights);
  t.target_total =
      adapt ? loss::target_total(loss::TargetParts<Var>{t.pseudo, t.mix, t.augment, t.perspective_t, t.dynamic_t},
                                 cfg.weights, in.beta)
            : zero_scalar();
  t.total = t.source_total + t.target_total;
  return t;
}

LossReport train_step(mt::TrainState& state, nn::Optimizer& opt, const Dataset& data, const RunConfig& cfg,
                      const StepBatch& batch) {
  if (!state.teacher_initialized) throw StateError("train_step: state is not initialized");
  if (state.step >= state.total_steps) throw StateError("train_step: schedule already complete");
  const StepInputs in = prepare_step(state, data, cfg, batch);
  const nn::BoundModel student(state.student, true);
  const LossTerms terms = compose_losses(student, in, data, cfg);
  const LossReport report = terms.report(state.step, in.beta);

  const auto names = LossReport::columns();
  const auto values = report.values();
  for (size_t i = 1; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw NumericError("non-finite " + names[i] + " at step " + std::to_string(state.step));

  nn::backward(terms.total);
  const auto grads = nn::collect_grads(student.leaves());
  for (size_t i = 0; i < grads.size(); ++i)
    if (!grads[i].all_finite())
      throw NumericError("non-finite gradient for " + state.student.entries()[i].name + " at step " +
                         std::to_string(state.step));
  opt.step(state.student, grads);
  mt::ema_update(state);
  ++state.step;
  return report;
}

// ---------------------------------------------------------------------------
// Evaluation and runs

EvalResult evaluate(const nn::ParamSet& params, const std::vector<SceneData>& scenes, const vt::Projection& proj) {
  metrics::IouAccumulator acc(kNumClasses);
  for (const auto& s : scenes) {
    Tensor scores = predict_bev(params, s.images, proj);
    for (double& v : scores.values()) v = v > 0.5 ? 1.0 : 0.0;
    const nn::Shape shape{kNumClasses, proj.grid.rows(), proj.grid.cols()};
    acc.add(scores.reshaped(shape), s.bev_gt.reshaped(shape));
  }
  return {acc.per_class(), acc.mean()};
}

std::string eval_csv(const EvalResult& result) {
  std::string out = "class,iou\n";
  for (size_t k = 0; k < result.per_class.size(); ++k)
    out += std::string(class_name(static_cast<int>(k))) + "," + num(result.per_class[k]) + "\n";
  return out + "mIoU," + num(result.miou) + "\n";
}

std::string loss_csv(const std::vector<LossReport>& log) {
  std::string out;
  const auto cols = LossReport::columns();
  for (size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  for (const auto& r : log) out += r.csv_row() + "\n";
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << text;
}

std::unique_ptr<nn::Optimizer> make_optimizer(const RunConfig& cfg) {
  if (cfg.optimizer == "adam") return std::make_unique<nn::Adam>(cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm);
  return std::make_unique<nn::Sgd>(cfg.lr, cfg.momentum, cfg.clip_norm);
}

TrainResult run_train(const RunConfig& cfg, const Dataset& data) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  result.state = mt::init_train_state(nn::init_model(cfg.dims, cfg.seed), cfg.total_steps, cfg.weights.alpha,
                                      cfg.weights.beta_max);
  auto opt = make_optimizer(cfg);
  for (int64_t step = 0; step < cfg.total_steps; ++step) {
    result.log.push_back(train_step(result.state, *opt, data, cfg, draw_batch(cfg, data, step)));
    if (cfg.log_every > 0 && (step + 1) % cfg.log_every == 0)
      std::clog << "[" << cfg.toggles.label() << " seed " << cfg.seed << "] step " << step + 1 << "/"
                << cfg.total_steps << " loss " << result.log.back().total << "\n";
  }
  result.eval = evaluate(result.state.teacher, data.eval, data.target_proj);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_text(cfg.out_dir + "/loss.csv", loss_csv(result.log));
    write_text(cfg.out_dir + "/metrics.csv", eval_csv(result.eval));
    write_text(cfg.out_dir + "/config.cfg", cfg.to_config().to_text());
    const std::string meta = cfg.to_config().to_text();
    io::save_checkpoint(cfg.out_dir + "/student", result.state.student, meta);
    io::save_checkpoint(cfg.out_dir + "/teacher", result.state.teacher, meta);
  }
  return result;
}

TrainResult run_train(const RunConfig& cfg) { return run_train(cfg, build_dataset(cfg)); }

std::vector<Toggles> ablation_rows() {
  Toggles source{false, false, false, false, true};
  Toggles mt{false, false, false, false, false};
  Toggles sgps = mt;
  sgps.sgps = true;
  Toggles sgps_fxda = sgps;
  sgps_fxda.fxda = true;
  Toggles sgps_dacl_fxda = sgps_fxda;
  sgps_dacl_fxda.dacl = true;
  return {source, mt, sgps, sgps_fxda, sgps_dacl_fxda, Toggles{}};
}

std::vector<AblationRow> ablation_runner(const RunConfig& cfg, const std::vector<Toggles>& rows) {
  const Dataset data = build_dataset(cfg);
  std::vector<AblationRow> out;
  for (const auto& t : rows) {
    RunConfig c = cfg;
    c.toggles = t;
    if (!cfg.out_dir.empty()) c.out_dir = cfg.out_dir + "/" + t.label();
    out.push_back({t, run_train(c, data).eval});
  }
  if (!cfg.out_dir.empty()) write_text(cfg.out_dir + "/ablation.csv", ablation_csv(out));
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "MT,SGPS,DACL,FXDA,CDFM";
  for (int k = 0; k < kNumClasses; ++k) out += std::string(",") + class_name(k);
  out += ",mIoU\n";
  for (const auto& r : rows) {
    const auto& t = r.toggles;
    const bool mt = !t.source_only;
    out += std::to_string(mt) + "," + std::to_string(mt && t.sgps) + "," + std::to_string(mt && t.dacl) + "," +
           std::to_string(mt && t.fxda) + "," + std::to_string(mt && t.cdfm);
    for (double v : r.eval.per_class) out += "," + num(v);
    out += "," + num(r.eval.miou) + "\n";
  }
  return out;
}

}  // namespace bevda::harness
