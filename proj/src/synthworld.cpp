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

#include "bevda/synthworld.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "bevda/errors.hpp"
#include "bevda/seed.hpp"

namespace bevda::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

const Eigen::Vector3d kSky(0.55, 0.70, 0.90);
const Eigen::Vector3d kGround(0.35, 0.45, 0.30);
const Eigen::Vector3d kClassColor[kNumClasses] = {
    {0.30, 0.30, 0.32},  // drivable
    {0.80, 0.75, 0.20},  // boundary
    {0.95, 0.95, 0.95},  // divider
    {0.20, 0.55, 0.85},  // crossing
    {0.80, 0.15, 0.15},  // vehicle
};

Eigen::Matrix3d gray_axis_rotation(double degrees) {
  return Eigen::AngleAxisd(degrees * kPi / 180.0, Eigen::Vector3d::Ones().normalized()).toRotationMatrix();
}

bool boxes_overlap(const VehicleBox& a, const VehicleBox& b, double margin) {
  return a.x_min < b.x_max + margin && b.x_min < a.x_max + margin && a.y_min < b.y_max + margin &&
         b.y_min < a.y_max + margin;
}

// Slab test; returns entry distance and whether the entry face is the top.
std::optional<std::pair<double, bool>> intersect_box(const VehicleBox& box, const Eigen::Vector3d& o,
                                                     const Eigen::Vector3d& d) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  int entry_axis = -1;
  const double lo[3] = {box.x_min, box.y_min, 0.0};
  const double hi[3] = {box.x_max, box.y_max, box.height};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - o[a]) / d[a], tb = (hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    if (ta > t0) {
      t0 = ta;
      entry_axis = a;
    }
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (entry_axis < 0 || t0 <= 0.0) return std::nullopt;
  return std::make_pair(t0, entry_axis == 2);
}

}  // namespace

std::string domain_name(Domain d) { return d == Domain::kSource ? "source" : "target"; }

DomainStyle DomainStyle::source() { return {0.0, 1.0, 0.02}; }
DomainStyle DomainStyle::target() { return {90.0, 0.7, 0.05}; }

std::vector<geometry::CameraView> make_rig(const RigSpec& spec) {
  if (spec.views < 1) throw ConfigError("rig: need at least one view");
  if (!(spec.height > 0.0)) throw ConfigError("rig: camera height must be positive");
  if (!(spec.hfov_deg > 0.0 && spec.hfov_deg < 180.0)) throw ConfigError("rig: hfov must lie in (0, 180)");
  const double f = 0.5 * spec.image_width / std::tan(0.5 * spec.hfov_deg * kPi / 180.0);
  std::vector<geometry::CameraView> rig;
  for (int v = 0; v < spec.views; ++v) {
    const double yaw = (spec.yaw_offset_deg + 360.0 * v / spec.views) * kPi / 180.0;
    rig.push_back(geometry::make_camera(f, f, 0.5 * spec.image_width, spec.principal_row * spec.image_height, yaw,
                                        spec.pitch_deg * kPi / 180.0, Eigen::Vector3d(0.0, 0.0, spec.height),
                                        spec.preproc));
    rig.back().validate();
  }
  return rig;
}

void SceneSpec::validate() const {
  grid.validate();
  if (divider_count > 3) throw ConfigError("scene: at most 3 dividers");
  if (crossing_count > 2) throw ConfigError("scene: at most 2 crossings");
  if (vehicle_count > 16) throw ConfigError("scene: at most 16 vehicles");
  for (const auto& v : rig) {
    v.validate();
    if (!(v.translation.z() > 0.0)) throw ConfigError("scene: camera must be above the ground plane");
  }
}

int8_t Scene::ground_class(double x, double y) const {
  const auto& L = spec.layout;
  const double dy = std::abs(y - main_center_y);
  const bool in_main = dy < 0.5 * main_width;
  const bool in_cross = has_cross && std::abs(x - cross_center_x) < 0.5 * cross_width;
  if (!in_main && !in_cross) return kBackground;
  if (in_main) {
    for (double yd : divider_y)
      if (std::abs(y - yd) < 0.5 * L.divider_width) return static_cast<int8_t>(SemanticClass::kDivider);
    for (double xc : crossing_x)
      if (std::abs(x - xc) < 0.5 * L.crossing_depth) return static_cast<int8_t>(SemanticClass::kCrossing);
    if (!in_cross && dy >= 0.5 * main_width - L.boundary_width) return static_cast<int8_t>(SemanticClass::kBoundary);
  }
  if (in_cross && !in_main && std::abs(x - cross_center_x) >= 0.5 * cross_width - L.boundary_width)
    return static_cast<int8_t>(SemanticClass::kBoundary);
  return static_cast<int8_t>(SemanticClass::kDrivable);
}

int8_t Scene::surface_class(double x, double y) const {
  for (const auto& v : vehicles)
    if (v.contains_xy(x, y)) return static_cast<int8_t>(SemanticClass::kVehicle);
  return ground_class(x, y);
}

bool Scene::operator==(const Scene& o) const {
  if (vehicles.size() != o.vehicles.size()) return false;
  for (size_t i = 0; i < vehicles.size(); ++i) {
    const auto &a = vehicles[i], &b = o.vehicles[i];
    if (a.x_min != b.x_min || a.x_max != b.x_max || a.y_min != b.y_min || a.y_max != b.y_max || a.height != b.height)
      return false;
  }
  return main_center_y == o.main_center_y && main_width == o.main_width && has_cross == o.has_cross &&
         cross_center_x == o.cross_center_x && cross_width == o.cross_width && divider_y == o.divider_y &&
         crossing_x == o.crossing_x && spec.rig == o.spec.rig && spec.seed == o.spec.seed;
}

Scene gen_scene(const SceneSpec& spec) {
  spec.validate();
  const auto& L = spec.layout;
  const auto& g = spec.grid;
  std::mt19937_64 rng(mix_seed(spec.seed));
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto integer = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  Scene s;
  s.spec = spec;
  s.main_width = uniform(L.road_width_min, L.road_width_max);
  s.main_center_y = uniform(-2.0, 2.0);
  const bool cross_draw = uniform(0.0, 1.0) < 0.5;
  s.has_cross = spec.cross_road < 0 ? cross_draw : spec.cross_road == 1;
  s.cross_center_x = uniform(0.6 * g.x_min, 0.6 * g.x_max);
  s.cross_width = uniform(L.cross_road_width_min, L.cross_road_width_max);

  const int dividers = spec.divider_count < 0 ? integer(0, 3) : spec.divider_count;
  for (int i = 0; i < dividers; ++i)
    s.divider_y.push_back(s.main_center_y - 0.5 * s.main_width + s.main_width * (i + 1) / (dividers + 1));

  const int crossings = spec.crossing_count < 0 ? integer(0, 2) : spec.crossing_count;
  for (int attempt = 0; attempt < 200 && static_cast<int>(s.crossing_x.size()) < crossings; ++attempt) {
    const double x = uniform(g.x_min + L.crossing_depth, g.x_max - L.crossing_depth);
    bool ok = !s.has_cross || std::abs(x - s.cross_center_x) > 0.5 * s.cross_width + L.crossing_depth;
    for (double other : s.crossing_x) ok = ok && std::abs(x - other) > L.crossing_depth + 2.0;
    if (ok) s.crossing_x.push_back(x);
  }

  const int vehicles = spec.vehicle_count < 0 ? integer(2, 8) : spec.vehicle_count;
  const double margin = L.boundary_width + 0.2;
  for (int attempt = 0; attempt < 500 && static_cast<int>(s.vehicles.size()) < vehicles; ++attempt) {
    VehicleBox box;
    box.height = L.vehicle_height;
    const bool on_cross = s.has_cross && uniform(0.0, 1.0) < 0.3;
    if (!on_cross) {
      const double x = uniform(g.x_min + L.vehicle_length, g.x_max - L.vehicle_length);
      const double half = 0.5 * s.main_width - margin - 0.5 * L.vehicle_width;
      const double y = s.main_center_y + uniform(-half, half);
      box.x_min = x - 0.5 * L.vehicle_length;
      box.x_max = x + 0.5 * L.vehicle_length;
      box.y_min = y - 0.5 * L.vehicle_width;
      box.y_max = y + 0.5 * L.vehicle_width;
    } else {
      const double y = uniform(g.y_min + L.vehicle_length, g.y_max - L.vehicle_length);
      const double half = 0.5 * s.cross_width - margin - 0.5 * L.vehicle_width;
      const double x = s.cross_center_x + uniform(-half, half);
      box.x_min = x - 0.5 * L.vehicle_width;
      box.x_max = x + 0.5 * L.vehicle_width;
      box.y_min = y - 0.5 * L.vehicle_length;
      box.y_max = y + 0.5 * L.vehicle_length;
    }
    const VehicleBox ego{-4.0, 4.0, -4.0, 4.0, 0.0};
    bool ok = !boxes_overlap(box, ego, 0.0) && box.x_min >= g.x_min && box.x_max <= g.x_max &&
              box.y_min >= g.y_min && box.y_max <= g.y_max;
    for (const auto& other : s.vehicles) ok = ok && !boxes_overlap(box, other, 0.5);
    // Vehicles stay inside lanes, off the divider paint.
    for (double yd : s.divider_y)
      ok = ok && (box.y_max <= yd - 0.5 * L.divider_width || box.y_min >= yd + 0.5 * L.divider_width);
    if (ok) s.vehicles.push_back(box);
  }
  return s;
}

RenderedView render_view(const Scene& scene, const geometry::CameraView& view, const DomainStyle& style, Augment aug,
                         uint64_t seed, int image_height, int image_width) {
  view.validate();
  if (!(view.translation.z() > 0.0)) throw ConfigError("render: camera must be above the ground plane");
  if (image_height < 1 || image_width < 1) throw ConfigError("render: image dims must be positive");

  const Eigen::Matrix3d t_inv = view.preproc.inverse();
  const Eigen::Matrix3d k_inv = view.intrinsics.inverse();
  const Eigen::Matrix3d palette_rot = gray_axis_rotation(style.palette_rotation_deg);
  const Eigen::Vector3d origin = view.translation;
  std::mt19937_64 noise_rng(mix_seed(seed ^ 0x5eedULL));
  std::normal_distribution<double> noise(0.0, 1.0);

  RenderedView out;
  out.image = Tensor({3, image_height, image_width});
  out.labels = LabelMap(image_height, image_width);
  out.depth = Tensor({image_height, image_width});
  out.vehicle_mask.assign(static_cast<size_t>(image_height) * image_width, 0);
  const int64_t plane = static_cast<int64_t>(image_height) * image_width;

  for (int r = 0; r < image_height; ++r)
    for (int c = 0; c < image_width; ++c) {
      Eigen::Vector3d raw = t_inv * Eigen::Vector3d(c + 0.5, r + 0.5, 1.0);
      raw /= raw.z();
      const Eigen::Vector3d dir = view.rotation * (k_inv * raw);

      double best_t = std::numeric_limits<double>::infinity();
      int8_t cls = kBackground;
      bool vehicle = false, top = false;
      if (dir.z() < 0.0) {
        best_t = -origin.z() / dir.z();
        const Eigen::Vector3d hit = origin + best_t * dir;
        cls = scene.ground_class(hit.x(), hit.y());
      }
      for (const auto& box : scene.vehicles) {
        if (auto h = intersect_box(box, origin, dir); h && h->first < best_t) {
          best_t = h->first;
          cls = static_cast<int8_t>(SemanticClass::kVehicle);
          vehicle = true;
          top = h->second;
        }
      }

      const int64_t p = static_cast<int64_t>(r) * image_width + c;
      Eigen::Vector3d color;
      if (std::isfinite(best_t)) {
        out.depth[p] = best_t;
        color = cls == kBackground ? kGround : kClassColor[cls];
        if (vehicle && !top) color *= 0.7;
      } else {
        out.depth[p] = 0.0;
        color = kSky;
      }
      out.labels.data[static_cast<size_t>(p)] = cls;
      out.vehicle_mask[static_cast<size_t>(p)] = vehicle ? 1 : 0;
      color = style.illumination * (palette_rot * color);
      for (int ch = 0; ch < 3; ++ch)
        out.image[ch * plane + p] = std::clamp(color[ch] + style.noise_sigma * noise(noise_rng), 0.0, 1.0);
    }

  if (aug != Augment::kNone) out.image = augment_image(out.image, aug, mix_seed(seed ^ 0xa06ULL));
  return out;
}

Tensor augment_image(const Tensor& image, Augment aug, uint64_t seed) {
  if (aug == Augment::kNone) return image;
  require(image.rank() >= 3 && image.dim(-3) == 3, "augment: expected [...,3,H,W]");
  const int64_t plane = image.dim(-1) * image.dim(-2);
  const int64_t count = image.size() / (3 * plane);
  std::mt19937_64 rng(mix_seed(seed));
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  std::normal_distribution<double> noise(0.0, 1.0);

  Tensor out(image.shape());
  for (int64_t n = 0; n < count; ++n) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity() * uniform(0.9, 1.1);
    const bool strong = aug == Augment::kStrong;
    if (strong) {
      Eigen::Matrix3d jitter;
      for (int i = 0; i < 9; ++i) jitter(i / 3, i % 3) = uniform(-0.1, 0.1);
      const Eigen::Vector3d gains(uniform(0.8, 1.2), uniform(0.8, 1.2), uniform(0.8, 1.2));
      m = gains.asDiagonal() * (Eigen::Matrix3d::Identity() + jitter) * m;
    }
    const double* in = image.data() + n * 3 * plane;
    double* o = out.data() + n * 3 * plane;
    for (int64_t p = 0; p < plane; ++p) {
      const Eigen::Vector3d c(in[p], in[plane + p], in[2 * plane + p]);
      const Eigen::Vector3d a = m * c;
      for (int ch = 0; ch < 3; ++ch) {
        const double jitter = strong ? 0.03 * noise(rng) : 0.0;
        o[ch * plane + p] = std::clamp(a[ch] + jitter, 0.0, 1.0);
      }
    }
  }
  return out;
}

Tensor bev_ground_truth(const Scene& scene, const geometry::BevGrid& grid) {
  grid.validate();
  Tensor gt({kNumClasses, grid.rows(), grid.cols()});
  const int64_t cells = grid.cell_count();
  for (int r = 0; r < grid.rows(); ++r)
    for (int c = 0; c < grid.cols(); ++c) {
      const auto center = grid.cell_center(r, c);
      const int8_t cls = scene.surface_class(center.x(), center.y());
      if (cls != kBackground) gt[cls * cells + static_cast<int64_t>(r) * grid.cols() + c] = 1.0;
    }
  return gt;
}

std::vector<uint8_t> boundary_cells(const Scene& scene, const geometry::BevGrid& grid, double margin) {
  require(margin >= 0.0, "boundary_cells: margin must be non-negative");
  // Every class edge is axis aligned, so the surface class is constant on the
  // sub-rectangles cut out by the edge coordinates.
  const auto& L = scene.spec.layout;
  std::vector<double> xs, ys;
  for (double s : {-1.0, 1.0}) {
    ys.push_back(scene.main_center_y + s * 0.5 * scene.main_width);
    ys.push_back(scene.main_center_y + s * (0.5 * scene.main_width - L.boundary_width));
    for (double yd : scene.divider_y) ys.push_back(yd + s * 0.5 * L.divider_width);
    for (double xc : scene.crossing_x) xs.push_back(xc + s * 0.5 * L.crossing_depth);
    if (scene.has_cross) {
      xs.push_back(scene.cross_center_x + s * 0.5 * scene.cross_width);
      xs.push_back(scene.cross_center_x + s * (0.5 * scene.cross_width - L.boundary_width));
    }
  }
  for (const auto& v : scene.vehicles) {
    xs.insert(xs.end(), {v.x_min, v.x_max});
    ys.insert(ys.end(), {v.y_min, v.y_max});
  }
  // Midpoints of the pieces of [lo, hi) between the cut coordinates.
  auto pieces = [](const std::vector<double>& cuts, double lo, double hi) {
    std::vector<double> edges{lo};
    for (double c : cuts)
      if (c > lo && c < hi) edges.push_back(c);
    edges.push_back(hi);
    std::sort(edges.begin(), edges.end());
    std::vector<double> mids;
    for (size_t i = 0; i + 1 < edges.size(); ++i)
      if (edges[i + 1] > edges[i]) mids.push_back(0.5 * (edges[i] + edges[i + 1]));
    return mids;
  };

  std::vector<uint8_t> mask(static_cast<size_t>(grid.cell_count()), 0);
  for (int r = 0; r < grid.rows(); ++r) {
    const double x0 = grid.x_min + r * grid.resolution;
    const auto mx = pieces(xs, x0 - margin, x0 + grid.resolution + margin);
    for (int c = 0; c < grid.cols(); ++c) {
      const double y0 = grid.y_min + c * grid.resolution;
      const auto my = pieces(ys, y0 - margin, y0 + grid.resolution + margin);
      const int8_t first = scene.surface_class(mx[0], my[0]);
      bool mixed = false;
      for (size_t a = 0; a < mx.size() && !mixed; ++a)
        for (size_t b = 0; b < my.size() && !mixed; ++b) mixed = scene.surface_class(mx[a], my[b]) != first;
      mask[static_cast<size_t>(r) * grid.cols() + c] = mixed ? 1 : 0;
    }
  }
  return mask;
}

LabelMap corrupt_pseudo_labels(const LabelMap& labels, double noise, uint64_t seed) {
  require(noise >= 0.0 && noise <= 1.0, "corrupt_pseudo_labels: noise must lie in [0, 1]");
  LabelMap out = labels;
  const auto n = static_cast<int64_t>(labels.size());
  const auto budget = std::min<int64_t>(n, std::llround(noise * static_cast<double>(n)));
  if (budget == 0) return out;
  std::mt19937_64 rng(mix_seed(seed));
  std::vector<uint8_t> changed(static_cast<size_t>(n), 0);
  int64_t done = 0;

  // Boundary jitter: a pixel next to another class takes that neighbour's class.
  std::vector<int64_t> edge;
  const int h = labels.height, w = labels.width;
  auto neighbours = [&](int r, int c) {
    std::vector<int8_t> out_n;
    const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      const int rr = r + dr[k], cc = c + dc[k];
      if (rr >= 0 && rr < h && cc >= 0 && cc < w && labels.at(rr, cc) != labels.at(r, c))
        out_n.push_back(labels.at(rr, cc));
    }
    return out_n;
  };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (!neighbours(r, c).empty()) edge.push_back(static_cast<int64_t>(r) * w + c);
  std::shuffle(edge.begin(), edge.end(), rng);
  const int64_t edge_budget = std::min<int64_t>(budget / 2, static_cast<int64_t>(edge.size()));
  for (int64_t i = 0; i < edge_budget; ++i) {
    const int64_t p = edge[static_cast<size_t>(i)];
    const auto nb = neighbours(static_cast<int>(p / w), static_cast<int>(p % w));
    out.data[static_cast<size_t>(p)] = nb[std::uniform_int_distribution<size_t>(0, nb.size() - 1)(rng)];
    changed[static_cast<size_t>(p)] = 1;
    ++done;
  }

  // Uniform flips to a different class (background included) fill the rest.
  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int64_t p : order) {
    if (done >= budget) break;
    if (changed[static_cast<size_t>(p)]) continue;
    const int8_t cur = out.data[static_cast<size_t>(p)];
    int8_t next = cur;
    while (next == cur) next = static_cast<int8_t>(std::uniform_int_distribution<int>(-1, kNumClasses - 1)(rng));
    out.data[static_cast<size_t>(p)] = next;
    changed[static_cast<size_t>(p)] = 1;
    ++done;
  }
  return out;
}

SceneRender render_scene(const Scene& scene, const DomainStyle& style, Augment aug, uint64_t seed, int image_height,
                         int image_width) {
  const auto& rig = scene.spec.rig;
  require(!rig.empty(), "render_scene: scene has no cameras");
  const int n = static_cast<int>(rig.size());
  SceneRender out;
  out.images = Tensor({n, 3, image_height, image_width});
  out.depth = Tensor({n, image_height, image_width});
  const int64_t plane = static_cast<int64_t>(image_height) * image_width;
  for (int v = 0; v < n; ++v) {
    auto rv = render_view(scene, rig[static_cast<size_t>(v)], style, aug, mix_seed(seed + static_cast<uint64_t>(v)),
                          image_height, image_width);
    std::copy(rv.image.values().begin(), rv.image.values().end(), out.images.data() + v * 3 * plane);
    std::copy(rv.depth.values().begin(), rv.depth.values().end(), out.depth.data() + v * plane);
    out.labels.push_back(std::move(rv.labels));
    out.vehicle_masks.push_back(std::move(rv.vehicle_mask));
  }
  return out;
}

}  // namespace bevda::synth
