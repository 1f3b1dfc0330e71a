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

#include "bevda/geometry.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <string>

#include "bevda/errors.hpp"

namespace bevda::geometry {

namespace {

constexpr double kOrthoTol = 1e-9;

bool integral_ratio(double span, double res) {
  const double r = span / res;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

}  // namespace

void CameraView::validate() const {
  const auto& k = intrinsics;
  if (!(k(0, 0) > 0.0 && k(1, 1) > 0.0)) throw GeometryError("intrinsics: focal lengths must be positive");
  if (k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0)
    throw GeometryError("intrinsics: matrix must be upper-triangular");
  if (k(2, 2) != 1.0) throw GeometryError("intrinsics: K[2,2] must be 1");
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= kOrthoTol)) throw GeometryError("extrinsics: rotation is not orthonormal");
  if (!(rotation.determinant() > 0.0)) throw GeometryError("extrinsics: rotation must be proper");
  if (!translation.allFinite()) throw GeometryError("extrinsics: translation must be finite");
  const double det = preproc.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12) throw GeometryError("preproc: transform is singular");
}

Eigen::Matrix3d CameraView::pixel_to_ego() const {
  const double det = preproc.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12) throw GeometryError("preproc: transform is singular");
  return rotation * intrinsics.inverse() * preproc.inverse();
}

Eigen::Vector3d CameraView::unproject(double u, double v, double depth) const {
  return pixel_to_ego() * Eigen::Vector3d(u * depth, v * depth, depth) + translation;
}

Eigen::Vector3d CameraView::project(const Eigen::Vector3d& ego) const {
  const Eigen::Vector3d x = preproc * intrinsics * rotation.transpose() * (ego - translation);
  return {x.x() / x.z(), x.y() / x.z(), x.z()};
}

bool CameraView::operator==(const CameraView& other) const {
  return intrinsics == other.intrinsics && rotation == other.rotation && translation == other.translation &&
         preproc == other.preproc;
}

CameraView make_camera(double fx, double fy, double cx, double cy, double yaw, double pitch,
                       const Eigen::Vector3d& position, const Eigen::Matrix3d& preproc) {
  CameraView view;
  view.intrinsics << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  const Eigen::Vector3d forward(std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), -std::sin(pitch));
  const Eigen::Vector3d right(std::sin(yaw), -std::cos(yaw), 0.0);
  const Eigen::Vector3d down = forward.cross(right);
  view.rotation.col(0) = right;
  view.rotation.col(1) = down;
  view.rotation.col(2) = forward;
  view.translation = position;
  view.preproc = preproc;
  return view;
}

void DepthBins::validate() const {
  if (!(d_min > 0.0 && d_max > d_min)) throw ConfigError("depth bins: require 0 < d_min < d_max");
  if (count < 1) throw ConfigError("depth bins: count must be positive");
}

std::optional<int> DepthBins::bin_of(double d) const {
  if (!std::isfinite(d) || d < d_min || d >= d_max) return std::nullopt;
  const int k = static_cast<int>(std::floor((d - d_min) / width()));
  return std::clamp(k, 0, count - 1);
}

void BevGrid::validate() const {
  if (!(resolution > 0.0)) throw ConfigError("bev grid: resolution must be positive");
  if (!(x_max > x_min && y_max > y_min)) throw ConfigError("bev grid: empty range");
  if (!integral_ratio(x_max - x_min, resolution) || !integral_ratio(y_max - y_min, resolution))
    throw ConfigError("bev grid: range must be an integer multiple of the resolution");
}

int BevGrid::rows() const { return static_cast<int>(std::lround((x_max - x_min) / resolution)); }
int BevGrid::cols() const { return static_cast<int>(std::lround((y_max - y_min) / resolution)); }

std::optional<BevCell> BevGrid::cell_of(double x, double y) const {
  if (!(x >= x_min && x < x_max && y >= y_min && y < y_max)) return std::nullopt;
  const int r = static_cast<int>(std::floor((x - x_min) / resolution));
  const int c = static_cast<int>(std::floor((y - y_min) / resolution));
  // Rounding in the division can land exactly on the upper edge.
  if (r < 0 || r >= rows() || c < 0 || c >= cols()) return std::nullopt;
  return BevCell{r, c};
}

Eigen::Vector2d BevGrid::cell_center(int row, int col) const {
  return {x_min + (row + 0.5) * resolution, y_min + (col + 0.5) * resolution};
}

FrustumTemplate build_frustum_template(int feat_h, int feat_w, double stride, const DepthBins& bins) {
  bins.validate();
  if (feat_h < 1 || feat_w < 1) throw ConfigError("frustum template: feature dims must be positive");
  if (!(stride > 0.0)) throw ConfigError("frustum template: stride must be positive");
  FrustumTemplate t;
  t.depth = bins.count;
  t.height = feat_h;
  t.width = feat_w;
  t.stride = stride;
  t.uvd.reserve(static_cast<size_t>(bins.count) * feat_h * feat_w);
  for (int k = 0; k < bins.count; ++k) {
    const double d = bins.center(k);
    for (int i = 0; i < feat_h; ++i)
      for (int j = 0; j < feat_w; ++j) t.uvd.emplace_back((j + 0.5) * stride, (i + 0.5) * stride, d);
  }
  return t;
}

PixelCameraField PixelCameraField::uniform(int height, int width, const CameraView& view) {
  PixelCameraField f;
  f.height = height;
  f.width = width;
  f.palette = {view};
  f.index.assign(static_cast<size_t>(height) * width, 0);
  return f;
}

const CameraView& PixelCameraField::at(int row, int col) const {
  require(row >= 0 && row < height && col >= 0 && col < width, "pixel camera field: index out of range");
  return palette[index[static_cast<size_t>(row) * width + col]];
}

FrustumCloud unproject_to_ego(const FrustumTemplate& tmpl, const CameraView& view) {
  view.validate();
  const Eigen::Matrix3d m = view.pixel_to_ego();
  FrustumCloud cloud{tmpl.depth, tmpl.height, tmpl.width, {}};
  cloud.points.reserve(tmpl.uvd.size());
  for (const auto& p : tmpl.uvd) cloud.points.push_back(m * Eigen::Vector3d(p.x() * p.z(), p.y() * p.z(), p.z()) + view.translation);
  return cloud;
}

FrustumCloud unproject_to_ego(const FrustumTemplate& tmpl, const PixelCameraField& field) {
  std::vector<Eigen::Matrix3d> mats;
  for (const auto& v : field.palette) {
    v.validate();
    mats.push_back(v.pixel_to_ego());
  }
  FrustumCloud cloud{tmpl.depth, tmpl.height, tmpl.width, {}};
  cloud.points.reserve(tmpl.uvd.size());
  for (const auto& p : tmpl.uvd) {
    const int row = std::clamp(static_cast<int>(std::floor(p.y())), 0, field.height - 1);
    const int col = std::clamp(static_cast<int>(std::floor(p.x())), 0, field.width - 1);
    const uint8_t id = field.index[static_cast<size_t>(row) * field.width + col];
    cloud.points.push_back(mats[id] * Eigen::Vector3d(p.x() * p.z(), p.y() * p.z(), p.z()) +
                           field.palette[id].translation);
  }
  return cloud;
}

int64_t CellAssignment::valid_count() const {
  return std::count_if(cells.begin(), cells.end(), [](int32_t c) { return c >= 0; });
}

CellAssignment rasterize_to_cells(const FrustumCloud& cloud, const BevGrid& grid) {
  CellAssignment out;
  out.cells.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    const auto cell = grid.cell_of(p.x(), p.y());
    out.cells.push_back(cell ? grid.flat(*cell) : -1);
  }
  return out;
}

std::vector<uint8_t> footprint_of(const CellAssignment& cells, const BevGrid& grid) {
  std::vector<uint8_t> mask(static_cast<size_t>(grid.cell_count()), 0);
  for (int32_t c : cells.cells)
    if (c >= 0) mask[static_cast<size_t>(c)] = 1;
  return mask;
}

std::vector<uint8_t> frustum_footprint(const CameraView& view, int feat_h, int feat_w, double stride,
                                       const DepthBins& bins, const BevGrid& grid) {
  const auto tmpl = build_frustum_template(feat_h, feat_w, stride, bins);
  return footprint_of(rasterize_to_cells(unproject_to_ego(tmpl, view), grid), grid);
}

}  // namespace bevda::geometry
