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

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <optional>
#include <vector>

namespace bevda::geometry {

/// Pinhole camera plus image preprocessing.
///
/// Frames: camera x right, y down, z forward; ego x forward, y left, z up.
/// `rotation`/`translation` map camera coordinates into the ego frame and
/// `preproc` maps raw-image pixels to final-image pixels. A pixel p covers the
/// continuous interval [p, p+1), so its center sits at p+0.5.
struct CameraView {
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Matrix3d preproc = Eigen::Matrix3d::Identity();

  /// Throws GeometryError when an invariant fails.
  void validate() const;

  /// R * K^-1 * T^-1: final-image homogeneous pixel scaled by depth -> ego offset.
  Eigen::Matrix3d pixel_to_ego() const;

  /// Ego point of final-image pixel (u, v) at camera depth d.
  Eigen::Vector3d unproject(double u, double v, double depth) const;

  /// (u, v, depth) of an ego point in final-image coordinates.
  Eigen::Vector3d project(const Eigen::Vector3d& ego) const;

  bool operator==(const CameraView& other) const;
};

/// Camera mounted at `height` above the ego origin, rotated by `yaw` about the
/// ego z axis and pitched down by `pitch` (radians).
CameraView make_camera(double fx, double fy, double cx, double cy, double yaw, double pitch,
                       const Eigen::Vector3d& position,
                       const Eigen::Matrix3d& preproc = Eigen::Matrix3d::Identity());

/// Uniform metric depth bins over [d_min, d_max).
struct DepthBins {
  double d_min = 1.0;
  double d_max = 25.0;
  int count = 24;

  void validate() const;
  double width() const { return (d_max - d_min) / count; }
  double center(int k) const { return d_min + (k + 0.5) * width(); }
  /// Bin holding depth d; nullopt outside [d_min, d_max) or for non-finite d.
  std::optional<int> bin_of(double d) const;
};

struct BevCell {
  int row = 0;
  int col = 0;
  bool operator==(const BevCell&) const = default;
};

/// Ego-centered ground grid. Rows run along ego x, columns along ego y; cell
/// (0,0) sits at (x_min, y_min). Cells are half-open [lo, hi).
struct BevGrid {
  double x_min = -25.0;
  double x_max = 25.0;
  double y_min = -25.0;
  double y_max = 25.0;
  double resolution = 0.5;

  void validate() const;
  int rows() const;
  int cols() const;
  int cell_count() const { return rows() * cols(); }
  std::optional<BevCell> cell_of(double x, double y) const;
  int flat(const BevCell& c) const { return c.row * cols() + c.col; }
  Eigen::Vector2d cell_center(int row, int col) const;
  bool operator==(const BevGrid&) const = default;
};

/// (u, v, d) for every (depth bin, feature row, feature column), laid out
/// depth-major: index = (k * height + i) * width + j.
struct FrustumTemplate {
  int depth = 0;
  int height = 0;
  int width = 0;
  double stride = 1.0;
  std::vector<Eigen::Vector3d> uvd;

  int64_t size() const { return static_cast<int64_t>(uvd.size()); }
  int64_t index(int k, int i, int j) const { return (static_cast<int64_t>(k) * height + i) * width + j; }
};

/// Feature pixel (i, j) samples the final image at ((j+0.5)*stride, (i+0.5)*stride).
FrustumTemplate build_frustum_template(int feat_h, int feat_w, double stride, const DepthBins& bins);

/// Camera parameters per final-image pixel. Stored as a small palette of
/// distinct views plus a per-pixel palette index.
struct PixelCameraField {
  int height = 0;
  int width = 0;
  std::vector<CameraView> palette;
  std::vector<uint8_t> index;

  static PixelCameraField uniform(int height, int width, const CameraView& view);
  const CameraView& at(int row, int col) const;
};

struct FrustumCloud {
  int depth = 0;
  int height = 0;
  int width = 0;
  std::vector<Eigen::Vector3d> points;
};

/// p_ego = R * K^-1 * T^-1 * [u*d, v*d, d] + t for every template point.
FrustumCloud unproject_to_ego(const FrustumTemplate& tmpl, const CameraView& view);

/// Per-pixel variant: each template point uses the field entry of the final
/// image pixel containing its (u, v) sample.
FrustumCloud unproject_to_ego(const FrustumTemplate& tmpl, const PixelCameraField& field);

/// Flat cell index per point, -1 where the point falls outside the grid.
struct CellAssignment {
  std::vector<int32_t> cells;

  bool valid(int64_t p) const { return cells[static_cast<size_t>(p)] >= 0; }
  int64_t valid_count() const;
};

CellAssignment rasterize_to_cells(const FrustumCloud& cloud, const BevGrid& grid);

/// Boolean mask (row-major over the grid) of cells touched by any valid point.
std::vector<uint8_t> footprint_of(const CellAssignment& cells, const BevGrid& grid);

std::vector<uint8_t> frustum_footprint(const CameraView& view, int feat_h, int feat_w, double stride,
                                       const DepthBins& bins, const BevGrid& grid);

}  // namespace bevda::geometry
