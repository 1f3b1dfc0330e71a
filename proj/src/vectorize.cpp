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

#include "bevda/vectorize.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "bevda/errors.hpp"

namespace bevda::metrics {

std::vector<Polyline> vectorize_bev(const nn::Tensor& scores, const geometry::BevGrid& grid,
                                    std::span<const int> classes, double threshold, int min_cells) {
  const int rows = grid.rows(), cols = grid.cols();
  const int64_t plane = static_cast<int64_t>(rows) * cols;
  require(scores.rank() >= 3 && scores.dim(-1) == cols && scores.dim(-2) == rows,
          "vectorize_bev: scores do not match the grid");
  const int64_t k_count = scores.size() / plane;

  std::vector<Polyline> out;
  for (int k : classes) {
    require(k >= 0 && k < k_count, "vectorize_bev: class out of range");
    const double* s = scores.data() + k * plane;
    std::vector<int> label(static_cast<size_t>(plane), -1);
    int next = 0;
    for (int64_t seed = 0; seed < plane; ++seed) {
      if (s[seed] <= threshold || label[static_cast<size_t>(seed)] >= 0) continue;
      std::vector<int64_t> members{seed};
      label[static_cast<size_t>(seed)] = next;
      for (size_t q = 0; q < members.size(); ++q) {
        const int r = static_cast<int>(members[q] / cols), c = static_cast<int>(members[q] % cols);
        const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
          const int rr = r + dr[d], cc = c + dc[d];
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          const int64_t idx = static_cast<int64_t>(rr) * cols + cc;
          if (s[idx] > threshold && label[static_cast<size_t>(idx)] < 0) {
            label[static_cast<size_t>(idx)] = next;
            members.push_back(idx);
          }
        }
      }
      ++next;
      if (static_cast<int>(members.size()) < min_cells) continue;

      std::vector<Eigen::Vector2d> pts;
      Eigen::Vector2d mean = Eigen::Vector2d::Zero();
      double score = 0.0;
      for (int64_t m : members) {
        pts.push_back(grid.cell_center(static_cast<int>(m / cols), static_cast<int>(m % cols)));
        mean += pts.back();
        score += s[m];
      }
      mean /= static_cast<double>(pts.size());
      Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
      for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
      Eigen::Vector2d axis = eig.eigenvectors().col(1);
      // Fix the sign so vertices run toward +x (or +y for a vertical axis).
      if (axis.x() < -1e-12 || (std::abs(axis.x()) <= 1e-12 && axis.y() < 0.0)) axis = -axis;

      std::map<long, std::pair<Eigen::Vector2d, int>> bins;
      for (const auto& p : pts) {
        const long b = std::lround(axis.dot(p - mean) / grid.resolution);
        auto& [acc, n] = bins.try_emplace(b, Eigen::Vector2d::Zero(), 0).first->second;
        acc += p;
        ++n;
      }
      Polyline line;
      line.class_id = k;
      line.score = score / static_cast<double>(members.size());
      for (const auto& [b, v] : bins) line.points.push_back(v.first / v.second);
      if (line.points.size() >= 2) out.push_back(std::move(line));
    }
  }
  return out;
}

std::string format_polylines(std::span<const Polyline> lines) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& l : lines) {
    out << l.class_id << " " << l.score;
    for (const auto& p : l.points) out << " " << p.x() << " " << p.y();
    out << "\n";
  }
  return out.str();
}

void write_polylines(const std::string& path, std::span<const Polyline> lines) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write polylines to " + path);
  out << format_polylines(lines);
}

}  // namespace bevda::metrics
