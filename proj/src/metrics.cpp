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

#include "bevda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "bevda/errors.hpp"

namespace bevda::metrics {

double iou(std::span<const double> pred, std::span<const double> gt) {
  require(pred.size() == gt.size(), "iou: size mismatch");
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] > 0.5, g = gt[i] > 0.5;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> per_class_iou(const nn::Tensor& pred, const nn::Tensor& gt) {
  IouAccumulator acc(static_cast<int>(pred.dim(0)));
  acc.add(pred, gt);
  return acc.per_class();
}

double miou(const nn::Tensor& pred, const nn::Tensor& gt) {
  const auto v = per_class_iou(pred, gt);
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

IouAccumulator::IouAccumulator(int num_classes)
    : inter_(static_cast<size_t>(num_classes), 0), uni_(static_cast<size_t>(num_classes), 0) {
  require(num_classes > 0, "iou: need at least one class");
}

void IouAccumulator::add(const nn::Tensor& pred, const nn::Tensor& gt) {
  require(pred.same_shape(gt), "iou: shape mismatch");
  require(pred.dim(0) == static_cast<int64_t>(inter_.size()), "iou: class count mismatch");
  const int64_t per = pred.size() / pred.dim(0);
  for (size_t c = 0; c < inter_.size(); ++c)
    for (int64_t i = 0; i < per; ++i) {
      const int64_t idx = static_cast<int64_t>(c) * per + i;
      const bool p = pred[idx] > 0.5, g = gt[idx] > 0.5;
      inter_[c] += (p && g) ? 1 : 0;
      uni_[c] += (p || g) ? 1 : 0;
    }
}

std::vector<double> IouAccumulator::per_class() const {
  std::vector<double> out(inter_.size());
  for (size_t c = 0; c < out.size(); ++c)
    out[c] = uni_[c] == 0 ? 1.0 : static_cast<double>(inter_[c]) / static_cast<double>(uni_[c]);
  return out;
}

double IouAccumulator::mean() const {
  const auto v = per_class();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void Polyline::validate() const {
  require(points.size() >= 2, "polyline needs at least two points");
  for (const auto& p : points) require(p.allFinite(), "polyline coordinates must be finite");
}

double Polyline::length() const {
  double len = 0.0;
  for (size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
  return len;
}

std::vector<Eigen::Vector2d> resample(const Polyline& line, double step) {
  line.validate();
  require(step > 0.0, "resample: step must be positive");
  std::vector<Eigen::Vector2d> out;
  const double total = line.length();
  const auto count = static_cast<int64_t>(std::floor(total / step));
  size_t seg = 1;
  double seg_start = 0.0;
  for (int64_t i = 0; i <= count; ++i) {
    const double s = static_cast<double>(i) * step;
    while (seg + 1 < line.points.size() &&
           seg_start + (line.points[seg] - line.points[seg - 1]).norm() < s) {
      seg_start += (line.points[seg] - line.points[seg - 1]).norm();
      ++seg;
    }
    const Eigen::Vector2d a = line.points[seg - 1], b = line.points[seg];
    const double len = (b - a).norm();
    const double t = len > 0.0 ? std::clamp((s - seg_start) / len, 0.0, 1.0) : 0.0;
    out.push_back(a + t * (b - a));
  }
  if ((out.back() - line.points.back()).norm() > 1e-12) out.push_back(line.points.back());
  return out;
}

namespace {

double directed_mean(const std::vector<Eigen::Vector2d>& from, const std::vector<Eigen::Vector2d>& to) {
  double acc = 0.0;
  for (const auto& a : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : to) best = std::min(best, (a - b).squaredNorm());
    acc += std::sqrt(best);
  }
  return acc / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(const Polyline& a, const Polyline& b, double sample_step) {
  const auto sa = resample(a, sample_step);
  const auto sb = resample(b, sample_step);
  return 0.5 * (directed_mean(sa, sb) + directed_mean(sb, sa));
}

double chamfer_ap(std::span<const Polyline> preds, std::span<const Polyline> gts, double threshold,
                  double sample_step) {
  require(threshold > 0.0, "chamfer_ap: threshold must be positive");
  if (gts.empty()) return preds.empty() ? 1.0 : 0.0;
  if (preds.empty()) return 0.0;

  std::vector<size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return preds[a].score > preds[b].score; });

  std::vector<bool> matched(gts.size(), false);
  std::vector<int> tp(preds.size(), 0);
  for (size_t r = 0; r < order.size(); ++r) {
    double best = std::numeric_limits<double>::infinity();
    size_t best_gt = gts.size();
    for (size_t g = 0; g < gts.size(); ++g) {
      if (matched[g]) continue;
      const double cd = chamfer_distance(preds[order[r]], gts[g], sample_step);
      if (cd < best) {
        best = cd;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best <= threshold) {
      matched[best_gt] = true;
      tp[r] = 1;
    }
  }

  // All-point interpolation over the cumulative PR curve.
  const auto n = order.size();
  std::vector<double> precision(n), recall(n);
  int cum_tp = 0;
  for (size_t r = 0; r < n; ++r) {
    cum_tp += tp[r];
    precision[r] = static_cast<double>(cum_tp) / static_cast<double>(r + 1);
    recall[r] = static_cast<double>(cum_tp) / static_cast<double>(gts.size());
  }
  for (size_t r = n - 1; r-- > 0;) precision[r] = std::max(precision[r], precision[r + 1]);
  double ap = 0.0, prev_recall = 0.0;
  for (size_t r = 0; r < n; ++r) {
    ap += (recall[r] - prev_recall) * precision[r];
    prev_recall = recall[r];
  }
  return ap;
}

ChamferReport chamfer_map(std::span<const Polyline> preds, std::span<const Polyline> gts, double sample_step) {
  std::set<int> classes;
  for (const auto& p : preds) classes.insert(p.class_id);
  for (const auto& g : gts) classes.insert(g.class_id);

  ChamferReport report;
  for (int c : classes) {
    std::vector<Polyline> cp, cg;
    for (const auto& p : preds)
      if (p.class_id == c) cp.push_back(p);
    for (const auto& g : gts)
      if (g.class_id == c) cg.push_back(g);
    std::array<double, 3> ap{};
    for (size_t t = 0; t < kChamferThresholds.size(); ++t) ap[t] = chamfer_ap(cp, cg, kChamferThresholds[t], sample_step);
    report.classes.push_back(c);
    report.ap.push_back(ap);
    report.class_map.push_back((ap[0] + ap[1] + ap[2]) / 3.0);
  }
  if (!report.class_map.empty())
    report.map = std::accumulate(report.class_map.begin(), report.class_map.end(), 0.0) /
                 static_cast<double>(report.class_map.size());
  return report;
}

std::vector<Polyline> parse_polylines(const std::string& text) {
  std::vector<Polyline> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    Polyline p;
    if (!(ls >> p.class_id)) continue;
    if (!(ls >> p.score)) throw FormatError("polyline line " + std::to_string(lineno) + ": missing score");
    std::vector<double> coords;
    double v;
    while (ls >> v) coords.push_back(v);
    if (!ls.eof()) throw FormatError("polyline line " + std::to_string(lineno) + ": bad coordinate");
    if (coords.size() % 2 != 0 || coords.size() < 4)
      throw FormatError("polyline line " + std::to_string(lineno) + ": need at least two x y pairs");
    for (size_t i = 0; i < coords.size(); i += 2) p.points.emplace_back(coords[i], coords[i + 1]);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Polyline> read_polylines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open polyline file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_polylines(ss.str());
}

}  // namespace bevda::metrics
