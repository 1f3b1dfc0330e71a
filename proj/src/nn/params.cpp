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

#include "bevda/nn/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bevda/errors.hpp"

namespace bevda::nn {

void ParamSet::add(std::string name, Tensor value) {
  require(!has(name), "duplicate parameter name: " + name);
  entries_.push_back({std::move(name), std::move(value)});
}

int64_t ParamSet::scalar_count() const {
  int64_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

const Tensor& ParamSet::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.value;
  throw ContractViolation("unknown parameter: " + name);
}

Tensor& ParamSet::get(const std::string& name) {
  return const_cast<Tensor&>(static_cast<const ParamSet&>(*this).get(name));
}

bool ParamSet::has(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const NamedTensor& e) { return e.name == name; });
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(scalar_count()));
  for (const auto& e : entries_) flat.insert(flat.end(), e.value.values().begin(), e.value.values().end());
  return flat;
}

void ParamSet::assign_flat(const std::vector<double>& flat) {
  require(static_cast<int64_t>(flat.size()) == scalar_count(), "assign_flat: size mismatch");
  size_t off = 0;
  for (auto& e : entries_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), e.value.size(), e.value.data());
    off += static_cast<size_t>(e.value.size());
  }
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name != other.entries_[i].name || !entries_[i].value.same_shape(other.entries_[i].value))
      return false;
  return true;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (!same_layout(other)) return false;
  for (size_t i = 0; i < entries_.size(); ++i)
    if (!(entries_[i].value == other.entries_[i].value)) return false;
  return true;
}

std::vector<Var> make_leaves(const ParamSet& params, bool requires_grad) {
  std::vector<Var> leaves;
  leaves.reserve(params.count());
  for (const auto& e : params.entries()) leaves.push_back(leaf(e.value, requires_grad));
  return leaves;
}

std::vector<Tensor> collect_grads(const std::vector<Var>& leaves) {
  std::vector<Tensor> grads;
  grads.reserve(leaves.size());
  for (const auto& l : leaves) {
    if (l->grad.same_shape(l->value))
      grads.push_back(l->grad);
    else
      grads.emplace_back(l->value.shape(), 0.0);
  }
  return grads;
}

Tensor init_uniform(Shape shape, int64_t fan_in, std::mt19937_64& rng) {
  require(fan_in > 0, "init_uniform: fan_in must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

namespace {

double clip_factor(const std::vector<Tensor>& grads, double clip_norm) {
  if (clip_norm <= 0.0) return 1.0;
  double sq = 0.0;
  for (const auto& g : grads)
    for (double x : g.values()) sq += x * x;
  const double norm = std::sqrt(sq);
  return norm > clip_norm ? clip_norm / norm : 1.0;
}

}  // namespace

void Sgd::step(ParamSet& params, const std::vector<Tensor>& grads) {
  require(grads.size() == params.count(), "sgd: gradient count mismatch");
  if (velocity_.empty()) {
    for (const auto& e : params.entries()) velocity_.emplace_back(e.value.shape(), 0.0);
  }
  const double factor = clip_factor(grads, clip_norm_);
  for (size_t t = 0; t < grads.size(); ++t) {
    Tensor& p = params.entries()[t].value;
    require(grads[t].same_shape(p), "sgd: gradient shape mismatch for " + params.entries()[t].name);
    Tensor& v = velocity_[t];
    const int64_t n = p.size();
    for (int64_t i = 0; i < n; ++i) {
      v[i] = momentum_ * v[i] + factor * grads[t][i];
      p[i] -= lr_ * v[i];
    }
  }
}

void Adam::step(ParamSet& params, const std::vector<Tensor>& grads) {
  require(grads.size() == params.count(), "adam: gradient count mismatch");
  if (m_.empty()) {
    for (const auto& e : params.entries()) {
      m_.emplace_back(e.value.shape(), 0.0);
      v_.emplace_back(e.value.shape(), 0.0);
    }
  }
  const double factor = clip_factor(grads, clip_norm_);
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, double(t_));
  const double c2 = 1.0 - std::pow(beta2_, double(t_));
  for (size_t t = 0; t < grads.size(); ++t) {
    Tensor& p = params.entries()[t].value;
    require(grads[t].same_shape(p), "adam: gradient shape mismatch for " + params.entries()[t].name);
    Tensor& m = m_[t];
    Tensor& v = v_[t];
    const int64_t n = p.size();
    for (int64_t i = 0; i < n; ++i) {
      const double g = factor * grads[t][i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

GradCheckReport grad_check(const std::function<Var(const std::vector<Var>&)>& loss, const ParamSet& params,
                           double eps, double floor) {
  return grad_check(loss, params, std::vector<double>{eps}, floor);
}

GradCheckReport grad_check(const std::function<Var(const std::vector<Var>&)>& loss, const ParamSet& params,
                           const std::vector<double>& steps, double floor) {
  require(!steps.empty(), "grad_check: no step sizes");
  GradCheckReport report;
  auto leaves = make_leaves(params, true);
  Var root = loss(leaves);
  backward(root);
  const auto analytic = collect_grads(leaves);

  NoGradGuard guard;
  for (size_t t = 0; t < leaves.size(); ++t) {
    double worst = 0.0;
    Tensor& value = leaves[t]->value;
    for (int64_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      double numeric = 0.0, err = std::numeric_limits<double>::infinity();
      for (double eps : steps) {
        value[i] = saved + eps;
        const double up = loss(leaves)->value[0];
        value[i] = saved - eps;
        const double down = loss(leaves)->value[0];
        value[i] = saved;
        const double estimate = (up - down) / (2.0 * eps);
        const double e = relative_error(analytic[t][i], estimate, floor);
        if (e < err) {
          err = e;
          numeric = estimate;
        }
      }
      ++report.checked;
      worst = std::max(worst, err);
      if (err > report.max_rel_error || report.worst_index < 0) {
        report.max_rel_error = err;
        report.worst_param = params.entries()[t].name;
        report.worst_index = i;
        report.analytic = analytic[t][i];
        report.numeric = numeric;
      }
    }
    report.per_param.emplace_back(params.entries()[t].name, worst);
  }
  return report;
}

}  // namespace bevda::nn
