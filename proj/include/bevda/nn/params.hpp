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
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bevda/nn/autodiff.hpp"

namespace bevda::nn {

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Ordered collection of named parameter tensors.
class ParamSet {
 public:
  void add(std::string name, Tensor value);

  size_t count() const { return entries_.size(); }
  int64_t scalar_count() const;
  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::vector<NamedTensor>& entries() { return entries_; }

  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool has(const std::string& name) const;

  /// Concatenation of every tensor in insertion order.
  std::vector<double> flatten() const;
  void assign_flat(const std::vector<double>& flat);

  bool same_layout(const ParamSet& other) const;
  bool operator==(const ParamSet& other) const;

 private:
  std::vector<NamedTensor> entries_;
};

/// Leaves over a ParamSet's tensors, in the same order.
std::vector<Var> make_leaves(const ParamSet& params, bool requires_grad);

/// Collects the gradients accumulated into `leaves` (zero where none arrived).
std::vector<Tensor> collect_grads(const std::vector<Var>& leaves);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) draw for one tensor.
Tensor init_uniform(Shape shape, int64_t fan_in, std::mt19937_64& rng);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ParamSet& params, const std::vector<Tensor>& grads) = 0;
};

/// Momentum SGD. velocity <- momentum*velocity + grad; param <- param - lr*velocity.
/// A positive `clip_norm` first rescales the gradients so their global L2 norm
/// does not exceed it.
class Sgd : public Optimizer {
 public:
  Sgd(double lr, double momentum, double clip_norm = 0.0) : lr_(lr), momentum_(momentum), clip_norm_(clip_norm) {}
  void step(ParamSet& params, const std::vector<Tensor>& grads) override;
  double lr() const { return lr_; }
  double momentum() const { return momentum_; }

 private:
  double lr_;
  double momentum_;
  double clip_norm_;
  std::vector<Tensor> velocity_;
};

/// Adam with bias correction; `clip_norm` as for Sgd.
class Adam : public Optimizer {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8, double clip_norm = 0.0)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), clip_norm_(clip_norm) {}
  void step(ParamSet& params, const std::vector<Tensor>& grads) override;

 private:
  double lr_, beta1_, beta2_, eps_, clip_norm_;
  int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  int64_t checked = 0;
  /// Worst relative error per parameter tensor, in ParamSet order.
  std::vector<std::pair<std::string, double>> per_param;
};

/// Relative error |a-b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-8);

/// Compares the analytic gradient of `loss` with central differences.
/// `loss` builds a scalar graph from leaves mirroring `params`; it is called
/// once with gradients enabled and twice per scalar under NoGradGuard.
GradCheckReport grad_check(const std::function<Var(const std::vector<Var>&)>& loss,
                           const ParamSet& params, double eps = 1e-5, double floor = 1e-8);

/// Same, trying every step in `steps` per scalar and keeping the central
/// difference closest to the analytic value. A ReLU kink within one step of
/// the evaluation point spoils that step only, and roundoff spoils only the
/// small ones.
GradCheckReport grad_check(const std::function<Var(const std::vector<Var>&)>& loss,
                           const ParamSet& params, const std::vector<double>& steps, double floor = 1e-8);

}  // namespace bevda::nn
