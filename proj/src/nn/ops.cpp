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

#include "bevda/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "bevda/errors.hpp"

namespace bevda::nn {

namespace {

void require_same(const Var& a, const Var& b, const char* op) {
  require(a->value.same_shape(b->value), std::string(op) + ": shape mismatch " +
                                             shape_string(a->value.shape()) + " vs " +
                                             shape_string(b->value.shape()));
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor out(a->value.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] + b->value[i];
  return make_result(std::move(out), {a, b}, [a, b](Node& self) {
    const int64_t n = self.value.size();
    if (a->requires_grad)
      for (int64_t i = 0; i < n; ++i) a->grad[i] += self.grad[i];
    if (b->requires_grad)
      for (int64_t i = 0; i < n; ++i) b->grad[i] += self.grad[i];
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor out(a->value.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] - b->value[i];
  return make_result(std::move(out), {a, b}, [a, b](Node& self) {
    const int64_t n = self.value.size();
    if (a->requires_grad)
      for (int64_t i = 0; i < n; ++i) a->grad[i] += self.grad[i];
    if (b->requires_grad)
      for (int64_t i = 0; i < n; ++i) b->grad[i] -= self.grad[i];
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor out(a->value.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] * b->value[i];
  return make_result(std::move(out), {a, b}, [a, b](Node& self) {
    const int64_t n = self.value.size();
    if (a->requires_grad)
      for (int64_t i = 0; i < n; ++i) a->grad[i] += self.grad[i] * b->value[i];
    if (b->requires_grad)
      for (int64_t i = 0; i < n; ++i) b->grad[i] += self.grad[i] * a->value[i];
  });
}

Var scale(const Var& a, double factor) {
  Tensor out(a->value.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out[i] = factor * a->value[i];
  return make_result(std::move(out), {a}, [a, factor](Node& self) {
    const int64_t n = self.value.size();
    for (int64_t i = 0; i < n; ++i) a->grad[i] += factor * self.grad[i];
  });
}

Var operator+(const Var& a, const Var& b) { return add(a, b); }
Var operator*(double factor, const Var& a) { return scale(a, factor); }

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a->value.values()) s += v;
  return make_result(Tensor({1}, s), {a}, [a](Node& self) {
    const double g = self.grad[0];
    for (double& v : a->grad.values()) v += g;
  });
}

Var mean(const Var& a) {
  require(a->value.size() > 0, "mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a->value.size()));
}

Var relu(const Var& x) {
  Tensor out(x->value.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out[i] = x->value[i] > 0.0 ? x->value[i] : 0.0;
  return make_result(std::move(out), {x}, [x](Node& self) {
    const int64_t n = self.value.size();
    for (int64_t i = 0; i < n; ++i)
      if (x->value[i] > 0.0) x->grad[i] += self.grad[i];
  });
}

Var sigmoid(const Var& x) {
  Tensor out(x->value.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) {
    const double v = x->value[i];
    // Branching keeps exp() from overflowing for large |v|.
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  return make_result(std::move(out), {x}, [x](Node& self) {
    const int64_t n = self.value.size();
    for (int64_t i = 0; i < n; ++i) {
      const double y = self.value[i];
      x->grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Var softmax(const Var& x, int axis) {
  const Shape& shape = x->value.shape();
  if (axis < 0) axis += static_cast<int>(shape.size());
  require(axis >= 0 && axis < static_cast<int>(shape.size()), "softmax: axis out of range");
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[static_cast<size_t>(i)];
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) inner *= shape[i];
  const int64_t len = shape[static_cast<size_t>(axis)];

  Tensor out(shape);
  const double* in = x->value.data();
  double* o = out.data();
  std::vector<double> mx(static_cast<size_t>(inner));
  std::vector<double> tot(static_cast<size_t>(inner));
  for (int64_t a = 0; a < outer; ++a) {
    const int64_t base = a * len * inner;
    std::fill(mx.begin(), mx.end(), -INFINITY);
    std::fill(tot.begin(), tot.end(), 0.0);
    for (int64_t k = 0; k < len; ++k)
      for (int64_t j = 0; j < inner; ++j) mx[j] = std::max(mx[j], in[base + k * inner + j]);
    for (int64_t k = 0; k < len; ++k)
      for (int64_t j = 0; j < inner; ++j) {
        const double e = std::exp(in[base + k * inner + j] - mx[j]);
        o[base + k * inner + j] = e;
        tot[j] += e;
      }
    for (int64_t k = 0; k < len; ++k)
      for (int64_t j = 0; j < inner; ++j) o[base + k * inner + j] /= tot[j];
  }

  return make_result(std::move(out), {x}, [x, outer, inner, len](Node& self) {
    const double* y = self.value.data();
    const double* g = self.grad.data();
    double* dx = x->grad.data();
    std::vector<double> dot(static_cast<size_t>(inner));
    for (int64_t a = 0; a < outer; ++a) {
      const int64_t base = a * len * inner;
      std::fill(dot.begin(), dot.end(), 0.0);
      for (int64_t k = 0; k < len; ++k)
        for (int64_t j = 0; j < inner; ++j) dot[j] += g[base + k * inner + j] * y[base + k * inner + j];
      for (int64_t k = 0; k < len; ++k)
        for (int64_t j = 0; j < inner; ++j) {
          const int64_t i = base + k * inner + j;
          dx[i] += y[i] * (g[i] - dot[j]);
        }
    }
  });
}

Var linear1x1(const Var& x, const Var& w, const Var& b) {
  const Tensor& xv = x->value;
  require(xv.rank() == 4, "linear1x1: input must be [N,C,H,W]");
  const int64_t n = xv.dim(0), cin = xv.dim(1), plane = xv.dim(2) * xv.dim(3);
  require(w->value.rank() == 2 && w->value.dim(1) == cin, "linear1x1: weight shape mismatch");
  const int64_t cout = w->value.dim(0);
  require(b->value.size() == cout, "linear1x1: bias shape mismatch");

  Tensor out({n, cout, xv.dim(2), xv.dim(3)});
  const double* wv = w->value.data();
  for (int64_t s = 0; s < n; ++s)
    for (int64_t co = 0; co < cout; ++co) {
      double* o = out.data() + (s * cout + co) * plane;
      std::fill(o, o + plane, b->value[co]);
      for (int64_t ci = 0; ci < cin; ++ci) {
        const double wc = wv[co * cin + ci];
        const double* in = xv.data() + (s * cin + ci) * plane;
        for (int64_t p = 0; p < plane; ++p) o[p] += wc * in[p];
      }
    }

  return make_result(std::move(out), {x, w, b}, [x, w, b, n, cin, cout, plane](Node& self) {
    const double* g = self.grad.data();
    for (int64_t s = 0; s < n; ++s)
      for (int64_t co = 0; co < cout; ++co) {
        const double* go = g + (s * cout + co) * plane;
        if (b->requires_grad) {
          double acc = 0.0;
          for (int64_t p = 0; p < plane; ++p) acc += go[p];
          b->grad[co] += acc;
        }
        for (int64_t ci = 0; ci < cin; ++ci) {
          const double* in = x->value.data() + (s * cin + ci) * plane;
          if (w->requires_grad) {
            double acc = 0.0;
            for (int64_t p = 0; p < plane; ++p) acc += go[p] * in[p];
            w->grad[co * cin + ci] += acc;
          }
          if (x->requires_grad) {
            const double wc = w->value[co * cin + ci];
            double* dx = x->grad.data() + (s * cin + ci) * plane;
            for (int64_t p = 0; p < plane; ++p) dx[p] += wc * go[p];
          }
        }
      }
  });
}

namespace {

struct ConvGeom {
  int64_t n, cin, h, w, cout, ho, wo, stride;
};

// Valid output column range for kernel column kx: input column ox*stride+kx-1
// must lie in [0, w).
inline void col_range(const ConvGeom& g, int64_t kx, int64_t& lo, int64_t& hi) {
  lo = kx == 0 ? 1 : 0;
  hi = std::min(g.wo - 1, (g.w - kx) / g.stride);
}

}  // namespace

Var conv3x3(const Var& x, const Var& w, const Var& b, int stride) {
  const Tensor& xv = x->value;
  require(stride == 1 || stride == 2, "conv3x3: stride must be 1 or 2");
  require(xv.rank() == 4, "conv3x3: input must be [N,C,H,W]");
  require(w->value.rank() == 4 && w->value.dim(1) == xv.dim(1) && w->value.dim(2) == 3 &&
              w->value.dim(3) == 3,
          "conv3x3: weight shape mismatch");
  ConvGeom g{xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3), w->value.dim(0), 0, 0, stride};
  g.ho = (g.h - 1) / stride + 1;
  g.wo = (g.w - 1) / stride + 1;
  require(b->value.size() == g.cout, "conv3x3: bias shape mismatch");

  Tensor out({g.n, g.cout, g.ho, g.wo});
  const int64_t in_plane = g.h * g.w, out_plane = g.ho * g.wo;
  for (int64_t s = 0; s < g.n; ++s)
    for (int64_t co = 0; co < g.cout; ++co) {
      double* o = out.data() + (s * g.cout + co) * out_plane;
      std::fill(o, o + out_plane, b->value[co]);
      for (int64_t ci = 0; ci < g.cin; ++ci) {
        const double* in = xv.data() + (s * g.cin + ci) * in_plane;
        const double* wk = w->value.data() + (co * g.cin + ci) * 9;
        for (int64_t ky = 0; ky < 3; ++ky)
          for (int64_t kx = 0; kx < 3; ++kx) {
            const double wv = wk[ky * 3 + kx];
            int64_t lo, hi;
            col_range(g, kx, lo, hi);
            for (int64_t oy = 0; oy < g.ho; ++oy) {
              const int64_t iy = oy * stride + ky - 1;
              if (iy < 0 || iy >= g.h) continue;
              const double* row = in + iy * g.w + kx - 1;
              double* orow = o + oy * g.wo;
              if (stride == 1) {
                for (int64_t ox = lo; ox <= hi; ++ox) orow[ox] += wv * row[ox];
              } else {
                for (int64_t ox = lo; ox <= hi; ++ox) orow[ox] += wv * row[2 * ox];
              }
            }
          }
      }
    }

  return make_result(std::move(out), {x, w, b}, [x, w, b, g](Node& self) {
    const int64_t in_plane = g.h * g.w, out_plane = g.ho * g.wo;
    const double* grad = self.grad.data();
    for (int64_t s = 0; s < g.n; ++s)
      for (int64_t co = 0; co < g.cout; ++co) {
        const double* go = grad + (s * g.cout + co) * out_plane;
        if (b->requires_grad) {
          double acc = 0.0;
          for (int64_t p = 0; p < out_plane; ++p) acc += go[p];
          b->grad[co] += acc;
        }
        for (int64_t ci = 0; ci < g.cin; ++ci) {
          const double* in = x->value.data() + (s * g.cin + ci) * in_plane;
          double* dx = x->requires_grad ? x->grad.data() + (s * g.cin + ci) * in_plane : nullptr;
          const double* wk = w->value.data() + (co * g.cin + ci) * 9;
          double* dwk = w->requires_grad ? w->grad.data() + (co * g.cin + ci) * 9 : nullptr;
          for (int64_t ky = 0; ky < 3; ++ky)
            for (int64_t kx = 0; kx < 3; ++kx) {
              const double wv = wk[ky * 3 + kx];
              int64_t lo, hi;
              col_range(g, kx, lo, hi);
              double acc = 0.0;
              for (int64_t oy = 0; oy < g.ho; ++oy) {
                const int64_t iy = oy * g.stride + ky - 1;
                if (iy < 0 || iy >= g.h) continue;
                const double* row = in + iy * g.w + kx - 1;
                const double* grow = go + oy * g.wo;
                if (g.stride == 1) {
                  for (int64_t ox = lo; ox <= hi; ++ox) acc += grow[ox] * row[ox];
                  if (dx) {
                    double* drow = dx + iy * g.w + kx - 1;
                    for (int64_t ox = lo; ox <= hi; ++ox) drow[ox] += wv * grow[ox];
                  }
                } else {
                  for (int64_t ox = lo; ox <= hi; ++ox) acc += grow[ox] * row[2 * ox];
                  if (dx) {
                    double* drow = dx + iy * g.w + kx - 1;
                    for (int64_t ox = lo; ox <= hi; ++ox) drow[2 * ox] += wv * grow[ox];
                  }
                }
              }
              if (dwk) dwk[ky * 3 + kx] += acc;
            }
        }
      }
  });
}

Var channel_norm(const Var& x, double eps) {
  const Tensor& xv = x->value;
  require(xv.rank() == 4, "channel_norm: input must be [N,C,H,W]");
  const int64_t n = xv.dim(0), c = xv.dim(1), plane = xv.dim(2) * xv.dim(3);
  Tensor out(xv.shape());
  Tensor inv_std({n, plane});
  for (int64_t s = 0; s < n; ++s)
    for (int64_t p = 0; p < plane; ++p) {
      double m = 0.0;
      for (int64_t k = 0; k < c; ++k) m += xv[(s * c + k) * plane + p];
      m /= static_cast<double>(c);
      double var = 0.0;
      for (int64_t k = 0; k < c; ++k) {
        const double d = xv[(s * c + k) * plane + p] - m;
        var += d * d;
      }
      var /= static_cast<double>(c);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std[s * plane + p] = is;
      for (int64_t k = 0; k < c; ++k) out[(s * c + k) * plane + p] = (xv[(s * c + k) * plane + p] - m) * is;
    }
  return make_result(std::move(out), {x}, [x, inv_std, n, c, plane](Node& self) {
    for (int64_t s = 0; s < n; ++s)
      for (int64_t p = 0; p < plane; ++p) {
        double mg = 0.0, mgy = 0.0;
        for (int64_t k = 0; k < c; ++k) {
          const int64_t i = (s * c + k) * plane + p;
          mg += self.grad[i];
          mgy += self.grad[i] * self.value[i];
        }
        mg /= static_cast<double>(c);
        mgy /= static_cast<double>(c);
        const double is = inv_std[s * plane + p];
        for (int64_t k = 0; k < c; ++k) {
          const int64_t i = (s * c + k) * plane + p;
          x->grad[i] += is * (self.grad[i] - mg - self.value[i] * mgy);
        }
      }
  });
}

Var spatial_norm(const Var& x, double eps) {
  const Tensor& xv = x->value;
  require(xv.rank() == 4, "spatial_norm: input must be [N,C,H,W]");
  const int64_t slices = xv.dim(0) * xv.dim(1), plane = xv.dim(2) * xv.dim(3);
  Tensor out(xv.shape());
  std::vector<double> inv_std(static_cast<size_t>(slices));
  for (int64_t s = 0; s < slices; ++s) {
    const double* in = xv.data() + s * plane;
    double m = 0.0;
    for (int64_t p = 0; p < plane; ++p) m += in[p];
    m /= static_cast<double>(plane);
    double var = 0.0;
    for (int64_t p = 0; p < plane; ++p) var += (in[p] - m) * (in[p] - m);
    var /= static_cast<double>(plane);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<size_t>(s)] = is;
    for (int64_t p = 0; p < plane; ++p) out[s * plane + p] = (in[p] - m) * is;
  }
  return make_result(std::move(out), {x}, [x, inv_std, slices, plane](Node& self) {
    for (int64_t s = 0; s < slices; ++s) {
      const double* g = self.grad.data() + s * plane;
      const double* y = self.value.data() + s * plane;
      double mg = 0.0, mgy = 0.0;
      for (int64_t p = 0; p < plane; ++p) {
        mg += g[p];
        mgy += g[p] * y[p];
      }
      mg /= static_cast<double>(plane);
      mgy /= static_cast<double>(plane);
      const double is = inv_std[static_cast<size_t>(s)];
      for (int64_t p = 0; p < plane; ++p) x->grad[s * plane + p] += is * (g[p] - mg - y[p] * mgy);
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x->value.reshaped(std::move(shape));
  return make_result(std::move(out), {x}, [x](Node& self) {
    const int64_t n = self.value.size();
    for (int64_t i = 0; i < n; ++i) x->grad[i] += self.grad[i];
  });
}

}  // namespace bevda::nn
