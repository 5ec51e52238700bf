// rkd/nn/ops.cc
//
// Copyright 2026  The rkd authors
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

#include "rkd/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rkd/common/error.h"

namespace rkd::nn {

namespace {

using NodePtr = std::shared_ptr<Node>;

bool any_requires_grad(const std::vector<NodePtr>& parents) {
  for (const auto& p : parents)
    if (p->requires_grad) return true;
  return false;
}

// Builds the result node; the graph is recorded only when gradients are
// both enabled and needed.
Tensor make_op(std::vector<int> shape, std::vector<double> val,
               std::vector<NodePtr> parents,
               std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->val = std::move(val);
  if (grad_enabled() && any_requires_grad(parents)) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
  }
  return Tensor(std::move(node));
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// True if b broadcasts as a row vector over the rows of a (T,D).
bool row_broadcastable(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2) return false;
  const int d = a.dim(1);
  if (b.rank() == 1 && b.dim(0) == d) return true;
  if (b.rank() == 2 && b.dim(0) == 1 && b.dim(1) == d) return true;
  return false;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.val());
    const auto& bv = b.val();
    for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    auto an = a.node(), bn = b.node();
    return make_op(a.shape(), std::move(out), {an, bn}, [an, bn](Node& self) {
      if (an->requires_grad) {
        an->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          an->grad[i] += self.grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          bn->grad[i] += self.grad[i];
      }
    });
  }
  if (row_broadcastable(a, b)) {
    const int t = a.dim(0), d = a.dim(1);
    std::vector<double> out(a.val());
    const auto& bv = b.val();
    for (int i = 0; i < t; ++i)
      for (int j = 0; j < d; ++j) out[i * d + j] += bv[j];
    auto an = a.node(), bn = b.node();
    return make_op(a.shape(), std::move(out), {an, bn},
                   [an, bn, t, d](Node& self) {
                     if (an->requires_grad) {
                       an->ensure_grad();
                       for (size_t i = 0; i < self.grad.size(); ++i)
                         an->grad[i] += self.grad[i];
                     }
                     if (bn->requires_grad) {
                       bn->ensure_grad();
                       for (int i = 0; i < t; ++i)
                         for (int j = 0; j < d; ++j)
                           bn->grad[j] += self.grad[i * d + j];
                     }
                   });
  }
  throw ShapeError("add: incompatible shapes " + shape_str(a.shape()) +
                   " vs " + shape_str(b.shape()));
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.val());
  const auto& bv = b.val();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(out), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        an->grad[i] += self.grad[i] * bn->val[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        bn->grad[i] += self.grad[i] * an->val[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.val());
  for (auto& v : out) v *= c;
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {an}, [an, c](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      an->grad[i] += c * self.grad[i];
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.val());
  for (auto& v : out) v += c;
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {an}, [an](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      an->grad[i] += self.grad[i];
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  const double* av = a.val().data();
  const double* bv = b.val().data();
  for (int i = 0; i < m; ++i) {
    double* orow = out.data() + static_cast<size_t>(i) * n;
    const double* arow = av + static_cast<size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double s = arow[p];
      const double* brow = bv + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) orow[j] += s * brow[j];
    }
  }
  auto an = a.node(), bn = b.node();
  return make_op({m, n}, std::move(out), {an, bn},
                 [an, bn, m, k, n](Node& self) {
                   const double* g = self.grad.data();
                   if (an->requires_grad) {
                     an->ensure_grad();
                     // dA = g . B^T
                     for (int i = 0; i < m; ++i)
                       for (int p = 0; p < k; ++p) {
                         double acc = 0.0;
                         const double* grow = g + static_cast<size_t>(i) * n;
                         const double* brow =
                             bn->val.data() + static_cast<size_t>(p) * n;
                         for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
                         an->grad[static_cast<size_t>(i) * k + p] += acc;
                       }
                   }
                   if (bn->requires_grad) {
                     bn->ensure_grad();
                     // dB = A^T . g
                     for (int p = 0; p < k; ++p) {
                       double* brow =
                           bn->grad.data() + static_cast<size_t>(p) * n;
                       for (int i = 0; i < m; ++i) {
                         const double s =
                             an->val[static_cast<size_t>(i) * k + p];
                         const double* grow = g + static_cast<size_t>(i) * n;
                         for (int j = 0; j < n; ++j) brow[j] += s * grow[j];
                       }
                     }
                   }
                 });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
    throw ShapeError("matmul_nt: incompatible shapes " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  const double* av = a.val().data();
  const double* bv = b.val().data();
  for (int i = 0; i < m; ++i) {
    const double* arow = av + static_cast<size_t>(i) * k;
    double* orow = out.data() + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = bv + static_cast<size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      orow[j] = acc;
    }
  }
  auto an = a.node(), bn = b.node();
  return make_op({m, n}, std::move(out), {an, bn},
                 [an, bn, m, k, n](Node& self) {
                   const double* g = self.grad.data();
                   if (an->requires_grad) {
                     an->ensure_grad();
                     // dA = g . B
                     for (int i = 0; i < m; ++i) {
                       double* arow =
                           an->grad.data() + static_cast<size_t>(i) * k;
                       const double* grow = g + static_cast<size_t>(i) * n;
                       for (int j = 0; j < n; ++j) {
                         const double s = grow[j];
                         const double* brow =
                             bn->val.data() + static_cast<size_t>(j) * k;
                         for (int p = 0; p < k; ++p) arow[p] += s * brow[p];
                       }
                     }
                   }
                   if (bn->requires_grad) {
                     bn->ensure_grad();
                     // dB = g^T . A
                     for (int j = 0; j < n; ++j) {
                       double* brow =
                           bn->grad.data() + static_cast<size_t>(j) * k;
                       for (int i = 0; i < m; ++i) {
                         const double s = g[static_cast<size_t>(i) * n + j];
                         const double* arow =
                             an->val.data() + static_cast<size_t>(i) * k;
                         for (int p = 0; p < k; ++p) brow[p] += s * arow[p];
                       }
                     }
                   }
                 });
}

Tensor transpose2d(const Tensor& a) {
  if (a.rank() != 2)
    throw ShapeError("transpose2d: expected rank-2, got " +
                     shape_str(a.shape()));
  const int m = a.dim(0), n = a.dim(1);
  std::vector<double> out(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<size_t>(j) * m + i] = a.val()[static_cast<size_t>(i) * n + j];
  auto an = a.node();
  return make_op({n, m}, std::move(out), {an}, [an, m, n](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        an->grad[static_cast<size_t>(i) * n + j] +=
            self.grad[static_cast<size_t>(j) * m + i];
  });
}

Tensor slice_cols(const Tensor& x, int col0, int width) {
  if (x.rank() != 2 || col0 < 0 || width <= 0 || col0 + width > x.dim(1))
    throw ShapeError("slice_cols: invalid slice [" + std::to_string(col0) +
                     "," + std::to_string(col0 + width) + ") of " +
                     shape_str(x.shape()));
  const int t = x.dim(0), d = x.dim(1);
  std::vector<double> out(static_cast<size_t>(t) * width);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < width; ++j)
      out[static_cast<size_t>(i) * width + j] =
          x.val()[static_cast<size_t>(i) * d + col0 + j];
  auto xn = x.node();
  return make_op({t, width}, std::move(out), {xn},
                 [xn, t, d, col0, width](Node& self) {
                   if (!xn->requires_grad) return;
                   xn->ensure_grad();
                   for (int i = 0; i < t; ++i)
                     for (int j = 0; j < width; ++j)
                       xn->grad[static_cast<size_t>(i) * d + col0 + j] +=
                           self.grad[static_cast<size_t>(i) * width + j];
                 });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int t = parts[0].dim(0);
  int total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(0) != t)
      throw ShapeError("concat_cols: row mismatch " + shape_str(p.shape()));
    total += p.dim(1);
  }
  std::vector<double> out(static_cast<size_t>(t) * total);
  std::vector<NodePtr> parents;
  int off = 0;
  for (const auto& p : parts) {
    const int w = p.dim(1);
    for (int i = 0; i < t; ++i)
      for (int j = 0; j < w; ++j)
        out[static_cast<size_t>(i) * total + off + j] =
            p.val()[static_cast<size_t>(i) * w + j];
    parents.push_back(p.node());
    off += w;
  }
  return make_op({t, total}, std::move(out), parents,
                 [parents, t, total](Node& self) {
                   int off2 = 0;
                   for (const auto& pn : parents) {
                     const int w = pn->shape[1];
                     if (pn->requires_grad) {
                       pn->ensure_grad();
                       for (int i = 0; i < t; ++i)
                         for (int j = 0; j < w; ++j)
                           pn->grad[static_cast<size_t>(i) * w + j] +=
                               self.grad[static_cast<size_t>(i) * total + off2 +
                                         j];
                     }
                     off2 += w;
                   }
                 });
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  if (n != x.numel())
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(shape));
  auto xn = x.node();
  return make_op(std::move(shape), x.val(), {xn}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      xn->grad[i] += self.grad[i];
  });
}

int conv1d_out_len(int in_len, int kernel, int stride) {
  if (in_len < kernel) return 0;
  return (in_len - kernel) / stride + 1;
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
  if (x.rank() != 2 || w.rank() != 3 || b.rank() != 1)
    throw ShapeError("conv1d: expected x (Cin,T), w (Cout,Cin,K), b (Cout)");
  const int cin = x.dim(0), t = x.dim(1);
  const int cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != cin || b.dim(0) != cout)
    throw ShapeError("conv1d: shape mismatch x=" + shape_str(x.shape()) +
                     " w=" + shape_str(w.shape()));
  const int tout = conv1d_out_len(t, k, stride);
  if (tout <= 0)
    throw ShapeError("conv1d: input of length " + std::to_string(t) +
                     " is shorter than the kernel (" + std::to_string(k) + ")");

  std::vector<double> out(static_cast<size_t>(cout) * tout, 0.0);
  const double* xv = x.val().data();
  const double* wv = w.val().data();
  for (int o = 0; o < cout; ++o) {
    double* orow = out.data() + static_cast<size_t>(o) * tout;
    const double bias = b.val()[o];
    for (int i = 0; i < tout; ++i) orow[i] = bias;
    for (int c = 0; c < cin; ++c) {
      const double* xrow = xv + static_cast<size_t>(c) * t;
      const double* wrow = wv + (static_cast<size_t>(o) * cin + c) * k;
      for (int i = 0; i < tout; ++i) {
        const double* xs = xrow + static_cast<size_t>(i) * stride;
        double acc = 0.0;
        for (int j = 0; j < k; ++j) acc += wrow[j] * xs[j];
        orow[i] += acc;
      }
    }
  }
  auto xn = x.node(), wn = w.node(), bn = b.node();
  return make_op(
      {cout, tout}, std::move(out), {xn, wn, bn},
      [xn, wn, bn, cin, t, cout, k, tout, stride](Node& self) {
        const double* g = self.grad.data();
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int o = 0; o < cout; ++o) {
            double acc = 0.0;
            const double* grow = g + static_cast<size_t>(o) * tout;
            for (int i = 0; i < tout; ++i) acc += grow[i];
            bn->grad[o] += acc;
          }
        }
        if (wn->requires_grad) {
          wn->ensure_grad();
          for (int o = 0; o < cout; ++o) {
            const double* grow = g + static_cast<size_t>(o) * tout;
            for (int c = 0; c < cin; ++c) {
              const double* xrow = xn->val.data() + static_cast<size_t>(c) * t;
              double* wrow =
                  wn->grad.data() + (static_cast<size_t>(o) * cin + c) * k;
              for (int i = 0; i < tout; ++i) {
                const double s = grow[i];
                const double* xs = xrow + static_cast<size_t>(i) * stride;
                for (int j = 0; j < k; ++j) wrow[j] += s * xs[j];
              }
            }
          }
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          for (int o = 0; o < cout; ++o) {
            const double* grow = g + static_cast<size_t>(o) * tout;
            for (int c = 0; c < cin; ++c) {
              double* xrow = xn->grad.data() + static_cast<size_t>(c) * t;
              const double* wrow =
                  wn->val.data() + (static_cast<size_t>(o) * cin + c) * k;
              for (int i = 0; i < tout; ++i) {
                const double s = grow[i];
                double* xs = xrow + static_cast<size_t>(i) * stride;
                for (int j = 0; j < k; ++j) xs[j] += s * wrow[j];
              }
            }
          }
        }
      });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  if (x.rank() != 2)
    throw ShapeError("layer_norm: expected (T,D), got " + shape_str(x.shape()));
  const int t = x.dim(0), d = x.dim(1);
  if (gamma.numel() != d || beta.numel() != d)
    throw ShapeError("layer_norm: affine shape mismatch for D=" +
                     std::to_string(d));

  std::vector<double> out(static_cast<size_t>(t) * d);
  std::vector<double> xhat(static_cast<size_t>(t) * d);
  std::vector<double> inv_std(t);
  for (int i = 0; i < t; ++i) {
    const double* row = x.val().data() + static_cast<size_t>(i) * d;
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += row[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = row[j] - mean;
      var += c * c;
    }
    var /= d;
    const double s = 1.0 / std::sqrt(var + eps);
    inv_std[i] = s;
    for (int j = 0; j < d; ++j) {
      const double h = (row[j] - mean) * s;
      xhat[static_cast<size_t>(i) * d + j] = h;
      out[static_cast<size_t>(i) * d + j] = gamma.val()[j] * h + beta.val()[j];
    }
  }
  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  return make_op(
      {t, d}, std::move(out), {xn, gn, bn},
      [xn, gn, bn, t, d, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Node& self) {
        const double* g = self.grad.data();
        if (gn->requires_grad) gn->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        if (xn->requires_grad) xn->ensure_grad();
        for (int i = 0; i < t; ++i) {
          const double* grow = g + static_cast<size_t>(i) * d;
          const double* hrow = xhat.data() + static_cast<size_t>(i) * d;
          if (gn->requires_grad || bn->requires_grad) {
            for (int j = 0; j < d; ++j) {
              if (gn->requires_grad) gn->grad[j] += grow[j] * hrow[j];
              if (bn->requires_grad) bn->grad[j] += grow[j];
            }
          }
          if (xn->requires_grad) {
            // dxhat = g * gamma; dx = s*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
            double m1 = 0.0, m2 = 0.0;
            for (int j = 0; j < d; ++j) {
              const double dh = grow[j] * gn->val[j];
              m1 += dh;
              m2 += dh * hrow[j];
            }
            m1 /= d;
            m2 /= d;
            double* xg = xn->grad.data() + static_cast<size_t>(i) * d;
            for (int j = 0; j < d; ++j) {
              const double dh = grow[j] * gn->val[j];
              xg[j] += inv_std[i] * (dh - m1 - hrow[j] * m2);
            }
          }
        }
      });
}

Tensor gelu(const Tensor& x) {
  std::vector<double> out(x.val());
  for (auto& v : out)
    v = 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2));
  auto xn = x.node();
  return make_op(x.shape(), std::move(out), {xn}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double v = xn->val[i];
      const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      xn->grad[i] += self.grad[i] * (cdf + v * pdf);
    }
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.val());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  auto xn = x.node();
  return make_op(x.shape(), std::move(out), {xn}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (xn->val[i] > 0.0) xn->grad[i] += self.grad[i];
  });
}

namespace {
inline double sigmoid_scalar(double v) {
  return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                  : std::exp(v) / (1.0 + std::exp(v));
}
}  // namespace

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.val());
  for (auto& v : out) v = sigmoid_scalar(v);
  auto xn = x.node();
  return make_op(x.shape(), std::move(out), {xn}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double s = self.val[i];
      xn->grad[i] += self.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor log_sigmoid(const Tensor& x) {
  std::vector<double> out(x.val());
  for (auto& v : out)
    v = v >= 0.0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v));
  auto xn = x.node();
  return make_op(x.shape(), std::move(out), {xn}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      xn->grad[i] += self.grad[i] * sigmoid_scalar(-xn->val[i]);
  });
}

Tensor softmax_rows(const Tensor& x) {
  if (x.rank() != 2)
    throw ShapeError("softmax_rows: expected (T,C), got " +
                     shape_str(x.shape()));
  const int t = x.dim(0), c = x.dim(1);
  std::vector<double> out(static_cast<size_t>(t) * c);
  for (int i = 0; i < t; ++i) {
    const double* row = x.val().data() + static_cast<size_t>(i) * c;
    double* orow = out.data() + static_cast<size_t>(i) * c;
    double mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    for (int j = 0; j < c; ++j) orow[j] /= sum;
  }
  auto xn = x.node();
  return make_op({t, c}, std::move(out), {xn}, [xn, t, c](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int i = 0; i < t; ++i) {
      const double* y = self.val.data() + static_cast<size_t>(i) * c;
      const double* g = self.grad.data() + static_cast<size_t>(i) * c;
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += g[j] * y[j];
      double* xg = xn->grad.data() + static_cast<size_t>(i) * c;
      for (int j = 0; j < c; ++j) xg[j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor mean_axis(const Tensor& x, int axis) {
  if (x.rank() != 2)
    throw ShapeError("mean_axis: expected rank-2, got " + shape_str(x.shape()));
  const int t = x.dim(0), d = x.dim(1);
  auto xn = x.node();
  if (axis == 0) {
    std::vector<double> out(d, 0.0);
    for (int i = 0; i < t; ++i)
      for (int j = 0; j < d; ++j)
        out[j] += x.val()[static_cast<size_t>(i) * d + j];
    for (auto& v : out) v /= t;
    return make_op({d}, std::move(out), {xn}, [xn, t, d](Node& self) {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (int i = 0; i < t; ++i)
        for (int j = 0; j < d; ++j)
          xn->grad[static_cast<size_t>(i) * d + j] += self.grad[j] / t;
    });
  }
  if (axis == 1) {
    std::vector<double> out(t, 0.0);
    for (int i = 0; i < t; ++i) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j)
        acc += x.val()[static_cast<size_t>(i) * d + j];
      out[i] = acc / d;
    }
    return make_op({t}, std::move(out), {xn}, [xn, t, d](Node& self) {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (int i = 0; i < t; ++i)
        for (int j = 0; j < d; ++j)
          xn->grad[static_cast<size_t>(i) * d + j] += self.grad[i] / d;
    });
  }
  throw ShapeError("mean_axis: axis must be 0 or 1");
}

Tensor sum_all(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.val()) acc += v;
  auto xn = x.node();
  return make_op({1}, {acc}, {xn}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (auto& g : xn->grad) g += self.grad[0];
  });
}

Tensor mean_all(const Tensor& x) {
  return scale(sum_all(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor dropout(const Tensor& x, double p, Rng& rng, bool training) {
  if (!training || p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout: p must be < 1");
  const double keep = 1.0 - p;
  std::vector<double> mask(x.val().size());
  for (auto& m : mask) m = rng.uniform() < p ? 0.0 : 1.0 / keep;
  std::vector<double> out(x.val());
  for (size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  auto xn = x.node();
  return make_op(x.shape(), std::move(out), {xn},
                 [xn, mask = std::move(mask)](Node& self) {
                   if (!xn->requires_grad) return;
                   xn->ensure_grad();
                   for (size_t i = 0; i < self.grad.size(); ++i)
                     xn->grad[i] += self.grad[i] * mask[i];
                 });
}

Tensor detach(const Tensor& x) { return Tensor::leaf(x.shape(), x.val()); }

Tensor replace_rows(const Tensor& x, const std::vector<uint8_t>& mask,
                    const Tensor& emb) {
  if (x.rank() != 2)
    throw ShapeError("replace_rows: expected (T,D), got " +
                     shape_str(x.shape()));
  const int t = x.dim(0), d = x.dim(1);
  if (static_cast<int>(mask.size()) != t)
    throw ShapeError("replace_rows: mask length mismatch");
  if (emb.numel() != d) throw ShapeError("replace_rows: embedding dim mismatch");

  std::vector<double> out(x.val());
  for (int i = 0; i < t; ++i)
    if (mask[i])
      for (int j = 0; j < d; ++j)
        out[static_cast<size_t>(i) * d + j] = emb.val()[j];
  auto xn = x.node(), en = emb.node();
  return make_op({t, d}, std::move(out), {xn, en},
                 [xn, en, t, d, mask](Node& self) {
                   if (xn->requires_grad) {
                     xn->ensure_grad();
                     for (int i = 0; i < t; ++i)
                       if (!mask[i])
                         for (int j = 0; j < d; ++j)
                           xn->grad[static_cast<size_t>(i) * d + j] +=
                               self.grad[static_cast<size_t>(i) * d + j];
                   }
                   if (en->requires_grad) {
                     en->ensure_grad();
                     for (int i = 0; i < t; ++i)
                       if (mask[i])
                         for (int j = 0; j < d; ++j)
                           en->grad[j] +=
                               self.grad[static_cast<size_t>(i) * d + j];
                   }
                 });
}

Tensor l1_rows(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "l1_rows");
  if (a.rank() != 2)
    throw ShapeError("l1_rows: expected (T,D), got " + shape_str(a.shape()));
  const int t = a.dim(0), d = a.dim(1);
  std::vector<double> out(t, 0.0);
  for (int i = 0; i < t; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j)
      acc += std::fabs(a.val()[static_cast<size_t>(i) * d + j] -
                       b.val()[static_cast<size_t>(i) * d + j]);
    out[i] = acc / d;
  }
  auto an = a.node(), bn = b.node();
  return make_op({t}, std::move(out), {an, bn}, [an, bn, t, d](Node& self) {
    if (an->requires_grad) an->ensure_grad();
    if (bn->requires_grad) bn->ensure_grad();
    for (int i = 0; i < t; ++i) {
      const double g = self.grad[i] / d;
      for (int j = 0; j < d; ++j) {
        const size_t idx = static_cast<size_t>(i) * d + j;
        const double diff = an->val[idx] - bn->val[idx];
        const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        if (an->requires_grad) an->grad[idx] += g * s;
        if (bn->requires_grad) bn->grad[idx] -= g * s;
      }
    }
  });
}

Tensor cosine_rows(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "cosine_rows");
  if (a.rank() != 2)
    throw ShapeError("cosine_rows: expected (T,D), got " +
                     shape_str(a.shape()));
  const int t = a.dim(0), d = a.dim(1);
  std::vector<double> out(t), na(t), nb(t), dots(t);
  for (int i = 0; i < t; ++i) {
    const double* ar = a.val().data() + static_cast<size_t>(i) * d;
    const double* br = b.val().data() + static_cast<size_t>(i) * d;
    double dot = 0.0, qa = 0.0, qb = 0.0;
    for (int j = 0; j < d; ++j) {
      dot += ar[j] * br[j];
      qa += ar[j] * ar[j];
      qb += br[j] * br[j];
    }
    na[i] = std::sqrt(qa);
    nb[i] = std::sqrt(qb);
    dots[i] = dot;
    out[i] = dot / std::max(na[i] * nb[i], kNormEps);
  }
  auto an = a.node(), bn = b.node();
  return make_op(
      {t}, std::move(out), {an, bn},
      [an, bn, t, d, na = std::move(na), nb = std::move(nb),
       dots = std::move(dots)](Node& self) {
        if (an->requires_grad) an->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        for (int i = 0; i < t; ++i) {
          const double g = self.grad[i];
          if (g == 0.0) continue;
          const double denom = std::max(na[i] * nb[i], kNormEps);
          const double ca = dots[i] * nb[i] / std::max(na[i], kNormEps);
          const double cb = dots[i] * na[i] / std::max(nb[i], kNormEps);
          const double* av = an->val.data() + static_cast<size_t>(i) * d;
          const double* bv = bn->val.data() + static_cast<size_t>(i) * d;
          const double inv2 = 1.0 / (denom * denom);
          for (int j = 0; j < d; ++j) {
            if (an->requires_grad)
              an->grad[static_cast<size_t>(i) * d + j] +=
                  g * (bv[j] / denom - ca * av[j] * inv2);
            if (bn->requires_grad)
              bn->grad[static_cast<size_t>(i) * d + j] +=
                  g * (av[j] / denom - cb * bv[j] * inv2);
          }
        }
      });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel())
    throw ShapeError("cosine_similarity: size mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const int d = static_cast<int>(a.numel());
  Tensor ar = reshape(a, {1, d});
  Tensor br = reshape(b, {1, d});
  return reshape(cosine_rows(ar, br), {1});
}

Tensor ce_logits(const Tensor& logits, const std::vector<int>& labels,
                 const std::vector<double>& weights) {
  if (logits.rank() != 2)
    throw ShapeError("ce_logits: expected (N,C), got " +
                     shape_str(logits.shape()));
  const int n = logits.dim(0), c = logits.dim(1);
  if (static_cast<int>(labels.size()) != n)
    throw ShapeError("ce_logits: labels length " +
                     std::to_string(labels.size()) + " != rows " +
                     std::to_string(n));
  if (!weights.empty() && static_cast<int>(weights.size()) != n)
    throw ShapeError("ce_logits: weights length mismatch");

  std::vector<double> probs(static_cast<size_t>(n) * c);
  double wsum = 0.0, loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const int label = labels[i];
    if (label < 0 || label >= c)
      throw ShapeError("ce_logits: label out of range");
    const double w = weights.empty() ? 1.0 : weights[i];
    wsum += w;
    const double* row = logits.val().data() + static_cast<size_t>(i) * c;
    double mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
    const double logz = std::log(sum) + mx;
    for (int j = 0; j < c; ++j)
      probs[static_cast<size_t>(i) * c + j] = std::exp(row[j] - logz);
    loss += w * (logz - row[label]);
  }
  if (wsum <= 0.0)
    throw ShapeError("ce_logits: total weight must be positive");
  loss /= wsum;

  auto ln = logits.node();
  return make_op(
      {1}, {loss}, {ln},
      [ln, n, c, labels, weights, wsum, probs = std::move(probs)](Node& self) {
        if (!ln->requires_grad) return;
        ln->ensure_grad();
        const double g = self.grad[0];
        for (int i = 0; i < n; ++i) {
          const double w = (weights.empty() ? 1.0 : weights[i]) / wsum;
          if (w == 0.0) continue;
          double* lg = ln->grad.data() + static_cast<size_t>(i) * c;
          const double* p = probs.data() + static_cast<size_t>(i) * c;
          for (int j = 0; j < c; ++j)
            lg[j] += g * w * (p[j] - (j == labels[i] ? 1.0 : 0.0));
        }
      });
}

Tensor bce_multilabel(const Tensor& logits, const std::vector<double>& targets) {
  const int64_t n = logits.numel();
  if (static_cast<int64_t>(targets.size()) != n)
    throw ShapeError("bce_multilabel: target size mismatch");
  for (double t : targets)
    if (t != 0.0 && t != 1.0)
      throw ShapeError("bce_multilabel: targets must be 0 or 1");

  double loss = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double l = logits.val()[i], t = targets[i];
    // max(l,0) - l*t + log(1 + exp(-|l|))
    loss += std::max(l, 0.0) - l * t + std::log1p(std::exp(-std::fabs(l)));
  }
  loss /= static_cast<double>(n);

  auto ln = logits.node();
  return make_op({1}, {loss}, {ln}, [ln, n, targets](Node& self) {
    if (!ln->requires_grad) return;
    ln->ensure_grad();
    const double g = self.grad[0] / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i)
      ln->grad[i] += g * (sigmoid_scalar(ln->val[i]) - targets[i]);
  });
}

Tensor sinusoidal_positions(int t, int d) {
  std::vector<double> pe(static_cast<size_t>(t) * d);
  for (int pos = 0; pos < t; ++pos) {
    for (int j = 0; j < d; j += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(j) / d);
      pe[static_cast<size_t>(pos) * d + j] = std::sin(pos * freq);
      if (j + 1 < d)
        pe[static_cast<size_t>(pos) * d + j + 1] = std::cos(pos * freq);
    }
  }
  return Tensor::leaf({t, d}, std::move(pe));
}

}  // namespace rkd::nn
