// rkd/nn/ops.h
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

#ifndef RKD_NN_OPS_H_
#define RKD_NN_OPS_H_

#include <vector>

#include "rkd/common/rng.h"
#include "rkd/nn/tensor.h"

namespace rkd::nn {

inline constexpr double kNormEps = 1e-12;

// Elementwise; `b` may also be a (D) or (1,D) row vector broadcast over the
// rows of a (T,D) `a`.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // same shape only
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k)x(k,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // (m,k)x(n,k)^T
Tensor transpose2d(const Tensor& a);

Tensor slice_cols(const Tensor& x, int col0, int width);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& x, std::vector<int> shape);

// x: (Cin,T), w: (Cout,Cin,K), b: (Cout); valid (no-pad) strided convolution.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride);
int conv1d_out_len(int in_len, int kernel, int stride);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = kNormEps);

Tensor gelu(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor log_sigmoid(const Tensor& x);
Tensor softmax_rows(const Tensor& x);

// axis 0: mean over rows -> (D); axis 1: mean over cols -> (T).
Tensor mean_axis(const Tensor& x, int axis);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

Tensor dropout(const Tensor& x, double p, Rng& rng, bool training);
Tensor detach(const Tensor& x);

// Rows where mask != 0 are replaced by the (broadcast) embedding vector.
Tensor replace_rows(const Tensor& x, const std::vector<uint8_t>& mask,
                    const Tensor& emb);

// Per-row mean absolute difference: (1/D) * sum_d |a - b|, shape (T).
Tensor l1_rows(const Tensor& a, const Tensor& b);
// Per-row cosine similarity over the feature dimension, shape (T);
// denominator stabilized by kNormEps.
Tensor cosine_rows(const Tensor& a, const Tensor& b);
// Cosine similarity of two vectors (scalar result).
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

// Cross entropy from logits (N,C) with integer labels; optional per-row
// weights (e.g. a mask); result is the weighted mean over rows.
Tensor ce_logits(const Tensor& logits, const std::vector<int>& labels,
                 const std::vector<double>& weights = {});

// Multi-label binary cross entropy from logits, numerically stabilized;
// mean over all entries.  targets entries must be 0 or 1.
Tensor bce_multilabel(const Tensor& logits, const std::vector<double>& targets);

// Sinusoidal positional encoding values, shape (T,D) (constant, no grad).
Tensor sinusoidal_positions(int t, int d);

}  // namespace rkd::nn

#endif  // RKD_NN_OPS_H_
