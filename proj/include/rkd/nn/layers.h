// rkd/nn/layers.h
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

#ifndef RKD_NN_LAYERS_H_
#define RKD_NN_LAYERS_H_

#include <map>
#include <string>
#include <vector>

#include "rkd/common/rng.h"
#include "rkd/nn/ops.h"
#include "rkd/nn/tensor.h"

namespace rkd::nn {

enum class Mode { kTrain, kEval };

// Named parameter registry with deterministic (name-sorted) iteration.
class ParamStore {
 public:
  Tensor create(const std::string& name, std::vector<int> shape,
                std::vector<double> data);
  Tensor get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) > 0; }

  const std::map<std::string, Tensor>& all() const { return params_; }
  std::vector<Tensor> tensors() const;
  int64_t param_count() const;
  void zero_grads();

  std::map<std::string, std::vector<double>> snapshot() const;
  void restore(const std::map<std::string, std::vector<double>>& values);

 private:
  std::map<std::string, Tensor> params_;
};

// Deterministic initializers.
std::vector<double> init_normal(int64_t n, double stddev, Rng& rng);
std::vector<double> init_xavier(int64_t n, int fan_in, int fan_out, Rng& rng);
std::vector<double> init_zeros(int64_t n);
std::vector<double> init_ones(int64_t n);

struct Linear {
  Tensor w;  // (in, out)
  Tensor b;  // (out)
  // weight_std < 0 selects Xavier; otherwise a plain normal (e.g. a small
  // value for prediction heads that should start near uniform).
  static Linear create(ParamStore& store, const std::string& prefix, int in,
                       int out, Rng& rng, double weight_std = -1.0);
  Tensor forward(const Tensor& x) const { return add(matmul(x, w), b); }
};

struct Conv1dLayer {
  Tensor w;  // (out_ch, in_ch, kernel)
  Tensor b;  // (out_ch)
  int stride = 1;
  int kernel = 1;
  static Conv1dLayer create(ParamStore& store, const std::string& prefix,
                            int in_ch, int out_ch, int kernel, int stride,
                            Rng& rng);
  Tensor forward(const Tensor& x) const { return conv1d(x, w, b, stride); }
};

struct LayerNormLayer {
  Tensor gamma, beta;
  static LayerNormLayer create(ParamStore& store, const std::string& prefix,
                               int dim);
  Tensor forward(const Tensor& x) const { return layer_norm(x, gamma, beta); }
};

struct MultiHeadAttention {
  Linear wq, wk, wv, wo;
  int n_heads = 4;
  int d_model = 64;
  static MultiHeadAttention create(ParamStore& store, const std::string& prefix,
                                   int d_model, int n_heads, Rng& rng);
  Tensor forward(const Tensor& x) const;
};

// Pre-norm transformer encoder block.
struct TransformerBlock {
  LayerNormLayer ln1, ln2;
  MultiHeadAttention attn;
  Linear ff1, ff2;
  double dropout_p = 0.1;
  static TransformerBlock create(ParamStore& store, const std::string& prefix,
                                 int d_model, int n_heads, int ffn_dim,
                                 double dropout_p, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode, Rng* dropout_rng) const;
};

// Strided convolutional wave front-end; total stride 64.
struct ConvFrontEnd {
  Conv1dLayer c1, c2, c3;
  Linear proj;
  LayerNormLayer ln;
  int d_model = 64;
  static ConvFrontEnd create(ParamStore& store, const std::string& prefix,
                             int d_model, Rng& rng);
  // Frame count for a raw input length; 0 if the input is too short.
  int frames_for_length(int n_samples) const;
  // wave (T,) -> features (frames, d_model)
  Tensor forward(const std::vector<double>& samples) const;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction.  step() consumes gradients and zeroes them;
// missing grads count as zero.  NaN gradients abort with diagnostics.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg);
  void step();
  int64_t steps_taken() const { return t_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamConfig cfg_;
  int64_t t_ = 0;
};

}  // namespace rkd::nn

#endif  // RKD_NN_LAYERS_H_
