// rkd/nn/layers.cc
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

#include "rkd/nn/layers.h"

#include <cmath>

#include "rkd/common/error.h"

namespace rkd::nn {

Tensor ParamStore::create(const std::string& name, std::vector<int> shape,
                          std::vector<double> data) {
  if (params_.count(name))
    throw ConfigError("ParamStore: duplicate parameter name '" + name + "'");
  Tensor t = Tensor::leaf(std::move(shape), std::move(data),
                          /*requires_grad=*/true, name);
  params_.emplace(name, t);
  return t;
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw ConfigError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

std::vector<Tensor> ParamStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

int64_t ParamStore::param_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : params_) {
    auto& g = t.node()->grad;
    std::fill(g.begin(), g.end(), 0.0);
  }
}

std::map<std::string, std::vector<double>> ParamStore::snapshot() const {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [name, t] : params_) out.emplace(name, t.val());
  return out;
}

void ParamStore::restore(
    const std::map<std::string, std::vector<double>>& values) {
  for (auto& [name, t] : params_) {
    auto it = values.find(name);
    if (it == values.end())
      throw ConfigError("ParamStore::restore: missing values for '" + name +
                        "'");
    if (it->second.size() != t.val().size())
      throw ShapeError("ParamStore::restore: size mismatch for '" + name + "'");
    t.node()->val = it->second;
  }
}

std::vector<double> init_normal(int64_t n, double stddev, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = stddev * rng.normal();
  return v;
}

std::vector<double> init_xavier(int64_t n, int fan_in, int fan_out, Rng& rng) {
  const double stddev = std::sqrt(2.0 / (fan_in + fan_out));
  return init_normal(n, stddev, rng);
}

std::vector<double> init_zeros(int64_t n) { return std::vector<double>(n, 0.0); }
std::vector<double> init_ones(int64_t n) { return std::vector<double>(n, 1.0); }

Linear Linear::create(ParamStore& store, const std::string& prefix, int in,
                      int out, Rng& rng, double weight_std) {
  Linear l;
  const int64_t n = static_cast<int64_t>(in) * out;
  l.w = store.create(prefix + ".w", {in, out},
                     weight_std < 0.0 ? init_xavier(n, in, out, rng)
                                      : init_normal(n, weight_std, rng));
  l.b = store.create(prefix + ".b", {out}, init_zeros(out));
  return l;
}

Conv1dLayer Conv1dLayer::create(ParamStore& store, const std::string& prefix,
                                int in_ch, int out_ch, int kernel, int stride,
                                Rng& rng) {
  Conv1dLayer c;
  c.stride = stride;
  c.kernel = kernel;
  c.w = store.create(
      prefix + ".w", {out_ch, in_ch, kernel},
      init_xavier(static_cast<int64_t>(out_ch) * in_ch * kernel,
                  in_ch * kernel, out_ch * kernel, rng));
  c.b = store.create(prefix + ".b", {out_ch}, init_zeros(out_ch));
  return c;
}

LayerNormLayer LayerNormLayer::create(ParamStore& store,
                                      const std::string& prefix, int dim) {
  LayerNormLayer l;
  l.gamma = store.create(prefix + ".gamma", {dim}, init_ones(dim));
  l.beta = store.create(prefix + ".beta", {dim}, init_zeros(dim));
  return l;
}

MultiHeadAttention MultiHeadAttention::create(ParamStore& store,
                                              const std::string& prefix,
                                              int d_model, int n_heads,
                                              Rng& rng) {
  if (d_model % n_heads != 0)
    throw ConfigError("attention: d_model must be divisible by n_heads");
  MultiHeadAttention a;
  a.n_heads = n_heads;
  a.d_model = d_model;
  a.wq = Linear::create(store, prefix + ".q", d_model, d_model, rng);
  a.wk = Linear::create(store, prefix + ".k", d_model, d_model, rng);
  a.wv = Linear::create(store, prefix + ".v", d_model, d_model, rng);
  a.wo = Linear::create(store, prefix + ".o", d_model, d_model, rng);
  return a;
}

Tensor MultiHeadAttention::forward(const Tensor& x) const {
  const int dh = d_model / n_heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor q = wq.forward(x), k = wk.forward(x), v = wv.forward(x);
  std::vector<Tensor> heads;
  heads.reserve(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, dh);
    Tensor kh = slice_cols(k, h * dh, dh);
    Tensor vh = slice_cols(v, h * dh, dh);
    Tensor scores = scale(matmul_nt(qh, kh), att_scale);
    Tensor weights = softmax_rows(scores);
    heads.push_back(matmul(weights, vh));
  }
  return wo.forward(concat_cols(heads));
}

TransformerBlock TransformerBlock::create(ParamStore& store,
                                          const std::string& prefix,
                                          int d_model, int n_heads, int ffn_dim,
                                          double dropout_p, Rng& rng) {
  TransformerBlock b;
  b.dropout_p = dropout_p;
  b.ln1 = LayerNormLayer::create(store, prefix + ".ln1", d_model);
  b.ln2 = LayerNormLayer::create(store, prefix + ".ln2", d_model);
  b.attn = MultiHeadAttention::create(store, prefix + ".attn", d_model, n_heads,
                                      rng);
  b.ff1 = Linear::create(store, prefix + ".ff1", d_model, ffn_dim, rng);
  b.ff2 = Linear::create(store, prefix + ".ff2", ffn_dim, d_model, rng);
  return b;
}

Tensor TransformerBlock::forward(const Tensor& x, Mode mode,
                                 Rng* dropout_rng) const {
  const bool training = mode == Mode::kTrain && dropout_rng != nullptr;
  Tensor att = attn.forward(ln1.forward(x));
  if (training) att = dropout(att, dropout_p, *dropout_rng, true);
  Tensor a = add(x, att);
  Tensor ff = ff2.forward(gelu(ff1.forward(ln2.forward(a))));
  if (training) ff = dropout(ff, dropout_p, *dropout_rng, true);
  return add(a, ff);
}

ConvFrontEnd ConvFrontEnd::create(ParamStore& store, const std::string& prefix,
                                  int d_model, Rng& rng) {
  ConvFrontEnd f;
  f.d_model = d_model;
  f.c1 = Conv1dLayer::create(store, prefix + ".c1", 1, 32, 8, 8, rng);
  f.c2 = Conv1dLayer::create(store, prefix + ".c2", 32, 64, 8, 4, rng);
  f.c3 = Conv1dLayer::create(store, prefix + ".c3", 64, 64, 4, 2, rng);
  f.proj = Linear::create(store, prefix + ".proj", 64, d_model, rng);
  f.ln = LayerNormLayer::create(store, prefix + ".ln", d_model);
  return f;
}

int ConvFrontEnd::frames_for_length(int n_samples) const {
  int t = conv1d_out_len(n_samples, c1.kernel, c1.stride);
  t = conv1d_out_len(t, c2.kernel, c2.stride);
  t = conv1d_out_len(t, c3.kernel, c3.stride);
  return t;
}

Tensor ConvFrontEnd::forward(const std::vector<double>& samples) const {
  if (frames_for_length(static_cast<int>(samples.size())) < 1)
    throw ShapeError("front-end: input too short (" +
                     std::to_string(samples.size()) + " samples)");
  Tensor x = Tensor::leaf({1, static_cast<int>(samples.size())}, samples);
  Tensor h = gelu(c1.forward(x));
  h = gelu(c2.forward(h));
  h = gelu(c3.forward(h));        // (64, frames)
  h = transpose2d(h);             // (frames, 64)
  return ln.forward(proj.forward(h));
}

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.val().size(), 0.0);
    v_.emplace_back(p.val().size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    auto& node = *params_[pi].node();
    if (node.grad.empty()) continue;  // never touched: zero gradient
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (size_t i = 0; i < node.val.size(); ++i) {
      const double g = node.grad[i];
      if (std::isnan(g))
        throw NumericError("adam: NaN gradient for parameter '" + node.name +
                           "' at step " + std::to_string(t_));
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      node.val[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      node.grad[i] = 0.0;
    }
  }
}

}  // namespace rkd::nn
