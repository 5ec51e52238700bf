// rkd/distill/student.cc
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

#include "rkd/distill/student.h"

#include "rkd/common/error.h"
#include "rkd/common/jsonio.h"

namespace rkd {

using nn::Mode;
using nn::Tensor;

nlohmann::json StudentConfig::to_json() const {
  return {{"d_model", d_model},   {"n_layers", n_layers},
          {"n_heads", n_heads},   {"ffn_dim", ffn_dim},
          {"dropout", dropout},   {"target_layers", target_layers}};
}

StudentConfig StudentConfig::from_json(const nlohmann::json& j) {
  StudentConfig c;
  c.d_model = j.value("d_model", c.d_model);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.dropout = j.value("dropout", c.dropout);
  c.target_layers = j.value("target_layers", c.target_layers);
  return c;
}

void StudentModel::build(Rng& rng) {
  fe_ = nn::ConvFrontEnd::create(params_, "fe", cfg_.d_model, rng);
  for (int i = 0; i < cfg_.n_layers; ++i)
    blocks_.push_back(nn::TransformerBlock::create(
        params_, "block" + std::to_string(i + 1), cfg_.d_model, cfg_.n_heads,
        cfg_.ffn_dim, cfg_.dropout, rng));
  for (int layer : cfg_.target_layers)
    heads_.push_back(nn::Linear::create(
        params_, "head" + std::to_string(layer), cfg_.d_model, cfg_.d_model,
        rng));
}

StudentModel StudentModel::create(const StudentConfig& cfg, uint64_t seed) {
  StudentModel m;
  m.cfg_ = cfg;
  m.seed_ = seed;
  Rng rng = Rng::substream(seed, "student_init");
  m.build(rng);
  return m;
}

StudentModel StudentModel::init_from_teacher(const TeacherModel& teacher,
                                             const StudentConfig& cfg,
                                             uint64_t seed) {
  const auto& tcfg = teacher.config();
  if (tcfg.d_model != cfg.d_model || tcfg.n_heads != cfg.n_heads ||
      tcfg.ffn_dim != cfg.ffn_dim)
    throw ConfigError("init_from_teacher: architecture mismatch");
  if (cfg.n_layers > tcfg.n_layers)
    throw ConfigError("init_from_teacher: student deeper than teacher");
  for (int layer : cfg.target_layers)
    if (layer < 1 || layer > tcfg.n_layers)
      throw ConfigError("init_from_teacher: target layer " +
                        std::to_string(layer) + " out of range");

  StudentModel m = create(cfg, seed);
  for (const auto& [name, t] : m.params_.all()) {
    const bool copied = name.rfind("fe.", 0) == 0 ||
                        name.rfind("block", 0) == 0;
    if (!copied) continue;  // prediction heads stay freshly initialized
    if (!teacher.params().has(name))
      throw ConfigError("init_from_teacher: teacher lacks parameter " + name);
    Tensor src = teacher.params().get(name);
    if (src.shape() != t.shape())
      throw ShapeError("init_from_teacher: shape mismatch for " + name);
    m.params_.get(name).node()->val = src.val();
  }
  return m;
}

StudentModel StudentModel::from_checkpoint(const nn::LoadedCheckpoint& ckpt) {
  StudentModel m;
  m.cfg_ = StudentConfig::from_json(ckpt.header.config);
  m.seed_ = ckpt.header.seed;
  Rng rng = Rng::substream(m.seed_, "student_init");
  m.build(rng);
  nn::restore_params(m.params_, ckpt);
  return m;
}

int StudentModel::frames_for_length(int n_samples) const {
  return fe_.frames_for_length(n_samples);
}

StudentForward StudentModel::forward(const std::vector<double>& samples,
                                     Mode mode, Rng* dropout_rng) const {
  Tensor x = fe_.forward(samples);
  x = nn::add(x, nn::sinusoidal_positions(x.dim(0), x.dim(1)));
  for (const auto& block : blocks_) x = block.forward(x, mode, dropout_rng);
  StudentForward out;
  out.z = x;
  out.predicted.reserve(heads_.size());
  for (const auto& head : heads_) out.predicted.push_back(head.forward(x));
  return out;
}

std::vector<double> StudentModel::z_values(const Waveform& wave,
                                           int* n_frames) const {
  nn::NoGradGuard ng;
  auto fwd = forward(wave.samples, Mode::kEval, nullptr);
  if (n_frames) *n_frames = fwd.z.dim(0);
  return fwd.z.val();
}

void StudentModel::save(const std::filesystem::path& path) const {
  nn::CheckpointHeader header;
  header.kind = "student";
  header.config = cfg_.to_json();
  header.config_hash = json_hash(header.config);
  header.seed = seed_;
  nn::save_checkpoint(path, header, params_);
}

DistortionClassifier DistortionClassifier::create(int d_model, uint64_t seed) {
  DistortionClassifier c;
  c.d_model_ = d_model;
  Rng rng = Rng::substream(seed, "classifier_init");
  c.lin_ = nn::Linear::create(c.params_, "cls", d_model, 7, rng);
  return c;
}

DistortionClassifier DistortionClassifier::from_checkpoint(
    const nn::LoadedCheckpoint& ckpt) {
  DistortionClassifier c;
  c.d_model_ = ckpt.header.config.value("d_model", 64);
  Rng rng = Rng::substream(ckpt.header.seed, "classifier_init");
  c.lin_ = nn::Linear::create(c.params_, "cls", c.d_model_, 7, rng);
  nn::restore_params(c.params_, ckpt);
  return c;
}

nn::Tensor DistortionClassifier::logits(const Tensor& z) const {
  Tensor pooled = nn::reshape(nn::mean_axis(z, 0), {1, d_model_});
  return lin_.forward(pooled);
}

}  // namespace rkd
