// rkd/distill/student.h
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

#ifndef RKD_DISTILL_STUDENT_H_
#define RKD_DISTILL_STUDENT_H_

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rkd/nn/checkpoint.h"
#include "rkd/nn/layers.h"
#include "rkd/speech/teacher.h"

namespace rkd {

struct StudentConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int ffn_dim = 128;
  double dropout = 0.1;
  std::vector<int> target_layers = {2, 3, 4};  // teacher layers, 1-based

  nlohmann::json to_json() const;
  static StudentConfig from_json(const nlohmann::json& j);
};

// Student forward pass output: last hidden states z and per-target-layer
// head predictions.
struct StudentForward {
  nn::Tensor z;                      // (T,D)
  std::vector<nn::Tensor> predicted;  // one (T,D) per target layer
};

// Truncated-teacher student: shared front-end architecture, fewer
// transformer layers, one linear prediction head per distillation target.
class StudentModel {
 public:
  static StudentModel create(const StudentConfig& cfg, uint64_t seed);
  // Front-end and the first n_layers transformer blocks start as bitwise
  // copies of the teacher's; prediction heads are freshly initialized.
  static StudentModel init_from_teacher(const TeacherModel& teacher,
                                        const StudentConfig& cfg,
                                        uint64_t seed);
  static StudentModel from_checkpoint(const nn::LoadedCheckpoint& ckpt);

  const StudentConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  uint64_t seed() const { return seed_; }

  int frames_for_length(int n_samples) const;
  StudentForward forward(const std::vector<double>& samples, nn::Mode mode,
                         Rng* dropout_rng) const;
  // Value-only last-hidden-state extraction (no graph, no dropout).
  std::vector<double> z_values(const Waveform& wave, int* n_frames) const;

  void save(const std::filesystem::path& path) const;

 private:
  StudentConfig cfg_;
  uint64_t seed_ = 0;
  nn::ParamStore params_;
  nn::ConvFrontEnd fe_;
  std::vector<nn::TransformerBlock> blocks_;
  std::vector<nn::Linear> heads_;

  void build(Rng& rng);
};

// Mean pooling over time followed by a single linear layer D -> 7.
class DistortionClassifier {
 public:
  static DistortionClassifier create(int d_model, uint64_t seed);
  static DistortionClassifier from_checkpoint(const nn::LoadedCheckpoint& ckpt);

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  // z: (T,D) -> logits (1,7)
  nn::Tensor logits(const nn::Tensor& z) const;

 private:
  nn::ParamStore params_;
  nn::Linear lin_;
  int d_model_ = 64;
};

}  // namespace rkd

#endif  // RKD_DISTILL_STUDENT_H_
