// rkd/speech/teacher.h
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

#ifndef RKD_SPEECH_TEACHER_H_
#define RKD_SPEECH_TEACHER_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rkd/augment/augmentor.h"
#include "rkd/corpus/synth_corpus.h"
#include "rkd/nn/checkpoint.h"
#include "rkd/nn/layers.h"

namespace rkd {

struct TeacherConfig {
  int d_model = 64;
  int n_layers = 4;
  int n_heads = 4;
  int ffn_dim = 128;
  double dropout = 0.1;
  int kmeans_k = 32;
  int n_mels = 20;
  int kmeans_iters = 25;
  double mask_fraction = 0.4;
  int mask_span = 5;
  int pretrain_steps = 1000;
  int adapt_steps = 500;
  int batch_size = 4;
  double lr = 1e-3;

  nlohmann::json to_json() const;
  static TeacherConfig from_json(const nlohmann::json& j);
};

// Frame-level cluster targets from log-mel k-means.  Labels depend only on
// (corpus, labeler seed): baseline and adapted teachers train against
// identical targets.
struct PseudoLabeler {
  std::vector<std::vector<double>> codebook;
  int n_mels = 20;
  uint64_t seed = 0;

  std::vector<int> label_frames(const Waveform& wave, int n_frames) const;
  nlohmann::json to_json() const;
  static PseudoLabeler from_json(const nlohmann::json& j);
};

PseudoLabeler fit_pseudo_labeler(const Corpus& corpus,
                                 const TeacherConfig& cfg, uint64_t seed);

// Per-utterance pseudo-label cache, keyed by utterance id and computed from
// the clean waveform aligned to the model frame count.
using PseudoLabelCache = std::map<std::string, std::vector<int>>;

// Toy HuBERT-style encoder: conv front-end (total stride 64) + pre-norm
// transformer stack + masked-prediction head over K clusters.
class TeacherModel {
 public:
  static TeacherModel create(const TeacherConfig& cfg, uint64_t seed);
  static TeacherModel from_checkpoint(const nn::LoadedCheckpoint& ckpt);

  const TeacherConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  uint64_t seed() const { return seed_; }

  int frames_for_length(int n_samples) const;

  // Per-layer hidden sequences h^1..h^L (post-block outputs), shape (T,D)
  // each.  `mask` (optional) replaces masked frame features with the
  // learned mask embedding before the transformer stack.
  std::vector<nn::Tensor> forward_hidden(
      const std::vector<double>& samples, nn::Mode mode, Rng* dropout_rng,
      const std::vector<uint8_t>* mask = nullptr) const;

  // Masked-prediction logits (T,K) on top of the final hidden layer.
  nn::Tensor masked_logits(const std::vector<double>& samples, nn::Mode mode,
                           Rng* dropout_rng,
                           const std::vector<uint8_t>& mask) const;

  // Deterministic value-only extraction (no graph, no dropout).
  std::vector<std::vector<double>> hidden_values(const Waveform& wave) const;

  void save(const std::filesystem::path& path, const std::string& kind) const;

 private:
  TeacherConfig cfg_;
  uint64_t seed_ = 0;
  nn::ParamStore params_;
  nn::ConvFrontEnd fe_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::LayerNormLayer final_ln_;
  nn::Linear head_;
  nn::Tensor mask_emb_;

  void build(Rng& rng);
};

// Contiguous-span frame masking; spans of `span` frames are drawn until at
// least `fraction` of the frames are covered.
std::vector<uint8_t> sample_frame_mask(int n_frames, double fraction, int span,
                                       Rng& rng);

struct TeacherTrainLog {
  std::vector<nlohmann::json> rows;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Masked-prediction pre-training on the clean train split.
TeacherTrainLog pretrain_teacher(TeacherModel& model, const Corpus& corpus,
                                 const PseudoLabelCache& labels, int steps,
                                 uint64_t seed);

// Domain-adaptive continuation: inputs pass through the training distortion
// policy; targets stay clean-derived.
TeacherTrainLog adapt_teacher(TeacherModel& model, const Corpus& corpus,
                              const NoiseBanks& banks,
                              const AugmentPolicy& policy,
                              const PseudoLabelCache& labels, int steps,
                              uint64_t seed);

// Builds the frame-label cache for a set of utterances (clean waves).
PseudoLabelCache build_label_cache(const TeacherModel& model,
                                   const Corpus& corpus,
                                   const PseudoLabeler& labeler);

// Fraction of masked frames predicted correctly, averaged over utterances.
// Waves may be distorted; labels always come from the cache (clean-derived).
double masked_accuracy(const TeacherModel& model,
                       const std::vector<const Utterance*>& utts,
                       const std::vector<Waveform>& waves,
                       const PseudoLabelCache& labels, uint64_t mask_seed);

}  // namespace rkd

#endif  // RKD_SPEECH_TEACHER_H_
