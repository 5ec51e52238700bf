// rkd/eval/eval.h
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

#ifndef RKD_EVAL_EVAL_H_
#define RKD_EVAL_EVAL_H_

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rkd/augment/augmentor.h"
#include "rkd/distill/student.h"
#include "rkd/speech/teacher.h"

namespace rkd {

// Time-averaged representation of an utterance: a flat vector of length D.
using ReprFn = std::function<std::vector<double>(const Waveform&)>;

ReprFn make_teacher_extractor(const TeacherModel& teacher);
ReprFn make_student_extractor(const StudentModel& student);

std::vector<double> extract_repr(const ReprFn& fn, const Waveform& wave);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Downstream probe (mean pooling + linear classifier on frozen reps).

struct ProbeConfig {
  int steps = 400;
  double lr = 1e-2;
  uint64_t seed = 0;
};

class ProbeModel {
 public:
  static ProbeModel create(int d, int n_classes, uint64_t seed);
  static ProbeModel from_checkpoint(const nn::LoadedCheckpoint& ckpt);

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  int n_classes() const { return n_classes_; }
  int input_dim() const { return d_; }

  // reps: N rows of dimension d -> logits (N, n_classes).
  nn::Tensor logits(const std::vector<std::vector<double>>& reps) const;
  int predict(const std::vector<double>& rep) const;

  void save(const std::filesystem::path& path, const std::string& kind) const;

 private:
  nn::ParamStore params_;
  nn::Linear lin_;
  int d_ = 0, n_classes_ = 0;
};

// Cross-entropy training of the probe on frozen representations.
ProbeModel train_probe(const std::vector<std::vector<double>>& reps,
                       const std::vector<int>& labels, int n_classes,
                       const ProbeConfig& cfg);

double probe_accuracy(const ProbeModel& probe,
                      const std::vector<std::vector<double>>& reps,
                      const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Shared distorted-evaluation audio, cached to disk so every compared model
// consumes byte-identical inputs.

struct ConditionCache {
  std::filesystem::path dir;
  std::string corpus_hash;
  uint64_t eval_seed = 0;
  std::vector<std::string> utt_ids;  // ascending id order
  std::vector<std::string> conditions;

  std::vector<Waveform> load_condition(EvalCondition cond) const;
};

ConditionCache build_condition_cache(const std::filesystem::path& dir,
                                     const Corpus& corpus,
                                     const NoiseBanks& banks,
                                     const AugmentPolicy& policy,
                                     const std::string& corpus_hash,
                                     uint64_t eval_seed);

// Opens an existing cache; throws if the corpus hash or seed do not match
// (prevents comparing models on different audio).
ConditionCache open_condition_cache(const std::filesystem::path& dir,
                                    const std::string& corpus_hash,
                                    uint64_t eval_seed);

// ---------------------------------------------------------------------------
// Metrics.

// Mean over utterances of the mean pairwise cosine similarity between the
// representations of the same utterance under each condition; in [-1, 1].
double invariance_score(const ReprFn& fn,
                        const std::vector<std::vector<Waveform>>& by_condition);

struct DistortionProbeResult {
  double exact_match = 0.0;
  std::array<double, kNumDistortionClasses> per_class{};
  double per_class_mean = 0.0;
};

// Trains a fresh mean-pool+linear multi-label probe on frozen reps of
// distorted audio and reports held-out accuracy.  Higher accuracy means the
// representations retain more distortion information.
DistortionProbeResult distortion_probe(
    const ReprFn& fn, const std::vector<Waveform>& waves,
    const std::vector<DistortionLabel>& labels, const ProbeConfig& cfg);

// Builds the shared distortion-probe dataset (training-policy draws over
// the given utterances; deterministic in eval_seed).
void build_distortion_probe_set(const std::vector<const Utterance*>& utts,
                                const NoiseBanks& banks,
                                const AugmentPolicy& policy, uint64_t eval_seed,
                                int variants_per_utt,
                                std::vector<Waveform>* waves,
                                std::vector<DistortionLabel>* labels);

// ---------------------------------------------------------------------------
// Split-averaged embeddings for visualization (§-style 100 x 6 grid).

struct EmbeddingMatrix {
  int d = 0;
  std::vector<std::vector<double>> rows;   // n_conditions * n_splits rows
  std::vector<int> split_index;            // per row
  std::vector<std::string> condition;      // per row
};

// Utterances are ordered by ascending id and divided into n_splits
// contiguous groups; each row is the mean representation of one group under
// one condition.  The assignment is identical across conditions.
EmbeddingMatrix split_average_embeddings(
    const ReprFn& fn, const std::vector<std::string>& utt_ids,
    const std::map<std::string, std::vector<Waveform>>& waves_by_condition,
    int n_splits);

void write_embedding_csv(const std::filesystem::path& path,
                         const EmbeddingMatrix& m);
void write_tsne_csv(const std::filesystem::path& path,
                    const EmbeddingMatrix& m,
                    const std::vector<std::array<double, 2>>& points);

}  // namespace rkd

#endif  // RKD_EVAL_EVAL_H_
