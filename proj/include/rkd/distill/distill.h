// rkd/distill/distill.h
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

#ifndef RKD_DISTILL_DISTILL_H_
#define RKD_DISTILL_DISTILL_H_

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rkd/augment/augmentor.h"
#include "rkd/distill/student.h"
#include "rkd/speech/teacher.h"

namespace rkd {

struct DistillConfig {
  CdmSetup setup = CdmSetup::kNone;
  bool dat = false;
  double gamma = 1.0;
  double lambda = 1e-2;
  double lr_student = 1e-3;
  double lr_classifier = 1e-3;
  int steps = 2000;
  int batch_size = 4;
  int eval_every = 100;
  double dropout = 0.1;
  std::vector<int> target_layers = {2, 3, 4};
  uint64_t seed = 0;

  nlohmann::json to_json() const;
  static DistillConfig from_json(const nlohmann::json& j);
  void validate() const;
};

// The two loss terms and their sum: per timestep and target layer,
// (1/D)*||h - hhat||_1 - gamma * log sigmoid(cos(h, hhat)), summed over
// timesteps and layers.
struct DistilLossParts {
  nn::Tensor total;
  nn::Tensor l1;
  nn::Tensor cos;
};

DistilLossParts distil_loss(const std::vector<nn::Tensor>& teacher_h,
                            const std::vector<nn::Tensor>& student_h,
                            double gamma);

// Teacher target-layer hidden states as value-only tensors (frozen).
std::vector<nn::Tensor> teacher_targets(const TeacherModel& teacher,
                                        const Waveform& wave,
                                        const std::vector<int>& target_layers);

struct DatStepStats {
  double l_distil = 0.0;
  double l_l1 = 0.0;
  double l_cos = 0.0;
  double l_d_classifier = 0.0;  // phase-1 classifier loss
  double l_d_student = 0.0;     // phase-2 classifier loss on live z
};

// One alternating DAT update on a batch of CDM pairs: phase 1 trains the
// classifier on detached student states; phase 2 updates the student on
// L_distil - lambda * L_D with the (just-updated) classifier frozen.
DatStepStats dat_step(const TeacherModel& teacher, StudentModel& student,
                      DistortionClassifier& classifier,
                      const std::vector<CdmPair>& batch, nn::Adam& opt_student,
                      nn::Adam& opt_classifier, double gamma, double lambda,
                      Rng& dropout_rng);

struct DistillResult {
  std::map<std::string, std::vector<double>> best_params;
  double best_dev_loss = 0.0;
  int best_step = -1;
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
  bool aborted_nan = false;
  std::vector<nlohmann::json> log;       // per-step loss rows
  std::vector<nlohmann::json> dev_log;   // periodic dev evaluations
};

// CDM distillation against a frozen teacher.  The student is left holding
// the checkpoint with the lowest dev loss (clean dev pairs).  The optional
// classifier is required when cfg.dat is set.
DistillResult distill_run(const DistillConfig& cfg, const TeacherModel& teacher,
                          StudentModel& student, DistortionClassifier* classifier,
                          const Corpus& corpus, const NoiseBanks& banks,
                          const AugmentPolicy& policy);

// Mean per-utterance distillation loss over clean dev pairs (eval mode).
double dev_distill_loss(const TeacherModel& teacher, const StudentModel& student,
                        const Corpus& corpus, const std::vector<int>& targets,
                        double gamma);

}  // namespace rkd

#endif  // RKD_DISTILL_DISTILL_H_
