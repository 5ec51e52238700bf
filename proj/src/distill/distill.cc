// rkd/distill/distill.cc
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

#include "rkd/distill/distill.h"

#include <cmath>
#include <memory>

#include "rkd/common/error.h"

namespace rkd {

using nn::Mode;
using nn::Tensor;

nlohmann::json DistillConfig::to_json() const {
  return {{"setup", cdm_setup_name(setup)},
          {"dat", dat},
          {"gamma", gamma},
          {"lambda", lambda},
          {"lr_student", lr_student},
          {"lr_classifier", lr_classifier},
          {"steps", steps},
          {"batch_size", batch_size},
          {"eval_every", eval_every},
          {"dropout", dropout},
          {"target_layers", target_layers},
          {"seed", seed}};
}

DistillConfig DistillConfig::from_json(const nlohmann::json& j) {
  DistillConfig c;
  if (j.contains("setup")) c.setup = cdm_setup_from_name(j.at("setup"));
  c.dat = j.value("dat", c.dat);
  c.gamma = j.value("gamma", c.gamma);
  c.lambda = j.value("lambda", c.lambda);
  c.lr_student = j.value("lr_student", c.lr_student);
  c.lr_classifier = j.value("lr_classifier", c.lr_classifier);
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.dropout = j.value("dropout", c.dropout);
  c.target_layers = j.value("target_layers", c.target_layers);
  c.seed = j.value("seed", c.seed);
  return c;
}

void DistillConfig::validate() const {
  if (gamma < 0.0) throw ConfigError("distill: gamma must be >= 0");
  if (lambda < 0.0) throw ConfigError("distill: lambda must be >= 0");
  if (steps <= 0) throw ConfigError("distill: steps must be positive");
  if (batch_size <= 0) throw ConfigError("distill: batch_size must be positive");
  if (eval_every <= 0) throw ConfigError("distill: eval_every must be positive");
  if (target_layers.empty()) throw ConfigError("distill: no target layers");
}

DistilLossParts distil_loss(const std::vector<Tensor>& teacher_h,
                            const std::vector<Tensor>& student_h,
                            double gamma) {
  if (teacher_h.size() != student_h.size() || teacher_h.empty())
    throw ShapeError("distil_loss: layer count mismatch");
  Tensor l1_total, cos_total;
  for (size_t i = 0; i < teacher_h.size(); ++i) {
    if (teacher_h[i].shape() != student_h[i].shape())
      throw ShapeError("distil_loss: shape mismatch at layer " +
                       std::to_string(i) + ": " +
                       nn::shape_str(teacher_h[i].shape()) + " vs " +
                       nn::shape_str(student_h[i].shape()));
    Tensor l1 = nn::sum_all(nn::l1_rows(teacher_h[i], student_h[i]));
    Tensor cs = nn::scale(
        nn::sum_all(nn::log_sigmoid(nn::cosine_rows(teacher_h[i], student_h[i]))),
        -gamma);
    l1_total = l1_total.defined() ? nn::add(l1_total, l1) : l1;
    cos_total = cos_total.defined() ? nn::add(cos_total, cs) : cs;
  }
  DistilLossParts parts;
  parts.l1 = l1_total;
  parts.cos = cos_total;
  parts.total = nn::add(l1_total, cos_total);
  return parts;
}

std::vector<Tensor> teacher_targets(const TeacherModel& teacher,
                                    const Waveform& wave,
                                    const std::vector<int>& target_layers) {
  nn::NoGradGuard ng;
  auto hidden = teacher.forward_hidden(wave.samples, Mode::kEval, nullptr);
  std::vector<Tensor> out;
  out.reserve(target_layers.size());
  for (int layer : target_layers) {
    if (layer < 1 || layer > static_cast<int>(hidden.size()))
      throw ConfigError("teacher_targets: layer " + std::to_string(layer) +
                        " out of range");
    out.push_back(hidden[layer - 1]);
  }
  return out;
}

namespace {

std::vector<double> label_targets(const DistortionLabel& label) {
  std::vector<double> t(kNumDistortionClasses);
  for (int i = 0; i < kNumDistortionClasses; ++i)
    t[i] = static_cast<double>(label.bits[i]);
  return t;
}

struct BatchForward {
  DistilLossParts loss;        // batch-mean loss parts
  std::vector<Tensor> zs;      // live student last hidden states
};

BatchForward forward_batch(const TeacherModel& teacher,
                           const StudentModel& student,
                           const std::vector<CdmPair>& batch, double gamma,
                           Rng& dropout_rng) {
  Tensor total, l1, cs;
  BatchForward out;
  for (const auto& pair : batch) {
    auto targets =
        teacher_targets(teacher, pair.teacher_wave, student.config().target_layers);
    auto fwd = student.forward(pair.student_wave.samples, Mode::kTrain,
                               &dropout_rng);
    auto parts = distil_loss(targets, fwd.predicted, gamma);
    total = total.defined() ? nn::add(total, parts.total) : parts.total;
    l1 = l1.defined() ? nn::add(l1, parts.l1) : parts.l1;
    cs = cs.defined() ? nn::add(cs, parts.cos) : parts.cos;
    out.zs.push_back(fwd.z);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss.total = nn::scale(total, inv);
  out.loss.l1 = nn::scale(l1, inv);
  out.loss.cos = nn::scale(cs, inv);
  return out;
}

}  // namespace

DatStepStats dat_step(const TeacherModel& teacher, StudentModel& student,
                      DistortionClassifier& classifier,
                      const std::vector<CdmPair>& batch, nn::Adam& opt_student,
                      nn::Adam& opt_classifier, double gamma, double lambda,
                      Rng& dropout_rng) {
  if (batch.empty()) throw ConfigError("dat_step: empty batch");
  for (const auto& pair : batch)
    if (!pair.student_label.valid())
      throw PolicyError("dat_step: pair carries an invalid distortion label");

  DatStepStats stats;
  auto fwd = forward_batch(teacher, student, batch, gamma, dropout_rng);
  stats.l_distil = fwd.loss.total.item();
  stats.l_l1 = fwd.loss.l1.item();
  stats.l_cos = fwd.loss.cos.item();

  // Phase 1: classifier update on detached student states.
  Tensor ld1;
  for (size_t i = 0; i < batch.size(); ++i) {
    Tensor logits = classifier.logits(nn::detach(fwd.zs[i]));
    Tensor b = nn::bce_multilabel(logits, label_targets(batch[i].student_label));
    ld1 = ld1.defined() ? nn::add(ld1, b) : b;
  }
  ld1 = nn::scale(ld1, 1.0 / static_cast<double>(batch.size()));
  stats.l_d_classifier = ld1.item();
  nn::backward(ld1);
  opt_classifier.step();  // only classifier params move in this phase

  // Phase 2: student update against the just-updated, frozen classifier.
  Tensor objective = fwd.loss.total;
  if (lambda != 0.0) {
    Tensor ld2;
    for (size_t i = 0; i < batch.size(); ++i) {
      Tensor logits = classifier.logits(fwd.zs[i]);
      Tensor b =
          nn::bce_multilabel(logits, label_targets(batch[i].student_label));
      ld2 = ld2.defined() ? nn::add(ld2, b) : b;
    }
    ld2 = nn::scale(ld2, 1.0 / static_cast<double>(batch.size()));
    stats.l_d_student = ld2.item();
    objective = nn::add(objective, nn::scale(ld2, -lambda));
  }
  nn::backward(objective);
  opt_student.step();
  // Phase-2 gradients also reach the frozen classifier; drop them so they
  // cannot leak into the next phase-1 update.
  classifier.params().zero_grads();
  return stats;
}

double dev_distill_loss(const TeacherModel& teacher, const StudentModel& student,
                        const Corpus& corpus, const std::vector<int>& targets,
                        double gamma) {
  nn::NoGradGuard ng;
  auto dev = corpus.split_view(Split::kDev);
  if (dev.empty()) throw ConfigError("dev_distill_loss: empty dev split");
  double total = 0.0;
  for (const auto* u : dev) {
    auto t = teacher_targets(teacher, u->wave, targets);
    auto fwd = student.forward(u->wave.samples, Mode::kEval, nullptr);
    total += distil_loss(t, fwd.predicted, gamma).total.item();
  }
  return total / static_cast<double>(dev.size());
}

DistillResult distill_run(const DistillConfig& cfg, const TeacherModel& teacher,
                          StudentModel& student, DistortionClassifier* classifier,
                          const Corpus& corpus, const NoiseBanks& banks,
                          const AugmentPolicy& policy) {
  cfg.validate();
  if (cfg.dat && classifier == nullptr)
    throw ConfigError("distill_run: DAT requires a classifier");

  auto train = corpus.split_view(Split::kTrain);
  if (train.empty()) throw ConfigError("distill_run: empty train split");

  Rng root = Rng::substream(cfg.seed, "distill");
  Rng batch_rng = root.fork("batch");
  Rng dropout_rng = root.fork("dropout");

  nn::AdamConfig scfg;
  scfg.lr = cfg.lr_student;
  nn::Adam opt_student(student.params().tensors(), scfg);
  std::unique_ptr<nn::Adam> opt_classifier;
  if (cfg.dat) {
    nn::AdamConfig ccfg;
    ccfg.lr = cfg.lr_classifier;
    opt_classifier =
        std::make_unique<nn::Adam>(classifier->params().tensors(), ccfg);
  }

  DistillResult result;
  result.best_params = student.params().snapshot();  // last-good fallback

  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<CdmPair> batch;
    batch.reserve(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const auto* u = train[batch_rng.uniform_int(train.size())];
      Rng pair_rng =
          root.fork("pair", static_cast<uint64_t>(step) * 1024 + b);
      batch.push_back(make_cdm_pair(u->wave, cfg.setup, banks, policy, pair_rng));
    }

    double l_distil, l_l1, l_cos, l_d = 0.0;
    if (cfg.dat) {
      auto stats = dat_step(teacher, student, *classifier, batch, opt_student,
                            *opt_classifier, cfg.gamma, cfg.lambda, dropout_rng);
      l_distil = stats.l_distil;
      l_l1 = stats.l_l1;
      l_cos = stats.l_cos;
      l_d = stats.l_d_classifier;
    } else {
      auto fwd = forward_batch(teacher, student, batch, cfg.gamma, dropout_rng);
      l_distil = fwd.loss.total.item();
      l_l1 = fwd.loss.l1.item();
      l_cos = fwd.loss.cos.item();
      nn::backward(fwd.loss.total);
      opt_student.step();
    }

    if (std::isnan(l_distil)) {
      result.aborted_nan = true;
      break;
    }
    if (step == 1) result.initial_train_loss = l_distil;
    result.final_train_loss = l_distil;
    nlohmann::json row = {{"step", step},
                          {"l_distil", l_distil},
                          {"l_l1", l_l1},
                          {"l_cos", l_cos}};
    if (cfg.dat) row["l_d"] = l_d;
    result.log.push_back(std::move(row));

    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      const double dev =
          dev_distill_loss(teacher, student, corpus, cfg.target_layers, cfg.gamma);
      result.dev_log.push_back({{"step", step}, {"dev_loss", dev}});
      if (result.best_step < 0 || dev < result.best_dev_loss) {
        result.best_dev_loss = dev;
        result.best_step = step;
        result.best_params = student.params().snapshot();
      }
    }
  }

  // Leave the student holding the selected checkpoint.
  student.params().restore(result.best_params);
  return result;
}

}  // namespace rkd
