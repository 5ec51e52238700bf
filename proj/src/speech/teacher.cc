// rkd/speech/teacher.cc
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

#include "rkd/speech/teacher.h"

#include <cmath>

#include "rkd/common/error.h"
#include "rkd/common/jsonio.h"
#include "rkd/speech/features.h"
#include "rkd/speech/kmeans.h"

namespace rkd {

using nn::Mode;
using nn::Tensor;

nlohmann::json TeacherConfig::to_json() const {
  return {{"d_model", d_model},
          {"n_layers", n_layers},
          {"n_heads", n_heads},
          {"ffn_dim", ffn_dim},
          {"dropout", dropout},
          {"kmeans_k", kmeans_k},
          {"n_mels", n_mels},
          {"kmeans_iters", kmeans_iters},
          {"mask_fraction", mask_fraction},
          {"mask_span", mask_span},
          {"pretrain_steps", pretrain_steps},
          {"adapt_steps", adapt_steps},
          {"batch_size", batch_size},
          {"lr", lr}};
}

TeacherConfig TeacherConfig::from_json(const nlohmann::json& j) {
  TeacherConfig c;
  c.d_model = j.value("d_model", c.d_model);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.dropout = j.value("dropout", c.dropout);
  c.kmeans_k = j.value("kmeans_k", c.kmeans_k);
  c.n_mels = j.value("n_mels", c.n_mels);
  c.kmeans_iters = j.value("kmeans_iters", c.kmeans_iters);
  c.mask_fraction = j.value("mask_fraction", c.mask_fraction);
  c.mask_span = j.value("mask_span", c.mask_span);
  c.pretrain_steps = j.value("pretrain_steps", c.pretrain_steps);
  c.adapt_steps = j.value("adapt_steps", c.adapt_steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  return c;
}

std::vector<int> PseudoLabeler::label_frames(const Waveform& wave,
                                             int n_frames) const {
  auto feats = logmel_frames(wave, n_mels, n_frames);
  std::vector<int> labels(n_frames);
  for (int t = 0; t < n_frames; ++t)
    labels[t] = kmeans_assign(codebook, feats[t]);
  return labels;
}

nlohmann::json PseudoLabeler::to_json() const {
  return {{"codebook", codebook}, {"n_mels", n_mels}, {"seed", seed}};
}

PseudoLabeler PseudoLabeler::from_json(const nlohmann::json& j) {
  PseudoLabeler l;
  l.codebook = j.at("codebook").get<std::vector<std::vector<double>>>();
  l.n_mels = j.at("n_mels");
  l.seed = j.at("seed");
  return l;
}

PseudoLabeler fit_pseudo_labeler(const Corpus& corpus, const TeacherConfig& cfg,
                                 uint64_t seed) {
  std::vector<std::vector<double>> frames;
  for (const auto& u : corpus.utterances) {
    if (u.split != Split::kTrain) continue;
    // Frame count from a generous estimate; exact alignment happens later
    // per model via frames_for_length.
    const int n = static_cast<int>(u.wave.size()) / 64;
    if (n < 1) continue;
    auto f = logmel_frames(u.wave, cfg.n_mels, n);
    frames.insert(frames.end(), f.begin(), f.end());
  }
  auto fit = kmeans_fit(frames, cfg.kmeans_k, cfg.kmeans_iters, seed);
  PseudoLabeler labeler;
  labeler.codebook = std::move(fit.centroids);
  labeler.n_mels = cfg.n_mels;
  labeler.seed = seed;
  return labeler;
}

void TeacherModel::build(Rng& rng) {
  fe_ = nn::ConvFrontEnd::create(params_, "fe", cfg_.d_model, rng);
  for (int i = 0; i < cfg_.n_layers; ++i)
    blocks_.push_back(nn::TransformerBlock::create(
        params_, "block" + std::to_string(i + 1), cfg_.d_model, cfg_.n_heads,
        cfg_.ffn_dim, cfg_.dropout, rng));
  final_ln_ = nn::LayerNormLayer::create(params_, "final_ln", cfg_.d_model);
  // Near-zero head: untrained predictions start uniform (loss ~ ln K).
  head_ = nn::Linear::create(params_, "mask_head", cfg_.d_model, cfg_.kmeans_k,
                             rng, 0.01);
  mask_emb_ = params_.create("mask_emb", {cfg_.d_model},
                             nn::init_normal(cfg_.d_model, 0.1, rng));
}

TeacherModel TeacherModel::create(const TeacherConfig& cfg, uint64_t seed) {
  TeacherModel m;
  m.cfg_ = cfg;
  m.seed_ = seed;
  Rng rng = Rng::substream(seed, "teacher_init");
  m.build(rng);
  return m;
}

TeacherModel TeacherModel::from_checkpoint(const nn::LoadedCheckpoint& ckpt) {
  TeacherModel m;
  m.cfg_ = TeacherConfig::from_json(ckpt.header.config);
  m.seed_ = ckpt.header.seed;
  Rng rng = Rng::substream(m.seed_, "teacher_init");
  m.build(rng);
  nn::restore_params(m.params_, ckpt);
  return m;
}

int TeacherModel::frames_for_length(int n_samples) const {
  return fe_.frames_for_length(n_samples);
}

std::vector<Tensor> TeacherModel::forward_hidden(
    const std::vector<double>& samples, Mode mode, Rng* dropout_rng,
    const std::vector<uint8_t>* mask) const {
  Tensor x = fe_.forward(samples);
  if (mask) x = nn::replace_rows(x, *mask, mask_emb_);
  x = nn::add(x, nn::sinusoidal_positions(x.dim(0), x.dim(1)));
  std::vector<Tensor> hidden;
  hidden.reserve(blocks_.size());
  for (const auto& block : blocks_) {
    x = block.forward(x, mode, dropout_rng);
    hidden.push_back(x);
  }
  return hidden;
}

Tensor TeacherModel::masked_logits(const std::vector<double>& samples,
                                   Mode mode, Rng* dropout_rng,
                                   const std::vector<uint8_t>& mask) const {
  auto hidden = forward_hidden(samples, mode, dropout_rng, &mask);
  return head_.forward(final_ln_.forward(hidden.back()));
}

std::vector<std::vector<double>> TeacherModel::hidden_values(
    const Waveform& wave) const {
  nn::NoGradGuard ng;
  auto hidden = forward_hidden(wave.samples, Mode::kEval, nullptr);
  std::vector<std::vector<double>> out;
  out.reserve(hidden.size());
  for (auto& h : hidden) out.push_back(h.val());
  return out;
}

void TeacherModel::save(const std::filesystem::path& path,
                        const std::string& kind) const {
  nn::CheckpointHeader header;
  header.kind = kind;
  header.config = cfg_.to_json();
  header.config_hash = json_hash(header.config);
  header.seed = seed_;
  nn::save_checkpoint(path, header, params_);
}

std::vector<uint8_t> sample_frame_mask(int n_frames, double fraction, int span,
                                       Rng& rng) {
  std::vector<uint8_t> mask(n_frames, 0);
  if (n_frames <= 0 || fraction <= 0.0) return mask;
  const int target = std::max(1, static_cast<int>(std::lround(
                                     fraction * static_cast<double>(n_frames))));
  int covered = 0;
  int guard = 0;
  while (covered < target && guard++ < 10 * n_frames) {
    const int start = static_cast<int>(rng.uniform_int(
        static_cast<uint64_t>(std::max(1, n_frames - span + 1))));
    for (int i = start; i < std::min(start + span, n_frames); ++i) {
      if (!mask[i]) {
        mask[i] = 1;
        ++covered;
      }
    }
  }
  return mask;
}

namespace {

struct MaskedBatchLoss {
  Tensor loss;
  double value = 0.0;
};

MaskedBatchLoss masked_step_loss(const TeacherModel& model,
                                 const std::vector<const Utterance*>& batch,
                                 const std::vector<Waveform>& waves,
                                 const PseudoLabelCache& labels, Rng& mask_rng,
                                 Rng& dropout_rng) {
  Tensor total;
  for (size_t i = 0; i < batch.size(); ++i) {
    const auto& u = *batch[i];
    const int frames =
        model.frames_for_length(static_cast<int>(waves[i].size()));
    if (frames < 1) throw ShapeError("masked_step_loss: utterance too short");
    const auto& frame_labels = labels.at(u.id);
    if (static_cast<int>(frame_labels.size()) != frames)
      throw ShapeError("masked_step_loss: label/frame count mismatch for " +
                       u.id);
    auto mask = sample_frame_mask(frames, model.config().mask_fraction,
                                  model.config().mask_span, mask_rng);
    Tensor logits =
        model.masked_logits(waves[i].samples, Mode::kTrain, &dropout_rng, mask);
    std::vector<double> weights(frames, 0.0);
    for (int t = 0; t < frames; ++t) weights[t] = mask[t] ? 1.0 : 0.0;
    Tensor ce = nn::ce_logits(logits, frame_labels, weights);
    total = total.defined() ? nn::add(total, ce) : ce;
  }
  MaskedBatchLoss out;
  out.loss = nn::scale(total, 1.0 / static_cast<double>(batch.size()));
  out.value = out.loss.item();
  return out;
}

TeacherTrainLog train_masked(TeacherModel& model, const Corpus& corpus,
                             const NoiseBanks* banks,
                             const AugmentPolicy* policy,
                             const PseudoLabelCache& labels, int steps,
                             uint64_t seed, const char* stage) {
  TeacherTrainLog log;
  if (steps <= 0) return log;
  auto train = corpus.split_view(Split::kTrain);
  if (train.empty()) throw ConfigError("teacher training: empty train split");

  Rng root = Rng::substream(seed, stage);
  Rng batch_rng = root.fork("batch");
  Rng mask_rng = root.fork("mask");
  Rng dropout_rng = root.fork("dropout");

  nn::AdamConfig acfg;
  acfg.lr = model.config().lr;
  nn::Adam opt(model.params().tensors(), acfg);

  for (int step = 0; step < steps; ++step) {
    std::vector<const Utterance*> batch;
    std::vector<Waveform> waves;
    for (int b = 0; b < model.config().batch_size; ++b) {
      const auto* u = train[batch_rng.uniform_int(train.size())];
      batch.push_back(u);
      if (banks && policy) {
        Rng aug = root.fork("augment", static_cast<uint64_t>(step) * 1000 + b);
        auto spec = sample_spec(aug, *policy, *banks);
        waves.push_back(apply_spec(u->wave, spec, *banks).first);
      } else {
        waves.push_back(u->wave);
      }
    }
    auto batch_loss =
        masked_step_loss(model, batch, waves, labels, mask_rng, dropout_rng);
    if (std::isnan(batch_loss.value))
      throw NumericError(std::string(stage) + ": NaN loss at step " +
                         std::to_string(step));
    if (step == 0) log.initial_loss = batch_loss.value;
    log.final_loss = batch_loss.value;
    nn::backward(batch_loss.loss);
    opt.step();
    if (step % 50 == 0 || step == steps - 1)
      log.rows.push_back({{"step", step}, {"loss", batch_loss.value}});
  }
  return log;
}

}  // namespace

TeacherTrainLog pretrain_teacher(TeacherModel& model, const Corpus& corpus,
                                 const PseudoLabelCache& labels, int steps,
                                 uint64_t seed) {
  return train_masked(model, corpus, nullptr, nullptr, labels, steps, seed,
                      "pretrain");
}

TeacherTrainLog adapt_teacher(TeacherModel& model, const Corpus& corpus,
                              const NoiseBanks& banks,
                              const AugmentPolicy& policy,
                              const PseudoLabelCache& labels, int steps,
                              uint64_t seed) {
  return train_masked(model, corpus, &banks, &policy, labels, steps, seed,
                      "adapt");
}

PseudoLabelCache build_label_cache(const TeacherModel& model,
                                   const Corpus& corpus,
                                   const PseudoLabeler& labeler) {
  PseudoLabelCache cache;
  for (const auto& u : corpus.utterances) {
    const int frames = model.frames_for_length(static_cast<int>(u.wave.size()));
    if (frames < 1)
      throw ShapeError("build_label_cache: utterance too short: " + u.id);
    cache.emplace(u.id, labeler.label_frames(u.wave, frames));
  }
  return cache;
}

double masked_accuracy(const TeacherModel& model,
                       const std::vector<const Utterance*>& utts,
                       const std::vector<Waveform>& waves,
                       const PseudoLabelCache& labels, uint64_t mask_seed) {
  nn::NoGradGuard ng;
  Rng mask_rng = Rng::substream(mask_seed, "mask_eval");
  int64_t correct = 0, total = 0;
  for (size_t i = 0; i < utts.size(); ++i) {
    const int frames =
        model.frames_for_length(static_cast<int>(waves[i].size()));
    auto mask = sample_frame_mask(frames, model.config().mask_fraction,
                                  model.config().mask_span, mask_rng);
    Tensor logits =
        model.masked_logits(waves[i].samples, Mode::kEval, nullptr, mask);
    const auto& frame_labels = labels.at(utts[i]->id);
    const int k = model.config().kmeans_k;
    for (int t = 0; t < frames; ++t) {
      if (!mask[t]) continue;
      const double* row = logits.val().data() + static_cast<size_t>(t) * k;
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (row[c] > row[best]) best = c;
      correct += best == frame_labels[t] ? 1 : 0;
      ++total;
    }
  }
  return total > 0 ? static_cast<double>(correct) / total : 0.0;
}

}  // namespace rkd
