// rkd/cli/driver.h
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

#ifndef RKD_CLI_DRIVER_H_
#define RKD_CLI_DRIVER_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rkd/common/jsonio.h"
#include "rkd/distill/distill.h"
#include "rkd/eval/eval.h"

namespace rkd {

struct EvalSettings {
  int variants_per_utt = 3;    // distortion-probe draws per test utterance
  int n_splits = 100;          // split-averaged embedding groups
  double tsne_perplexity = 20.0;
  int tsne_iters = 400;

  nlohmann::json to_json() const;
  static EvalSettings from_json(const nlohmann::json& j);
};

// Whole-experiment configuration; the master seed fans out into named
// substreams per stage.
struct RunConfig {
  uint64_t master_seed = 7;
  CorpusConfig corpus;
  AugmentPolicy augment;
  TeacherConfig teacher;
  StudentConfig student;
  DistillConfig distill;
  ProbeConfig probe;
  EvalSettings eval;
  int matrix_seeds = 2;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  std::string hash() const { return json_hash(to_json()); }

  uint64_t seed_for(int seed_index) const;
  uint64_t eval_seed() const;  // shared across all compared models
};

// One cell of the experiment grid.
struct VariantSpec {
  CdmSetup setup = CdmSetup::kNone;
  bool dat = false;
  bool adapted_teacher = false;
};

std::string variant_id(const VariantSpec& v);
std::string variant_alias(const VariantSpec& v);  // paper-style row labels
std::vector<VariantSpec> full_variant_grid();     // all 16 combinations

struct EvalReport {
  std::string model_id;
  int seed_index = 0;
  std::map<std::string, double> condition_acc;  // clean/2dist/fsd_like/dns_like
  double invariance = 0.0;
  double distortion_probe_exact = 0.0;
  double distortion_probe_per_class_mean = 0.0;
  std::string config_hash;

  double mean_distorted_acc() const;  // mean over 2dist/fsd_like/dns_like
  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

// Shared read-only state for a run directory.
struct LoadedRun {
  std::filesystem::path out;
  RunConfig cfg;
  Corpus corpus;
  NoiseBanks banks;
  std::string corpus_hash;
  AugmentPolicy policy;  // cfg.augment with the corpus sample rate applied
};

// --- pipeline stages (each idempotent given identical config+seed) --------

// Writes config.json (refusing to overwrite on hash mismatch) and the
// corpus+noise banks.
void stage_gen_corpus(const RunConfig& cfg, const std::filesystem::path& out);

LoadedRun open_run(const RunConfig& cfg, const std::filesystem::path& out);

// Teacher checkpoints for one seed index: teacher/s<i>/base.ckpt and
// adapted.ckpt (plus the pseudo-labeler and label cache).
void stage_pretrain_teacher(const LoadedRun& run, int seed_index);
void stage_adapt_teacher(const LoadedRun& run, int seed_index);

TeacherModel load_teacher(const LoadedRun& run, int seed_index, bool adapted);

// Distills one variant; returns the run directory.
std::filesystem::path stage_distill(const LoadedRun& run,
                                    const VariantSpec& variant, int seed_index);

StudentModel load_student(const LoadedRun& run, const VariantSpec& variant,
                          int seed_index);

// Builds (or opens) the shared distorted-evaluation audio cache.
ConditionCache ensure_condition_cache(const LoadedRun& run);

// Trains the downstream probe for a model on clean train reps.
void stage_probe(const LoadedRun& run, const std::string& model_id,
                 const ReprFn& fn, int seed_index);

// Full evaluation of a model (requires a prior probe stage).
EvalReport stage_eval(const LoadedRun& run, const std::string& model_id,
                      const ReprFn& fn, int seed_index);

struct VizResult {
  double silhouette_highd = 0.0;
  double tsne_max_perp_err = 0.0;
  double tsne_initial_kl = 0.0;
  double tsne_final_kl = 0.0;
  int n_rows = 0;
};

// Split-averaged embeddings + t-SNE + silhouette for one model.
VizResult stage_visualize(const LoadedRun& run, const std::string& model_id,
                          const ReprFn& fn);

// --- matrix ----------------------------------------------------------------

struct MatrixCell {
  VariantSpec variant;
  int seed_index = 0;
  EvalReport report;
};

struct MatrixResult {
  std::vector<MatrixCell> cells;
  std::filesystem::path summary_csv;
  std::filesystem::path summary_txt;
};

// Runs variants x seeds (teachers shared per seed), evaluates every cell,
// and writes the summary table.  Cells run on `jobs` worker threads.
MatrixResult run_matrix(const RunConfig& cfg, const std::filesystem::path& out,
                        const std::vector<VariantSpec>& variants, int n_seeds,
                        int jobs);

std::string model_id_for(const VariantSpec& variant, int seed_index);
std::string teacher_model_id(bool adapted, int seed_index);

}  // namespace rkd

#endif  // RKD_CLI_DRIVER_H_
