// tools/rkd.cc
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
//
// Experiment driver: one subcommand per pipeline stage plus the
// reproduce-matrix grid runner.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rkd/cli/driver.h"
#include "rkd/common/error.h"
#include "rkd/common/jsonio.h"

namespace {

using rkd::RunConfig;
using rkd::VariantSpec;

VariantSpec parse_variant(const std::string& id) {
  VariantSpec v;
  std::string rest = id;
  auto eat_suffix = [&rest](const std::string& suffix) {
    if (rest.size() >= suffix.size() &&
        rest.compare(rest.size() - suffix.size(), suffix.size(), suffix) == 0) {
      rest.resize(rest.size() - suffix.size());
      return true;
    }
    return false;
  };
  v.adapted_teacher = eat_suffix("-Ta");
  v.dat = eat_suffix("-dat");
  if (rest == "setup2same") {
    v.setup = rkd::CdmSetup::kSetup2Same;
  } else {
    v.setup = rkd::cdm_setup_from_name(rest);
  }
  return v;
}

struct ModelSpec {
  bool is_teacher = false;
  bool adapted = false;
  VariantSpec variant;
};

ModelSpec parse_model(const std::string& spec) {
  ModelSpec m;
  if (spec == "teacher-base") {
    m.is_teacher = true;
    m.adapted = false;
  } else if (spec == "teacher-adapted") {
    m.is_teacher = true;
    m.adapted = true;
  } else {
    m.variant = parse_variant(spec);
  }
  return m;
}

RunConfig load_config(const std::string& path, std::optional<uint64_t> seed) {
  RunConfig cfg = path.empty() ? RunConfig{} : RunConfig::load(path);
  if (seed) cfg.master_seed = *seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distortion-robust distillation workbench for toy speech "
               "encoders"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs/default", model_spec = "none";
  std::optional<uint64_t> seed_override;
  int seed_index = 0, jobs = 1, seeds = -1;

  auto add_common = [&](CLI::App* cmd, bool with_model = false) {
    cmd->add_option("--config", config_path, "run configuration JSON");
    cmd->add_option("--out", out_dir, "output/run directory")->required();
    cmd->add_option("--seed", seed_override, "master seed override");
    cmd->add_option("--seed-index", seed_index, "seed slot within the run");
    if (with_model)
      cmd->add_option("--model", model_spec,
                      "model id: a variant id (e.g. setup2, setup1-dat-Ta) or "
                      "teacher-base / teacher-adapted");
  };

  auto* gen = app.add_subcommand("gen-corpus",
                                 "generate the synthetic corpus + noise banks");
  add_common(gen);
  auto* pre = app.add_subcommand("pretrain-teacher",
                                 "masked-prediction pre-training");
  add_common(pre);
  auto* adapt = app.add_subcommand("adapt-teacher",
                                   "domain-adaptive teacher continuation");
  add_common(adapt);
  std::string variant_str = "none";
  auto* dist = app.add_subcommand("distill", "CDM distillation of one variant");
  add_common(dist);
  dist->add_option("--variant", variant_str,
                   "variant id, e.g. none, setup1, setup2-dat, setup2same-Ta");
  auto* probe = app.add_subcommand("probe", "train the downstream probe");
  add_common(probe, true);
  auto* eval = app.add_subcommand("eval", "evaluate under distorted conditions");
  add_common(eval, true);
  auto* viz = app.add_subcommand("visualize",
                                 "split-averaged embeddings + t-SNE");
  add_common(viz, true);
  auto* matrix = app.add_subcommand("reproduce-matrix",
                                    "run the full variant grid and emit the "
                                    "summary table");
  add_common(matrix);
  matrix->add_option("--seeds", seeds, "number of seeds (default from config)");
  matrix->add_option("--jobs", jobs, "parallel worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path, seed_override);

    if (gen->parsed()) {
      rkd::stage_gen_corpus(cfg, out_dir);
      std::cout << "corpus ready at " << out_dir << "/corpus\n";
      return 0;
    }
    if (pre->parsed()) {
      rkd::stage_gen_corpus(cfg, out_dir);
      auto run = rkd::open_run(cfg, out_dir);
      rkd::stage_pretrain_teacher(run, seed_index);
      std::cout << "teacher s" << seed_index << " pre-trained\n";
      return 0;
    }
    if (adapt->parsed()) {
      auto run = rkd::open_run(cfg, out_dir);
      rkd::stage_adapt_teacher(run, seed_index);
      std::cout << "teacher s" << seed_index << " adapted\n";
      return 0;
    }
    if (dist->parsed()) {
      auto run = rkd::open_run(cfg, out_dir);
      auto dir = rkd::stage_distill(run, parse_variant(variant_str), seed_index);
      std::cout << "student at " << dir.string() << "\n";
      return 0;
    }
    if (probe->parsed() || eval->parsed() || viz->parsed()) {
      auto run = rkd::open_run(cfg, out_dir);
      ModelSpec m = parse_model(model_spec);
      std::string model_id;
      rkd::ReprFn fn;
      std::optional<rkd::TeacherModel> teacher;
      std::optional<rkd::StudentModel> student;
      if (m.is_teacher) {
        teacher = rkd::load_teacher(run, seed_index, m.adapted);
        fn = rkd::make_teacher_extractor(*teacher);
        model_id = rkd::teacher_model_id(m.adapted, seed_index);
      } else {
        student = rkd::load_student(run, m.variant, seed_index);
        fn = rkd::make_student_extractor(*student);
        model_id = rkd::model_id_for(m.variant, seed_index);
      }
      if (probe->parsed()) {
        rkd::stage_probe(run, model_id, fn, seed_index);
        std::cout << "probe trained for " << model_id << "\n";
      } else if (eval->parsed()) {
        auto report = rkd::stage_eval(run, model_id, fn, seed_index);
        std::cout << report.to_json().dump(2) << "\n";
      } else {
        auto result = rkd::stage_visualize(run, model_id, fn);
        std::cout << "viz rows=" << result.n_rows
                  << " silhouette=" << result.silhouette_highd << "\n";
      }
      return 0;
    }
    if (matrix->parsed()) {
      const int n_seeds = seeds > 0 ? seeds : cfg.matrix_seeds;
      auto result = rkd::run_matrix(cfg, out_dir, rkd::full_variant_grid(),
                                    n_seeds, jobs);
      std::cout << rkd::read_text_file(result.summary_txt);
      return 0;
    }
  } catch (const rkd::Error& e) {
    nlohmann::json err = {{"error", {{"type", e.kind()}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err = {
        {"error", {{"type", "internal"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 2;
  }
  return 0;
}
