// rkd/nn/checkpoint.h
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

#ifndef RKD_NN_CHECKPOINT_H_
#define RKD_NN_CHECKPOINT_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rkd/nn/layers.h"

namespace rkd::nn {

// Self-describing container: magic, JSON header (kind, config, config hash,
// seed, tensor names/shapes), then raw little-endian f64 data.
inline constexpr char kCheckpointMagic[8] = {'R', 'K', 'D', 'C',
                                             'K', 'P', 'T', '1'};

struct CheckpointHeader {
  std::string kind;        // "teacher" | "student" | "classifier" | "probe"
  nlohmann::json config;   // model config echo
  std::string config_hash;
  uint64_t seed = 0;
  std::string version;
};

void save_checkpoint(const std::filesystem::path& path,
                     const CheckpointHeader& header, const ParamStore& params);

struct LoadedCheckpoint {
  CheckpointHeader header;
  std::map<std::string, std::pair<std::vector<int>, std::vector<double>>>
      tensors;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Copies loaded values into an existing store; names and shapes must match.
void restore_params(ParamStore& store, const LoadedCheckpoint& ckpt);

// Stable hex digest of the parameter payload (used for determinism checks).
std::string checkpoint_param_hash(const ParamStore& params);

}  // namespace rkd::nn

#endif  // RKD_NN_CHECKPOINT_H_
