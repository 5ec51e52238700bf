// rkd/nn/checkpoint.cc
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

#include "rkd/nn/checkpoint.h"

#include <cstring>
#include <fstream>

#include "rkd/common/error.h"
#include "rkd/common/jsonio.h"
#include "rkd/common/rng.h"

namespace rkd::nn {

void save_checkpoint(const std::filesystem::path& path,
                     const CheckpointHeader& header, const ParamStore& params) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : params.all())
    tensors.push_back({{"name", name}, {"shape", t.shape()}});

  nlohmann::json j = {{"kind", header.kind},
                      {"config", header.config},
                      {"config_hash", header.config_hash},
                      {"seed", header.seed},
                      {"version", header.version.empty() ? kVersionString
                                                         : header.version},
                      {"tensors", tensors}};
  const std::string hdr = j.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(kCheckpointMagic, 8);
  const uint64_t hdr_len = hdr.size();
  out.write(reinterpret_cast<const char*>(&hdr_len), 8);
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  for (const auto& [name, t] : params.all())
    out.write(reinterpret_cast<const char*>(t.val().data()),
              static_cast<std::streamsize>(t.val().size() * sizeof(double)));
  if (!out) throw IoError("short write to checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());

  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw IoError("not an rkd checkpoint: " + path.string());
  uint64_t hdr_len = 0;
  in.read(reinterpret_cast<char*>(&hdr_len), 8);
  std::string hdr(hdr_len, '\0');
  in.read(hdr.data(), static_cast<std::streamsize>(hdr_len));
  if (!in) throw IoError("truncated checkpoint header in " + path.string());

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(hdr);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed checkpoint header in " + path.string() + ": " +
                  e.what());
  }

  LoadedCheckpoint ckpt;
  ckpt.header.kind = j.at("kind");
  ckpt.header.config = j.at("config");
  ckpt.header.config_hash = j.at("config_hash");
  ckpt.header.seed = j.at("seed");
  ckpt.header.version = j.at("version");

  for (const auto& tj : j.at("tensors")) {
    const std::string name = tj.at("name");
    const std::vector<int> shape = tj.at("shape");
    int64_t n = 1;
    for (int d : shape) n *= d;
    std::vector<double> data(n);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in)
      throw IoError("truncated tensor '" + name + "' in " + path.string());
    ckpt.tensors.emplace(name, std::make_pair(shape, std::move(data)));
  }
  return ckpt;
}

void restore_params(ParamStore& store, const LoadedCheckpoint& ckpt) {
  for (const auto& [name, t] : store.all()) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end())
      throw ConfigError("checkpoint missing parameter '" + name + "'");
    if (it->second.first != t.shape())
      throw ShapeError("checkpoint shape mismatch for '" + name + "': " +
                       shape_str(it->second.first) + " vs " +
                       shape_str(t.shape()));
    store.get(name).node()->val = it->second.second;
  }
}

std::string checkpoint_param_hash(const ParamStore& params) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : params.all()) {
    h = fnv1a64(name, h);
    h = fnv1a64(t.val().data(), t.val().size() * sizeof(double), h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace rkd::nn
