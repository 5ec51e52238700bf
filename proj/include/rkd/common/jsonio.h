// rkd/common/jsonio.h
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

#ifndef RKD_COMMON_JSONIO_H_
#define RKD_COMMON_JSONIO_H_

#include <filesystem>
#include <string>

#include <json.hpp>

namespace rkd {

inline constexpr const char* kVersionString = "rkd 0.1.0";

nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const nlohmann::json& j);

// Stable hex hash of the canonical (key-sorted) dump of `j`.
std::string json_hash(const nlohmann::json& j);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace rkd

#endif  // RKD_COMMON_JSONIO_H_
