// rkd/audio/rir.h
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

#ifndef RKD_AUDIO_RIR_H_
#define RKD_AUDIO_RIR_H_

#include <array>
#include <vector>

#include <json.hpp>

namespace rkd {

inline constexpr double kSpeedOfSound = 343.0;  // m/s

// Shoebox room geometry for the image-source method.
struct RoomSpec {
  std::array<double, 3> dims = {5.0, 4.0, 3.0};  // meters
  std::array<double, 3> src = {1.0, 1.0, 1.5};
  std::array<double, 3> mic = {3.0, 2.0, 1.5};
  double absorption = 0.5;  // energy absorption coefficient, (0, 1]
  int max_order = 2;        // maximum number of wall reflections

  nlohmann::json to_json() const;
  static RoomSpec from_json(const nlohmann::json& j);
};

struct Rir {
  std::vector<double> taps;
  int sample_rate = 0;
  RoomSpec meta;

  nlohmann::json to_json() const;
};

// Allen-Berkley image-source RIR for a shoebox room.  Each image at distance
// d and bounce count b contributes r^b / (4*pi*d) at tap round(d / c * fs),
// with r = sqrt(1 - absorption).  The tail is truncated where the remaining
// energy falls below 1e-6 of the total.
Rir image_method_rir(const RoomSpec& room, int sample_rate);

}  // namespace rkd

#endif  // RKD_AUDIO_RIR_H_
