// rkd/audio/rir.cc
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

#include "rkd/audio/rir.h"

#include <cmath>
#include <numbers>
#include <string>

#include "rkd/common/error.h"

namespace rkd {

namespace {

void check_inside(const std::array<double, 3>& p,
                  const std::array<double, 3>& dims, const char* what) {
  for (int i = 0; i < 3; ++i) {
    if (!(p[i] > 0.0 && p[i] < dims[i]))
      throw GeometryError(std::string(what) +
                          " position lies outside the room on axis " +
                          std::to_string(i));
  }
}

}  // namespace

nlohmann::json RoomSpec::to_json() const {
  return {{"dims", dims},
          {"src", src},
          {"mic", mic},
          {"absorption", absorption},
          {"max_order", max_order}};
}

RoomSpec RoomSpec::from_json(const nlohmann::json& j) {
  RoomSpec r;
  r.dims = j.at("dims");
  r.src = j.at("src");
  r.mic = j.at("mic");
  r.absorption = j.at("absorption");
  r.max_order = j.at("max_order");
  return r;
}

nlohmann::json Rir::to_json() const {
  return {{"sample_rate", sample_rate},
          {"n_taps", taps.size()},
          {"room", meta.to_json()}};
}

Rir image_method_rir(const RoomSpec& room, int sample_rate) {
  if (!(room.absorption > 0.0 && room.absorption <= 1.0))
    throw GeometryError("absorption must lie in (0, 1], got " +
                        std::to_string(room.absorption));
  if (room.max_order < 0)
    throw GeometryError("max_order must be non-negative");
  for (int i = 0; i < 3; ++i)
    if (!(room.dims[i] > 0.0))
      throw GeometryError("room dimension " + std::to_string(i) +
                          " must be positive");
  check_inside(room.src, room.dims, "source");
  check_inside(room.mic, room.dims, "microphone");
  if (room.src == room.mic)
    throw GeometryError("source and microphone positions coincide");

  const double refl = std::sqrt(1.0 - room.absorption);
  const double fs = static_cast<double>(sample_rate);

  // With b bounces the image is at most (b+2) room diagonals away.
  double diag = std::sqrt(room.dims[0] * room.dims[0] +
                          room.dims[1] * room.dims[1] +
                          room.dims[2] * room.dims[2]);
  const double max_dist = diag * (room.max_order + 2);
  const size_t max_taps =
      static_cast<size_t>(std::lround(max_dist / kSpeedOfSound * fs)) + 2;
  std::vector<double> taps(max_taps, 0.0);

  // Image positions along one axis: x = (1-2q)*src + 2*m*L, with bounce
  // count |2m - q| against the two walls of that axis.
  const int half = (room.max_order + 1) / 2 + 1;
  for (int mx = -half; mx <= half; ++mx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const int bx = std::abs(2 * mx - qx);
      if (bx > room.max_order) continue;
      const double ix =
          (1 - 2 * qx) * room.src[0] + 2.0 * mx * room.dims[0] - room.mic[0];
      for (int my = -half; my <= half; ++my) {
        for (int qy = 0; qy <= 1; ++qy) {
          const int by = std::abs(2 * my - qy);
          if (bx + by > room.max_order) continue;
          const double iy = (1 - 2 * qy) * room.src[1] +
                            2.0 * my * room.dims[1] - room.mic[1];
          for (int mz = -half; mz <= half; ++mz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const int b = bx + by + std::abs(2 * mz - qz);
              if (b > room.max_order) continue;
              const double iz = (1 - 2 * qz) * room.src[2] +
                                2.0 * mz * room.dims[2] - room.mic[2];
              const double d = std::sqrt(ix * ix + iy * iy + iz * iz);
              const size_t tap =
                  static_cast<size_t>(std::lround(d / kSpeedOfSound * fs));
              if (tap >= taps.size()) continue;
              taps[tap] += std::pow(refl, b) / (4.0 * std::numbers::pi * d);
            }
          }
        }
      }
    }
  }

  // Truncate where the remaining tail energy drops below 1e-6 of the total.
  double total = 0.0;
  for (double t : taps) total += t * t;
  size_t end = taps.size();
  double tail = 0.0;
  while (end > 1) {
    double v = taps[end - 1];
    if (tail + v * v > 1e-6 * total) break;
    tail += v * v;
    --end;
  }
  taps.resize(end);

  Rir rir;
  rir.taps = std::move(taps);
  rir.sample_rate = sample_rate;
  rir.meta = room;
  return rir;
}

}  // namespace rkd
