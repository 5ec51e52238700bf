// rkd/audio/waveform.cc
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

#include "rkd/audio/waveform.h"

#include <cmath>
#include <string>

#include "rkd/common/error.h"

namespace rkd {

double rms(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double rms(const Waveform& w) { return rms(w.samples); }

void limit_peak(Waveform& w, double peak) {
  double p = 0.0;
  for (double v : w.samples) p = std::max(p, std::fabs(v));
  if (p > peak && p > 0.0) {
    const double g = peak / p;
    for (double& v : w.samples) v *= g;
  }
}

void validate_waveform(const Waveform& w, const char* context) {
  if (w.empty())
    throw ShapeError(std::string(context) + ": empty waveform");
  for (double v : w.samples)
    if (!std::isfinite(v))
      throw NumericError(std::string(context) + ": non-finite sample");
}

}  // namespace rkd
