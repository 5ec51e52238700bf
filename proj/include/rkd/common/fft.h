// rkd/common/fft.h
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

#ifndef RKD_COMMON_FFT_H_
#define RKD_COMMON_FFT_H_

#include <complex>
#include <cstddef>
#include <vector>

namespace rkd {

// In-place iterative radix-2 FFT; x.size() must be a power of two.
void fft(std::vector<std::complex<double>>& x, bool inverse = false);

size_t next_pow2(size_t n);

// Power spectrum of a real signal zero-padded to nfft (power of two);
// returns nfft/2 + 1 bins.
std::vector<double> power_spectrum(const std::vector<double>& x, size_t nfft);

// Index of the largest bin in a power spectrum, as a frequency in Hz.
double dominant_frequency_hz(const std::vector<double>& x, int sample_rate,
                             size_t nfft);

}  // namespace rkd

#endif  // RKD_COMMON_FFT_H_
