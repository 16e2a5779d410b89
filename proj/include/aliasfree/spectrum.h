// Copyright 2026 The Aliasfree Authors.
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

#ifndef ALIASFREE_SPECTRUM_H_
#define ALIASFREE_SPECTRUM_H_

#include <string>

#include "aliasfree/audio.h"
#include "aliasfree/types.h"

namespace aliasfree {

enum class SpectralWindow { kNone, kHann };

// One-sided magnitude spectrum. Magnitudes are scaled so a bin-centered sine
// of amplitude A reads A/sqrt(2) (its RMS), which makes the sum of squared
// magnitudes equal the signal's mean power exactly.
struct Spectrum {
  ArrayX bin_freqs;   // Hz, strictly increasing from 0
  ArrayX magnitudes;  // linear amplitude, >= 0
  FPType resolution_hz = 0.0;

  Index size() const { return bin_freqs.size(); }
  FPType Nyquist() const { return bin_freqs[bin_freqs.size() - 1]; }
  // Index of the bin whose center is nearest to freq_hz.
  Index NearestBin(FPType freq_hz) const;
};

// DFT length is the buffer length; probes pick lengths that give integer
// periods of their test tones, so no zero-padding or leakage correction is
// needed here.
Spectrum MagnitudeSpectrum(const AudioBuffer& buffer,
                           SpectralWindow window = SpectralWindow::kNone);

// Rows of `freq_hz,magnitude`.
void WriteSpectrumCsv(const std::string& path, const Spectrum& spectrum);

}  // namespace aliasfree

#endif  // ALIASFREE_SPECTRUM_H_
