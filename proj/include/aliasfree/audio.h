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

#ifndef ALIASFREE_AUDIO_H_
#define ALIASFREE_AUDIO_H_

#include <string>
#include <vector>

#include "aliasfree/types.h"

namespace aliasfree {

// Mono waveform. Sample values are sound pressure in pascal (1.0 == 1 Pa),
// which keeps absolute SPL calibration intact through file round-trips.
struct AudioBuffer {
  ArrayX samples;
  FPType sample_rate = kDefaultSampleRateHz;

  Index size() const { return samples.size(); }
};

// A segmentation window: core samples plus left/right context drawn from the
// neighboring signal (zero-padded at the edges).
struct Frame {
  ArrayX left_context;
  ArrayX core;
  ArrayX right_context;

  Index TotalLength() const {
    return left_context.size() + core.size() + right_context.size();
  }
  // Concatenated [left | core | right].
  ArrayX Concatenated() const;
};

FPType Rms(const AudioBuffer& buffer);

// Rescales so that the output RMS is p0 * 10^(level_db_spl / 20) with
// p0 = 2e-5 Pa. Throws on silent input.
AudioBuffer ScaleToSpl(const AudioBuffer& buffer, FPType level_db_spl);

// Frame k covers core samples [k*hop, k*hop + core_len). Contexts come from
// the surrounding samples and are zero-padded where the signal runs out.
std::vector<Frame> Segment(const ArrayX& signal, Index core_len,
                           Index left_len, Index right_len, Index hop);

// Deterministic signal generators used by probes and the corpus builder.
ArrayX Sine(FPType freq_hz, FPType sample_rate, Index n, FPType phase = 0.0);
ArrayX UnitStep(Index n);

// 32-bit float mono WAV. Values pass through unscaled (Pa).
void WriteWav(const std::string& path, const AudioBuffer& buffer);
AudioBuffer ReadWav(const std::string& path);

}  // namespace aliasfree

#endif  // ALIASFREE_AUDIO_H_
