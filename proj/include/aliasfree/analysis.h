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

#ifndef ALIASFREE_ANALYSIS_H_
#define ALIASFREE_ANALYSIS_H_

#include <functional>
#include <string>
#include <vector>

#include "aliasfree/audio.h"
#include "aliasfree/model.h"
#include "aliasfree/spectrum.h"
#include "aliasfree/surrogates.h"
#include "aliasfree/types.h"

namespace aliasfree {

// Reported when the fractional-harmonic numerator falls below 1e-8 of the
// fundamental.
inline constexpr FPType kThdFloorDb = -160.0;
// Clamp for log-domain energies of numerically empty bands.
inline constexpr FPType kEnergyFloorDb = -300.0;

struct BandEnergy {
  FPType lo_hz = 0.0;
  FPType hi_hz = 0.0;
  FPType energy_db = kEnergyFloorDb;
};

struct ArtifactReport {
  std::string stimulus_kind;  // "tone" | "step"
  FPType freq_hz = 0.0;
  FPType level_db_spl = 0.0;
  Spectrum spectrum;  // of the probed output channel
  FPType thd_db = kThdFloorDb;
  std::vector<BandEnergy> bands;
  std::vector<FPType> peak_freqs_hz;  // step-probe detections
  std::string notes;
};

// Versioned flat text format; the spectrum goes to a separate CSV.
void WriteReport(const std::string& path, const ArtifactReport& report);
// Rows of `freq_hz,magnitude_db`.
void WriteSpectrumDbCsv(const std::string& path, const Spectrum& spectrum);

// --- Metrics ----------------------------------------------------------------

// 20*log10(sqrt(sum_{k>=5} H_{k/4}^2) / H_1), fractional harmonics read at
// the bins nearest k*f0/4 up to Nyquist. Probe durations are chosen so these
// land exactly on bins. Returns kThdFloorDb when no fractional harmonic
// rises above the numeric floor; throws if the fundamental itself is absent.
FPType ThdFractional(const Spectrum& spectrum, FPType f0);

// 10*log10 of the summed squared magnitudes in [lo_hz, hi_hz).
FPType BandEnergyDb(const Spectrum& spectrum, FPType lo_hz, FPType hi_hz);

// 100 * sqrt(mean((p - p_hat)^2)) / max(p).
FPType Nrmse(const ArrayX& p, const ArrayX& p_hat);

// --- Probe systems ------------------------------------------------------------

// A probed system maps a calibrated stimulus to channels x time output of the
// same length. `periodic` tells wrappers whether the stimulus may be extended
// by buffer-periodic repetition (true for bin-aligned tones) or by holding
// the edge values (steps).
struct ProbeSystem {
  std::function<FeatureMap(const AudioBuffer&, bool periodic)> run;
  ArrayX channel_freqs;  // CF per row; empty for single-row systems
};

ProbeSystem IdentitySystem();
ProbeSystem MemorylessSystem(std::function<FPType(FPType)> f);
// Pads the stimulus (periodically or edge-held) so the model sees steady
// state, then crops the core-aligned output. pad_min is rounded up to cover
// the model contexts; the padded length is kept divisible by
// `length_multiple` (pass 2^depth for autoencoders).
ProbeSystem ModelProbeSystem(const Model* model, Index pad_min = 2048,
                             Index length_multiple = 1);
// Per-CF stage output (e.g. the surrogate cochlea); the probe picks the
// channel nearest the stimulus frequency.
ProbeSystem CochleaSystem(const CochleaStage* stage);

// --- Probes -------------------------------------------------------------------

// Calibrated tone through the system; reports the spectrum and fractional
// THD of the output channel nearest `freq_hz` (or the only row).
ArtifactReport ToneProbe(const ProbeSystem& system, FPType freq_hz,
                         FPType level_db_spl, FPType duration_s, FPType fs);

// Mid-buffer step scaled to the level; reports spectral peaks rising at
// least 12 dB above a 9-bin median-smoothed baseline.
ArtifactReport StepProbe(const ProbeSystem& system, FPType level_db_spl,
                         FPType fs, Index length = 4096);

struct AliasingProbeResult {
  ArtifactReport report;
  FPType sub500_energy_db = kEnergyFloorDb;
};

// 1 kHz, 70 dB SPL tone through `depth` identity-weight stride-2 stages
// (cutoff-0.5 prefilters when antialias), reconstructed back to the input
// rate with windowed-sinc interpolation; reports the sub-500 Hz band energy.
AliasingProbeResult AliasingProbe(int depth, bool antialias, FPType fs);

// Feeds a bin-aligned tone at rate fs/factor through the upsampler and
// measures the output energy in a +-50 Hz band around fs/factor - f0. For
// factor == 1 no image band exists below Nyquist and the floor is returned.
FPType ImagingProbe(const std::function<ArrayX(const ArrayX&)>& upsampler,
                    int factor, FPType f0, FPType fs, Index n_out);

// --- Auditory-property measurements --------------------------------------------

// ERB from the power spectrum of a channel's click response
// (ERB = integral P df / max P); returns CF / ERB. The click is 100 us at
// peak-equivalent SPL `click_level_db`.
FPType QErb(const std::function<ArrayX(const ArrayX&)>& channel_response,
            FPType cf_hz, FPType click_level_db, FPType fs, Index length = 4096);
// The same on one cochlear channel.
FPType QErbOfCochlea(const CochleaStage& stage, Index channel,
                     FPType click_level_db, FPType fs);

struct ExcitationPatterns {
  ArrayX cf_hz;
  std::vector<FPType> tone_freqs_hz;
  std::vector<FPType> levels_db;
  std::vector<ArrayXX> rms;  // per tone: CF x level
};

ExcitationPatterns MeasureExcitationPatterns(
    const std::function<FeatureMap(const AudioBuffer&)>& stage,
    const CFGrid& grid, const std::vector<FPType>& tone_freqs_hz,
    const std::vector<FPType>& levels_db, FPType fs,
    FPType duration_s = 0.1);
// Rows of `tone_hz,level_db,cf_hz,rms`.
void WriteExcitationCsv(const std::string& path, const ExcitationPatterns& p);

struct RateLevelCurves {
  std::vector<FPType> levels_db;
  ArrayXX rates;  // 3 x levels, HSR/MSR/LSR order
};

// 50 ms tone at the channel CF with 2.5 ms raised-cosine ramps; mean firing
// rate in the 10-40 ms window after onset.
RateLevelCurves MeasureRateLevel(FPType cf_hz, const std::vector<FPType>& levels_db,
                                 FPType fs, const HearingProfile& profile);
// Rows of `level_db,hsr,msr,lsr`.
void WriteRateLevelCsv(const std::string& path, const RateLevelCurves& c);

struct SynchronyLevelCurves {
  std::vector<FPType> levels_db;
  ArrayXX fm_magnitude;  // 3 x levels
};

// 400 ms fully modulated tone (f_m = 100 Hz); magnitude of the f_m component
// of each fiber's rate spectrum, transient-trimmed.
SynchronyLevelCurves MeasureSynchronyLevel(FPType carrier_hz, FPType fm_hz,
                                           const std::vector<FPType>& levels_db,
                                           FPType fs,
                                           const HearingProfile& profile,
                                           FPType modulation_depth = 1.0);
void WriteSynchronyCsv(const std::string& path, const SynchronyLevelCurves& c);

// --- Real-time factor -----------------------------------------------------------

struct BenchResult {
  FPType mean_frame_ms = 0.0;
  FPType rtf = 0.0;  // mean_frame_ms / frame duration in ms
  int n_frames = 0;
  Index frame_len = 0;
  std::string hardware;
};

// Wall-clock mean forward time over `n_frames` frames of `frame_len` core
// samples. Single-threaded by contract.
BenchResult RtfBench(const Model& model, Index frame_len = 512,
                     int n_frames = 100, FPType fs = kDefaultSampleRateHz);

}  // namespace aliasfree

#endif  // ALIASFREE_ANALYSIS_H_
