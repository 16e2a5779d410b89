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

#ifndef ALIASFREE_SURROGATES_H_
#define ALIASFREE_SURROGATES_H_

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "aliasfree/audio.h"
#include "aliasfree/types.h"

namespace aliasfree {

// Log-spaced cochlear center frequencies, 112 Hz to 12 kHz.
struct CFGrid {
  ArrayX center_freqs;

  Index size() const { return center_freqs.size(); }
  Index NearestChannel(FPType freq_hz) const;

  static CFGrid LogSpaced(int num_channels, FPType lo_hz = 112.0,
                          FPType hi_hz = 12000.0);
  // Every step-th channel of a log-spaced 201-channel grid (e.g. step 10
  // gives the 21 training channels).
  static CFGrid Subsampled201(int step);
};

// OHC gain loss as (freq_hz, loss_db) breakpoints interpolated log-linearly
// in frequency, plus ANF fiber population weights.
struct HearingProfile {
  std::string name = "NH";
  std::vector<std::pair<FPType, FPType>> ohc_breakpoints;
  FPType w_hsr = 13.0;
  FPType w_msr = 3.0;
  FPType w_lsr = 3.0;

  FPType OhcGainDb(FPType cf_hz) const;
  ArrayX OhcGainDb(const CFGrid& grid) const;
};

// Known profiles: "NH" and "Slope35-7,0,0" (no loss below 1 kHz, rising
// log-linearly to 35 dB at 8 kHz and held above, fiber weights 7,0,0).
HearingProfile MakeProfile(const std::string& name);

void WriteProfileFile(const std::string& path, const HearingProfile& profile);
HearingProfile ReadProfileFile(const std::string& path);

// --- Shared linear pieces ---------------------------------------------------

// Causal FIR convolution, output truncated to x's length.
ArrayX CausalConvolve(const ArrayX& x, const ArrayX& kernel);
// Exact adjoint of CausalConvolve (including the truncation).
ArrayX CausalConvolveAdjoint(const ArrayX& grad_out, const ArrayX& kernel);

// One-pole low-pass y[t] = (1-a) x[t] + a y[t-1], with the state seeded from
// x[0] so constant inputs pass through unchanged. `coeff` is a = exp(-2 pi
// fc / fs).
ArrayX OnePoleLowpass(const ArrayX& x, FPType coeff);
ArrayX OnePoleLowpassAdjoint(const ArrayX& grad_out, FPType coeff);

// Sampled impulse responses of 4th-order gammatone filters, one per CF,
// normalized to unit gain at the center frequency. Bandwidth follows
// bandwidth_scale * 1.019 * (24.7 + cf / 9.265) Hz.
class GammatoneBank {
 public:
  GammatoneBank(const CFGrid& grid, FPType sample_rate,
                FPType bandwidth_scale = 1.0);

  FeatureMap Filter(const ArrayX& x) const;                 // N_CF x T
  ArrayX FilterAdjoint(const FeatureMap& grad_out) const;   // sums channel adjoints
  const ArrayX& Kernel(Index channel) const { return kernels_[static_cast<size_t>(channel)]; }
  FPType BandwidthHz(Index channel) const { return bandwidths_[static_cast<size_t>(channel)]; }

 private:
  std::vector<ArrayX> kernels_;
  std::vector<FPType> bandwidths_;
};

// --- Auditory stages ---------------------------------------------------------
//
// Caches are passed explicitly so forward/backward stay pure functions of
// their arguments (safe to share one stage across threads).

struct CochleaCache {
  FeatureMap sharp;     // attenuated sharp-filter output
  FeatureMap broad;     // attenuated broad-filter output
  FeatureMap envelope;  // smoothed |sharp|
  FeatureMap mix;       // envelope / (envelope + kMixScale)
  FeatureMap blended;   // pre-compression drive
};

// Basilar-membrane displacement proxy in meter-like units (peaks around
// 1e-8 m for conversational levels). Each CF blends two CF-normalized
// 4th-order gammatones - a sharp one and a 3x broader one - with a smoothed
// level estimate steering the blend toward the broad filter as level rises
// (cochlear tuning broadens when compression engages). The blend feeds a
// sign-preserving broken-stick compressor: linear below the knee, exponent
// 0.3 above. Both filters share unit gain at CF, so the blend leaves on-CF
// level growth untouched. OHC loss enters as a per-CF input gain reduction
// ahead of the nonlinearity.
class CochleaStage {
 public:
  CochleaStage(const CFGrid& grid, FPType sample_rate,
               const HearingProfile& profile);

  FeatureMap Forward(const ArrayX& audio, CochleaCache* cache = nullptr) const;
  ArrayX Backward(const FeatureMap& grad_out, const CochleaCache& cache) const;

  const CFGrid& grid() const { return grid_; }
  const GammatoneBank& bank() const { return sharp_bank_; }
  static constexpr FPType kKnee = 1e-3;
  static constexpr FPType kExponent = 0.3;
  static constexpr FPType kBroadBandwidthScale = 3.0;
  static constexpr FPType kMixScale = 5e-4;       // envelope at 50% blend
  static constexpr FPType kEnvelopeCutoffHz = 200.0;
  // Filter-domain pressure maps onto displacement at roughly 1e-6 m/Pa,
  // which puts the outputs in the range the x1e6 training scale expects.
  static constexpr FPType kDisplacementPerPa = 1e-6;

 private:
  CFGrid grid_;
  GammatoneBank sharp_bank_;
  GammatoneBank broad_bank_;
  ArrayX gain_linear_;  // 10^(-ohc_gain_db/20) per CF
  FPType envelope_coeff_;
};

struct IhcCache {
  FeatureMap bm;         // input, for the rectifier mask
  FeatureMap lowpassed;  // l, for the saturation slope
};

// Receptor-potential proxy: half-wave rectification, first-order low-pass at
// 3 kHz, then v = -v_sat * tanh(l / l_ref). Outputs are non-positive.
class IhcStage {
 public:
  explicit IhcStage(FPType sample_rate);

  FeatureMap Forward(const FeatureMap& bm, IhcCache* cache = nullptr) const;
  FeatureMap Backward(const FeatureMap& grad_out, const IhcCache& cache) const;

  static constexpr FPType kVsat = 0.03;
  static constexpr FPType kLref = 5e-9;  // in BM displacement units
  static constexpr FPType kLowpassHz = 3000.0;

 private:
  FPType coeff_;
};

struct FiberParams {
  FPType spont;       // spikes/s at silence
  FPType sat;         // saturation rate
  FPType threshold;   // drive units
  FPType gain;        // slope of the saturating map
};

struct AnfCache {
  // Per fiber type, in HSR/MSR/LSR order.
  std::array<FeatureMap, 3> drive_minus_thr;
  std::array<FeatureMap, 3> sat_out;  // tanh(gain * relu(drive - thr))
  std::array<FeatureMap, 3> raw;      // pre-clamp adapted rate
};

// Firing-rate proxies for the three fiber types: a saturating rate map with
// type-specific threshold/slope plus a single-pole adaptation stage that
// emphasizes onsets. All outputs are >= 0.
class AnfStage {
 public:
  explicit AnfStage(FPType sample_rate);

  std::array<FeatureMap, 3> Forward(const FeatureMap& ihc,
                                    AnfCache* cache = nullptr) const;
  FeatureMap Backward(const std::array<FeatureMap, 3>& grad_out,
                      const AnfCache& cache) const;

  const FiberParams& fiber(int i) const { return fibers_[static_cast<size_t>(i)]; }
  static constexpr FPType kAdaptCutoffHz = 50.0;
  static constexpr FPType kOnsetGain = 1.0;

 private:
  std::array<FiberParams, 3> fibers_;
  FPType adapt_coeff_;
};

// Weighted AN response r_f = H*hsr + M*msr + L*lsr (per CF) and the
// population response p(n) summed over CF channels.
void AnPopulation(const FeatureMap& hsr, const FeatureMap& msr,
                  const FeatureMap& lsr, FPType w_h, FPType w_m, FPType w_l,
                  FeatureMap* r_f, ArrayX* population);

struct ChainCache {
  CochleaCache cochlea;
  IhcCache ihc;
  AnfCache anf;
};

// Full surrogate periphery: cochlea -> IHC -> ANF -> weighted AN response.
class AuditoryChain {
 public:
  AuditoryChain(const CFGrid& grid, FPType sample_rate,
                const HearingProfile& profile);

  // r_f, shape N_CF x T.
  FeatureMap Forward(const ArrayX& audio, ChainCache* cache = nullptr) const;
  ArrayX Backward(const FeatureMap& grad_rf, const ChainCache& cache) const;

  const CFGrid& grid() const { return grid_; }
  const HearingProfile& profile() const { return profile_; }
  const CochleaStage& cochlea() const { return cochlea_; }
  const IhcStage& ihc() const { return ihc_; }
  const AnfStage& anf() const { return anf_; }

 private:
  CFGrid grid_;
  HearingProfile profile_;
  CochleaStage cochlea_;
  IhcStage ihc_;
  AnfStage anf_;
};

}  // namespace aliasfree

#endif  // ALIASFREE_SURROGATES_H_
