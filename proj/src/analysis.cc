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

#include "aliasfree/analysis.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "aliasfree/fir.h"
#include "aliasfree/rng.h"

namespace aliasfree {

void WriteReport(const std::string& path, const ArtifactReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  char buf[160];
  os << "ALIASFREE-REPORT v1\n";
  os << "stimulus " << report.stimulus_kind << "\n";
  std::snprintf(buf, sizeof(buf), "freq_hz %.9g\n", report.freq_hz);
  os << buf;
  std::snprintf(buf, sizeof(buf), "level_db_spl %.9g\n", report.level_db_spl);
  os << buf;
  std::snprintf(buf, sizeof(buf), "thd_db %.9g\n", report.thd_db);
  os << buf;
  os << "bands " << report.bands.size() << "\n";
  for (const BandEnergy& b : report.bands) {
    std::snprintf(buf, sizeof(buf), "band %.9g %.9g %.9g\n", b.lo_hz, b.hi_hz,
                  b.energy_db);
    os << buf;
  }
  os << "peaks " << report.peak_freqs_hz.size() << "\n";
  for (const FPType f : report.peak_freqs_hz) {
    std::snprintf(buf, sizeof(buf), "peak %.9g\n", f);
    os << buf;
  }
  os << "notes " << report.notes << "\n";
}

void WriteSpectrumDbCsv(const std::string& path, const Spectrum& spectrum) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "freq_hz,magnitude_db\n";
  char line[64];
  for (Index i = 0; i < spectrum.size(); ++i) {
    const FPType db = 20.0 * std::log10(std::max(spectrum.magnitudes[i], 1e-300));
    std::snprintf(line, sizeof(line), "%.9g,%.9g\n", spectrum.bin_freqs[i],
                  std::max(db, kEnergyFloorDb));
    os << line;
  }
}

FPType ThdFractional(const Spectrum& spectrum, FPType f0) {
  const Index fundamental_bin = spectrum.NearestBin(f0);
  const FPType h1 = spectrum.magnitudes[fundamental_bin];
  if (h1 < 1e-12) {
    throw std::invalid_argument("no fundamental detected at probe frequency");
  }
  const FPType nyquist = spectrum.Nyquist();
  FPType sum_sq = 0.0;
  for (int k = 5;; ++k) {
    const FPType f = static_cast<FPType>(k) * f0 / 4.0;
    if (f > nyquist) break;
    const FPType h = spectrum.magnitudes[spectrum.NearestBin(f)];
    sum_sq += h * h;
  }
  const FPType numerator = std::sqrt(sum_sq);
  if (numerator < 1e-8 * h1) return kThdFloorDb;
  return 20.0 * std::log10(numerator / h1);
}

FPType BandEnergyDb(const Spectrum& spectrum, FPType lo_hz, FPType hi_hz) {
  if (!(lo_hz < hi_hz) || hi_hz > spectrum.Nyquist() + spectrum.resolution_hz) {
    throw std::invalid_argument("empty or out-of-range band");
  }
  FPType sum = 0.0;
  Index used = 0;
  for (Index i = 0; i < spectrum.size(); ++i) {
    const FPType f = spectrum.bin_freqs[i];
    if (f >= lo_hz && f < hi_hz) {
      sum += spectrum.magnitudes[i] * spectrum.magnitudes[i];
      ++used;
    }
  }
  if (used == 0) throw std::invalid_argument("band contains no bins");
  return std::max(10.0 * std::log10(std::max(sum, 1e-300)), kEnergyFloorDb);
}

FPType Nrmse(const ArrayX& p, const ArrayX& p_hat) {
  if (p.size() != p_hat.size()) throw std::invalid_argument("length mismatch");
  if (p.size() == 0) throw std::invalid_argument("empty sequences");
  const FPType peak = p.maxCoeff();
  if (!(peak > 0.0)) throw std::invalid_argument("max of reference is not positive");
  const FPType rmse = std::sqrt((p - p_hat).square().mean());
  return 100.0 * rmse / peak;
}

// --- Probe systems ------------------------------------------------------------

ProbeSystem IdentitySystem() {
  ProbeSystem s;
  s.run = [](const AudioBuffer& in, bool) {
    FeatureMap out(1, in.samples.size());
    out.row(0) = in.samples.transpose();
    return out;
  };
  return s;
}

ProbeSystem MemorylessSystem(std::function<FPType(FPType)> f) {
  ProbeSystem s;
  s.run = [f = std::move(f)](const AudioBuffer& in, bool) {
    FeatureMap out(1, in.samples.size());
    for (Index i = 0; i < in.samples.size(); ++i) out(0, i) = f(in.samples[i]);
    return out;
  };
  return s;
}

ProbeSystem ModelProbeSystem(const Model* model, Index pad_min,
                             Index length_multiple) {
  ProbeSystem s;
  s.run = [model, pad_min, length_multiple](const AudioBuffer& in,
                                            bool periodic) {
    const Index n = in.samples.size();
    if (n % length_multiple != 0) {
      throw std::invalid_argument(
          "probe length must be divisible by the model's length multiple");
    }
    Index pad = std::max<Index>(
        pad_min, std::max<Index>(model->LeftContext(), model->RightContext()));
    if (length_multiple > 1 && pad % length_multiple != 0) {
      pad += length_multiple - pad % length_multiple;
    }
    ArrayX padded(n + 2 * pad);
    for (Index i = 0; i < padded.size(); ++i) {
      const Index src = i - pad;
      if (periodic) {
        padded[i] = in.samples[((src % n) + n) % n];
      } else {
        padded[i] = in.samples[std::clamp<Index>(src, 0, n - 1)];
      }
    }
    FeatureMap x(1, padded.size());
    x.row(0) = padded.transpose();
    const FeatureMap out = model->Infer(x);
    // Output sample j aligns with input sample left_context + j.
    const Index start = pad - model->LeftContext();
    return FeatureMap(out.block(0, start, out.rows(), n));
  };
  return s;
}

ProbeSystem CochleaSystem(const CochleaStage* stage) {
  ProbeSystem s;
  s.run = [stage](const AudioBuffer& in, bool) {
    return stage->Forward(in.samples);
  };
  s.channel_freqs = stage->grid().center_freqs;
  return s;
}

// --- Probes ---------------------------------------------------------------------

namespace {

Index PickChannel(const ProbeSystem& system, const FeatureMap& out,
                  FPType freq_hz) {
  if (out.rows() == 1 || system.channel_freqs.size() == 0) return 0;
  Index best = 0;
  FPType best_dist = std::abs(system.channel_freqs[0] - freq_hz);
  for (Index i = 1; i < system.channel_freqs.size(); ++i) {
    const FPType d = std::abs(system.channel_freqs[i] - freq_hz);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

ArtifactReport ToneProbe(const ProbeSystem& system, FPType freq_hz,
                         FPType level_db_spl, FPType duration_s, FPType fs) {
  const Index n = static_cast<Index>(std::lround(duration_s * fs));
  const FPType cycles = freq_hz * static_cast<FPType>(n) / fs;
  if (std::abs(cycles - std::round(cycles)) > 1e-6) {
    throw std::invalid_argument(
        "probe frequency is not bin-aligned for this duration");
  }
  AudioBuffer stim{Sine(freq_hz, fs, n), fs};
  stim = ScaleToSpl(stim, level_db_spl);
  const FeatureMap out = system.run(stim, /*periodic=*/true);
  const Index channel = PickChannel(system, out, freq_hz);
  AudioBuffer row{out.row(channel).transpose(), fs};
  ArtifactReport report;
  report.stimulus_kind = "tone";
  report.freq_hz = freq_hz;
  report.level_db_spl = level_db_spl;
  report.spectrum = MagnitudeSpectrum(row, SpectralWindow::kNone);
  report.thd_db = ThdFractional(report.spectrum, freq_hz);
  return report;
}

ArtifactReport StepProbe(const ProbeSystem& system, FPType level_db_spl,
                         FPType fs, Index length) {
  ArrayX raw = ArrayX::Zero(length);
  raw.segment(length / 2, length - length / 2).setOnes();
  AudioBuffer stim{raw, fs};
  stim = ScaleToSpl(stim, level_db_spl);
  const FeatureMap out = system.run(stim, /*periodic=*/false);
  const Index channel = PickChannel(system, out, 1000.0);
  AudioBuffer row{out.row(channel).transpose(), fs};
  ArtifactReport report;
  report.stimulus_kind = "step";
  report.level_db_spl = level_db_spl;
  report.spectrum = MagnitudeSpectrum(row, SpectralWindow::kNone);

  // Peaks: local maxima at least 12 dB above a 9-bin median-smoothed
  // baseline of the dB spectrum.
  const Index bins = report.spectrum.size();
  ArrayX db(bins);
  for (Index i = 0; i < bins; ++i) {
    db[i] = 20.0 * std::log10(std::max(report.spectrum.magnitudes[i], 1e-300));
  }
  constexpr Index kHalfWindow = 4;  // 9-bin median
  constexpr FPType kThresholdDb = 12.0;
  std::vector<FPType> window;
  for (Index i = kHalfWindow; i + kHalfWindow < bins; ++i) {
    window.clear();
    for (Index j = i - kHalfWindow; j <= i + kHalfWindow; ++j) {
      window.push_back(db[j]);
    }
    std::nth_element(window.begin(), window.begin() + 4, window.end());
    const FPType baseline = window[4];
    if (db[i] > baseline + kThresholdDb && db[i] > db[i - 1] &&
        db[i] >= db[i + 1]) {
      report.peak_freqs_hz.push_back(report.spectrum.bin_freqs[i]);
    }
  }
  return report;
}

namespace {

// Circular zero-phase FIR, used by the aliasing probe so the bin-aligned
// probe tone stays leakage-free through every stage.
ArrayX CircularFirFilter(const ArrayX& x, const ArrayX& taps) {
  const Index n = x.size();
  const Index k = taps.size();
  const Index delay = (k - 1) / 2;
  ArrayX y = ArrayX::Zero(n);
  for (Index t = 0; t < n; ++t) {
    FPType acc = 0.0;
    for (Index j = 0; j < k; ++j) {
      acc += taps[j] * x[(((t + delay - j) % n) + n) % n];
    }
    y[t] = acc;
  }
  return y;
}

}  // namespace

AliasingProbeResult AliasingProbe(int depth, bool antialias, FPType fs) {
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  // 20480 samples: 1 kHz lands on a bin and the length is divisible by 2^8.
  const Index n = 20480;
  AudioBuffer stim{Sine(1000.0, fs, n), fs};
  stim = ScaleToSpl(stim, 70.0);

  ArrayX x = stim.samples;
  const ArrayX lp = antialias && depth > 0 ? DesignLowpass(0.5, 127) : ArrayX();
  for (int d = 0; d < depth; ++d) {
    if (antialias) x = CircularFirFilter(x, lp);
    // Identity-weight stride-2 convolution, i.e. plain decimation.
    ArrayX down((x.size() + 1) / 2);
    for (Index i = 0; i < down.size(); ++i) down[i] = x[2 * i];
    x = down;
  }
  const int factor = 1 << depth;
  ArrayX recon = x;
  if (factor > 1) {
    recon = SincInterpolate(x, factor, std::min<int>(4097, 8 * factor + 1));
  }
  AudioBuffer out{recon, fs};
  AliasingProbeResult result;
  result.report.stimulus_kind = "tone";
  result.report.freq_hz = 1000.0;
  result.report.level_db_spl = 70.0;
  result.report.spectrum = MagnitudeSpectrum(out, SpectralWindow::kNone);
  result.sub500_energy_db = BandEnergyDb(result.report.spectrum, 0.0, 500.0);
  result.report.bands.push_back({0.0, 500.0, result.sub500_energy_db});
  result.report.notes = antialias ? "aliasing probe, cutoff-0.5 prefilters"
                                  : "aliasing probe, no prefilter";
  return result;
}

FPType ImagingProbe(const std::function<ArrayX(const ArrayX&)>& upsampler,
                    int factor, FPType f0, FPType fs, Index n_out) {
  if (factor < 1) throw std::invalid_argument("factor must be >= 1");
  if (factor == 1) return kEnergyFloorDb;  // no image below Nyquist
  const Index n_low = n_out / factor;
  const FPType fs_low = fs / static_cast<FPType>(factor);
  const FPType cycles = f0 * static_cast<FPType>(n_low) / fs_low;
  if (std::abs(cycles - std::round(cycles)) > 1e-6) {
    throw std::invalid_argument("tone is not bin-aligned at the low rate");
  }
  AudioBuffer low{Sine(f0, fs_low, n_low), fs_low};
  low = ScaleToSpl(low, 70.0);
  ArrayX out = upsampler(low.samples);
  if (out.size() != n_out) {
    throw std::invalid_argument("upsampler returned unexpected length");
  }
  AudioBuffer buf{out, fs};
  const Spectrum spec = MagnitudeSpectrum(buf, SpectralWindow::kNone);
  const FPType mirror = fs / static_cast<FPType>(factor) - f0;
  return BandEnergyDb(spec, mirror - 50.0, mirror + 50.0);
}

// --- Auditory-property measurements -----------------------------------------------

FPType QErb(const std::function<ArrayX(const ArrayX&)>& channel_response,
            FPType cf_hz, FPType click_level_db, FPType fs, Index length) {
  // 100 us condensation click at peak-equivalent SPL.
  const Index click_samples =
      std::max<Index>(1, static_cast<Index>(std::lround(1e-4 * fs)));
  ArrayX click = ArrayX::Zero(length);
  const FPType amp = std::sqrt(2.0) * kReferencePressurePa *
                     std::pow(10.0, click_level_db / 20.0);
  click.segment(16, click_samples).setConstant(amp);
  const ArrayX resp = channel_response(click);
  AudioBuffer buf{resp, fs};
  const Spectrum spec = MagnitudeSpectrum(buf, SpectralWindow::kNone);
  const ArrayX power = spec.magnitudes.square();
  const FPType peak = power.maxCoeff();
  if (!(peak > 0.0)) {
    throw std::invalid_argument("degenerate flat spectrum in click response");
  }
  const FPType erb = power.sum() * spec.resolution_hz / peak;
  return cf_hz / erb;
}

FPType QErbOfCochlea(const CochleaStage& stage, Index channel,
                     FPType click_level_db, FPType fs) {
  const FPType cf = stage.grid().center_freqs[channel];
  return QErb(
      [&stage, channel](const ArrayX& click) {
        return ArrayX(stage.Forward(click).row(channel).transpose());
      },
      cf, click_level_db, fs);
}

ExcitationPatterns MeasureExcitationPatterns(
    const std::function<FeatureMap(const AudioBuffer&)>& stage,
    const CFGrid& grid, const std::vector<FPType>& tone_freqs_hz,
    const std::vector<FPType>& levels_db, FPType fs, FPType duration_s) {
  ExcitationPatterns out;
  out.cf_hz = grid.center_freqs;
  out.tone_freqs_hz = tone_freqs_hz;
  out.levels_db = levels_db;
  const Index n = static_cast<Index>(std::lround(duration_s * fs));
  const Index skip = n / 5;  // drop the onset transient
  for (const FPType f : tone_freqs_hz) {
    ArrayXX rms(grid.size(), static_cast<Index>(levels_db.size()));
    for (size_t li = 0; li < levels_db.size(); ++li) {
      AudioBuffer stim{Sine(f, fs, n), fs};
      stim = ScaleToSpl(stim, levels_db[li]);
      const FeatureMap resp = stage(stim);
      for (Index c = 0; c < grid.size(); ++c) {
        rms(c, static_cast<Index>(li)) = std::sqrt(
            resp.row(c).segment(skip, n - skip).square().mean());
      }
    }
    out.rms.push_back(std::move(rms));
  }
  return out;
}

void WriteExcitationCsv(const std::string& path, const ExcitationPatterns& p) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "tone_hz,level_db,cf_hz,rms\n";
  char line[128];
  for (size_t fi = 0; fi < p.tone_freqs_hz.size(); ++fi) {
    for (size_t li = 0; li < p.levels_db.size(); ++li) {
      for (Index c = 0; c < p.cf_hz.size(); ++c) {
        std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g,%.12g\n",
                      p.tone_freqs_hz[fi], p.levels_db[li], p.cf_hz[c],
                      p.rms[fi](c, static_cast<Index>(li)));
        os << line;
      }
    }
  }
}

namespace {

ArrayX RaisedCosineRamped(const ArrayX& x, Index ramp_samples) {
  ArrayX out = x;
  for (Index i = 0; i < ramp_samples && i < out.size(); ++i) {
    const FPType g =
        0.5 - 0.5 * std::cos(kPi * static_cast<FPType>(i) /
                             static_cast<FPType>(ramp_samples));
    out[i] *= g;
    out[out.size() - 1 - i] *= g;
  }
  return out;
}

}  // namespace

RateLevelCurves MeasureRateLevel(FPType cf_hz,
                                 const std::vector<FPType>& levels_db,
                                 FPType fs, const HearingProfile& profile) {
  CFGrid grid;
  grid.center_freqs.resize(1);
  grid.center_freqs[0] = cf_hz;
  CochleaStage cochlea(grid, fs, profile);
  IhcStage ihc(fs);
  AnfStage anf(fs);

  const Index n = static_cast<Index>(std::lround(0.050 * fs));
  const Index ramp = static_cast<Index>(std::lround(0.0025 * fs));
  const Index win_lo = static_cast<Index>(std::lround(0.010 * fs));
  const Index win_hi = static_cast<Index>(std::lround(0.040 * fs));

  RateLevelCurves out;
  out.levels_db = levels_db;
  out.rates.resize(3, static_cast<Index>(levels_db.size()));
  for (size_t li = 0; li < levels_db.size(); ++li) {
    AudioBuffer stim{RaisedCosineRamped(Sine(cf_hz, fs, n), ramp), fs};
    stim = ScaleToSpl(stim, levels_db[li]);
    const auto rates = anf.Forward(ihc.Forward(cochlea.Forward(stim.samples)));
    for (int f = 0; f < 3; ++f) {
      out.rates(f, static_cast<Index>(li)) =
          rates[static_cast<size_t>(f)].row(0).segment(win_lo, win_hi - win_lo).mean();
    }
  }
  return out;
}

void WriteRateLevelCsv(const std::string& path, const RateLevelCurves& c) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "level_db,hsr,msr,lsr\n";
  char line[128];
  for (size_t li = 0; li < c.levels_db.size(); ++li) {
    std::snprintf(line, sizeof(line), "%.9g,%.12g,%.12g,%.12g\n",
                  c.levels_db[li], c.rates(0, static_cast<Index>(li)),
                  c.rates(1, static_cast<Index>(li)),
                  c.rates(2, static_cast<Index>(li)));
    os << line;
  }
}

SynchronyLevelCurves MeasureSynchronyLevel(FPType carrier_hz, FPType fm_hz,
                                           const std::vector<FPType>& levels_db,
                                           FPType fs,
                                           const HearingProfile& profile,
                                           FPType modulation_depth) {
  CFGrid grid;
  grid.center_freqs.resize(1);
  grid.center_freqs[0] = carrier_hz;
  CochleaStage cochlea(grid, fs, profile);
  IhcStage ihc(fs);
  AnfStage anf(fs);

  const Index n = static_cast<Index>(std::lround(0.400 * fs));
  // Analyze the trailing 0.3 s so the f_m component stays bin-aligned.
  const Index n_analysis = static_cast<Index>(std::lround(0.300 * fs));
  const Index skip = n - n_analysis;

  SynchronyLevelCurves out;
  out.levels_db = levels_db;
  out.fm_magnitude.resize(3, static_cast<Index>(levels_db.size()));
  const ArrayX t = ArrayX::LinSpaced(n, 0.0, static_cast<FPType>(n - 1)) / fs;
  const ArrayX envelope = 1.0 + modulation_depth * (2.0 * kPi * fm_hz * t).sin();
  const ArrayX carrier = (2.0 * kPi * carrier_hz * t).sin();
  for (size_t li = 0; li < levels_db.size(); ++li) {
    AudioBuffer stim{envelope * carrier, fs};
    stim = ScaleToSpl(stim, levels_db[li]);
    const auto rates = anf.Forward(ihc.Forward(cochlea.Forward(stim.samples)));
    for (int f = 0; f < 3; ++f) {
      AudioBuffer rate_row{
          rates[static_cast<size_t>(f)].row(0).segment(skip, n_analysis).transpose(),
          fs};
      // Hann keeps carrier-rate leakage away from the (bin-aligned) f_m bin.
      const Spectrum spec = MagnitudeSpectrum(rate_row, SpectralWindow::kHann);
      out.fm_magnitude(f, static_cast<Index>(li)) =
          spec.magnitudes[spec.NearestBin(fm_hz)];
    }
  }
  return out;
}

void WriteSynchronyCsv(const std::string& path, const SynchronyLevelCurves& c) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "level_db,hsr,msr,lsr\n";
  char line[128];
  for (size_t li = 0; li < c.levels_db.size(); ++li) {
    std::snprintf(line, sizeof(line), "%.9g,%.12g,%.12g,%.12g\n",
                  c.levels_db[li], c.fm_magnitude(0, static_cast<Index>(li)),
                  c.fm_magnitude(1, static_cast<Index>(li)),
                  c.fm_magnitude(2, static_cast<Index>(li)));
    os << line;
  }
}

// --- Real-time factor --------------------------------------------------------------

namespace {

std::string CpuModelName() {
  std::ifstream is("/proc/cpuinfo");
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("model name", 0) == 0) {
      const size_t colon = line.find(':');
      if (colon != std::string::npos) {
        size_t start = colon + 1;
        while (start < line.size() && line[start] == ' ') ++start;
        return line.substr(start);
      }
    }
  }
  return "unknown cpu";
}

}  // namespace

BenchResult RtfBench(const Model& model, Index frame_len, int n_frames,
                     FPType fs) {
  if (n_frames <= 0) throw std::invalid_argument("no frames");
  Rng rng(12345);
  const Index total = model.LeftContext() + frame_len + model.RightContext();
  FeatureMap frame(model.InChannels(), total);
  for (Index c = 0; c < frame.rows(); ++c) {
    frame.row(c) = (0.02 * rng.NormalArray(total)).transpose();
  }
  (void)model.Infer(frame);  // warm-up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < n_frames; ++i) (void)model.Infer(frame);
  const auto stop = std::chrono::steady_clock::now();
  const FPType total_ms =
      std::chrono::duration<FPType, std::milli>(stop - start).count();
  BenchResult result;
  result.n_frames = n_frames;
  result.frame_len = frame_len;
  result.mean_frame_ms = total_ms / static_cast<FPType>(n_frames);
  result.rtf = result.mean_frame_ms /
               (static_cast<FPType>(frame_len) / fs * 1000.0);
  result.hardware = CpuModelName();
  return result;
}

}  // namespace aliasfree
