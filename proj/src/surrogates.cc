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

#include "aliasfree/surrogates.h"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aliasfree {

Index CFGrid::NearestChannel(FPType freq_hz) const {
  Index best = 0;
  FPType best_dist = std::abs(center_freqs[0] - freq_hz);
  for (Index i = 1; i < center_freqs.size(); ++i) {
    const FPType d = std::abs(center_freqs[i] - freq_hz);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

CFGrid CFGrid::LogSpaced(int num_channels, FPType lo_hz, FPType hi_hz) {
  if (num_channels < 1) throw std::invalid_argument("need >= 1 channel");
  CFGrid grid;
  grid.center_freqs.resize(num_channels);
  if (num_channels == 1) {
    grid.center_freqs[0] = std::sqrt(lo_hz * hi_hz);
    return grid;
  }
  const FPType log_lo = std::log(lo_hz);
  const FPType log_hi = std::log(hi_hz);
  for (int i = 0; i < num_channels; ++i) {
    const FPType f = static_cast<FPType>(i) / static_cast<FPType>(num_channels - 1);
    grid.center_freqs[i] = std::exp(log_lo + f * (log_hi - log_lo));
  }
  return grid;
}

CFGrid CFGrid::Subsampled201(int step) {
  const CFGrid full = LogSpaced(201);
  if (step < 1 || 200 % step != 0) {
    throw std::invalid_argument("step must divide 200");
  }
  CFGrid grid;
  grid.center_freqs.resize(200 / step + 1);
  for (Index i = 0; i < grid.center_freqs.size(); ++i) {
    grid.center_freqs[i] = full.center_freqs[i * step];
  }
  return grid;
}

FPType HearingProfile::OhcGainDb(FPType cf_hz) const {
  if (ohc_breakpoints.empty()) return 0.0;
  if (cf_hz <= ohc_breakpoints.front().first) return ohc_breakpoints.front().second;
  if (cf_hz >= ohc_breakpoints.back().first) return ohc_breakpoints.back().second;
  for (size_t i = 1; i < ohc_breakpoints.size(); ++i) {
    const auto& [f1, g1] = ohc_breakpoints[i];
    if (cf_hz <= f1) {
      const auto& [f0, g0] = ohc_breakpoints[i - 1];
      const FPType frac = std::log(cf_hz / f0) / std::log(f1 / f0);
      return g0 + frac * (g1 - g0);
    }
  }
  return ohc_breakpoints.back().second;
}

ArrayX HearingProfile::OhcGainDb(const CFGrid& grid) const {
  ArrayX out(grid.size());
  for (Index i = 0; i < grid.size(); ++i) out[i] = OhcGainDb(grid.center_freqs[i]);
  return out;
}

HearingProfile MakeProfile(const std::string& name) {
  HearingProfile p;
  if (name == "NH") {
    p.name = "NH";
    return p;
  }
  if (name == "Slope35-7,0,0") {
    p.name = name;
    p.ohc_breakpoints = {{1000.0, 0.0}, {8000.0, 35.0}};
    p.w_hsr = 7.0;
    p.w_msr = 0.0;
    p.w_lsr = 0.0;
    return p;
  }
  throw std::invalid_argument("unknown profile '" + name +
                              "'; known profiles: NH, Slope35-7,0,0");
}

void WriteProfileFile(const std::string& path, const HearingProfile& profile) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "name = " << profile.name << "\n";
  os << "weights = " << profile.w_hsr << "," << profile.w_msr << ","
     << profile.w_lsr << "\n";
  os << "ohc_gain_db =";
  for (const auto& [f, g] : profile.ohc_breakpoints) os << " " << f << ":" << g;
  os << "\n";
}

HearingProfile ReadProfileFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  HearingProfile p;
  p.w_hsr = p.w_msr = p.w_lsr = 0.0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("bad profile line: " + line);
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const size_t a = s.find_first_not_of(" \t");
      const size_t b = s.find_last_not_of(" \t\r");
      s = a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(value);
    if (key == "name") {
      p.name = value;
    } else if (key == "weights") {
      std::replace(value.begin(), value.end(), ',', ' ');
      std::istringstream ss(value);
      if (!(ss >> p.w_hsr >> p.w_msr >> p.w_lsr)) {
        throw std::runtime_error("bad weights in profile file: " + value);
      }
    } else if (key == "ohc_gain_db") {
      std::istringstream ss(value);
      std::string pair;
      while (ss >> pair) {
        const size_t colon = pair.find(':');
        if (colon == std::string::npos) {
          throw std::runtime_error("bad breakpoint in profile file: " + pair);
        }
        p.ohc_breakpoints.emplace_back(std::stod(pair.substr(0, colon)),
                                       std::stod(pair.substr(colon + 1)));
      }
    } else {
      throw std::runtime_error("unknown profile key: " + key);
    }
  }
  return p;
}

// --- Linear pieces -----------------------------------------------------------

namespace {

size_t NextPow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

ArrayX CausalConvolve(const ArrayX& x, const ArrayX& kernel) {
  const size_t n = static_cast<size_t>(x.size());
  const size_t k = static_cast<size_t>(kernel.size());
  if (n == 0 || k == 0) return ArrayX::Zero(x.size());
  // Direct form is cheaper for short kernels.
  if (k <= 64 || n <= 64) {
    ArrayX y = ArrayX::Zero(x.size());
    for (Index t = 0; t < x.size(); ++t) {
      const Index j_hi = std::min<Index>(static_cast<Index>(k) - 1, t);
      FPType acc = 0.0;
      for (Index j = 0; j <= j_hi; ++j) acc += kernel[j] * x[t - j];
      y[t] = acc;
    }
    return y;
  }
  const size_t size = NextPow2(n + k - 1);
  std::vector<FPType> xa(size, 0.0), ka(size, 0.0);
  for (size_t i = 0; i < n; ++i) xa[i] = x[static_cast<Index>(i)];
  for (size_t i = 0; i < k; ++i) ka[i] = kernel[static_cast<Index>(i)];
  Eigen::FFT<FPType> fft;
  std::vector<std::complex<FPType>> xf, kf;
  fft.fwd(xf, xa);
  fft.fwd(kf, ka);
  for (size_t i = 0; i < xf.size(); ++i) xf[i] *= kf[i];
  std::vector<FPType> y;
  fft.inv(y, xf);
  ArrayX out(x.size());
  for (size_t i = 0; i < n; ++i) out[static_cast<Index>(i)] = y[i];
  return out;
}

ArrayX CausalConvolveAdjoint(const ArrayX& grad_out, const ArrayX& kernel) {
  // adjoint(g)[s] = sum_{u>=0} kernel[u] g[s+u]; computed by convolving the
  // time-reversed gradient and reversing back, which keeps the truncation
  // behavior exactly adjoint.
  const ArrayX reversed = grad_out.reverse();
  const ArrayX conv = CausalConvolve(reversed, kernel);
  return conv.reverse();
}

ArrayX OnePoleLowpass(const ArrayX& x, FPType coeff) {
  ArrayX y(x.size());
  if (x.size() == 0) return y;
  FPType state = x[0];  // constant inputs pass through unchanged
  const FPType one_minus = 1.0 - coeff;
  for (Index t = 0; t < x.size(); ++t) {
    state = one_minus * x[t] + coeff * state;
    y[t] = state;
  }
  return y;
}

ArrayX OnePoleLowpassAdjoint(const ArrayX& grad_out, FPType coeff) {
  const Index n = grad_out.size();
  ArrayX gx = ArrayX::Zero(n);
  if (n == 0) return gx;
  // q[t] = sum_{s>=t} coeff^(s-t) g[s], by reverse recursion.
  ArrayX q(n);
  q[n - 1] = grad_out[n - 1];
  for (Index t = n - 2; t >= 0; --t) q[t] = grad_out[t] + coeff * q[t + 1];
  const FPType one_minus = 1.0 - coeff;
  for (Index t = 0; t < n; ++t) gx[t] = one_minus * q[t];
  // The state seed adds coeff^(t+1) * g[t] sensitivity to x[0]: equal to
  // coeff * q[0].
  gx[0] += coeff * q[0];
  return gx;
}

// --- GammatoneBank -----------------------------------------------------------

GammatoneBank::GammatoneBank(const CFGrid& grid, FPType sample_rate,
                             FPType bandwidth_scale) {
  const Index n_cf = grid.size();
  kernels_.reserve(static_cast<size_t>(n_cf));
  bandwidths_.reserve(static_cast<size_t>(n_cf));
  constexpr Index kMaxTaps = 8192;
  constexpr FPType kEnvelopeFloor = 1e-5;
  for (Index c = 0; c < n_cf; ++c) {
    const FPType cf = grid.center_freqs[c];
    const FPType b = bandwidth_scale * 1.019 * (24.7 + cf / 9.265);
    bandwidths_.push_back(b);
    const FPType decay = 2.0 * kPi * b;
    // Envelope t^3 exp(-2 pi b t) peaks at t = 3 / (2 pi b).
    const FPType t_peak = 3.0 / decay;
    const FPType env_peak = t_peak * t_peak * t_peak * std::exp(-3.0);
    std::vector<FPType> taps;
    for (Index i = 0; i < kMaxTaps; ++i) {
      const FPType t = static_cast<FPType>(i) / sample_rate;
      const FPType env = t * t * t * std::exp(-decay * t);
      if (t > t_peak && env < kEnvelopeFloor * env_peak) break;
      taps.push_back(env * std::cos(2.0 * kPi * cf * t));
    }
    ArrayX kernel(static_cast<Index>(taps.size()));
    for (size_t i = 0; i < taps.size(); ++i) kernel[static_cast<Index>(i)] = taps[i];
    // Normalize to unit gain at the center frequency.
    FPType re = 0.0, im = 0.0;
    const FPType w = 2.0 * kPi * cf / sample_rate;
    for (Index i = 0; i < kernel.size(); ++i) {
      re += kernel[i] * std::cos(w * static_cast<FPType>(i));
      im -= kernel[i] * std::sin(w * static_cast<FPType>(i));
    }
    kernel /= std::hypot(re, im);
    kernels_.push_back(std::move(kernel));
  }
}

FeatureMap GammatoneBank::Filter(const ArrayX& x) const {
  FeatureMap out(static_cast<Index>(kernels_.size()), x.size());
  for (size_t c = 0; c < kernels_.size(); ++c) {
    out.row(static_cast<Index>(c)) = CausalConvolve(x, kernels_[c]).transpose();
  }
  return out;
}

ArrayX GammatoneBank::FilterAdjoint(const FeatureMap& grad_out) const {
  ArrayX gx = ArrayX::Zero(grad_out.cols());
  for (size_t c = 0; c < kernels_.size(); ++c) {
    gx += CausalConvolveAdjoint(grad_out.row(static_cast<Index>(c)).transpose(),
                                kernels_[c]);
  }
  return gx;
}

// --- CochleaStage ------------------------------------------------------------

CochleaStage::CochleaStage(const CFGrid& grid, FPType sample_rate,
                           const HearingProfile& profile)
    : grid_(grid),
      sharp_bank_(grid, sample_rate),
      broad_bank_(grid, sample_rate, kBroadBandwidthScale),
      envelope_coeff_(std::exp(-2.0 * kPi * kEnvelopeCutoffHz / sample_rate)) {
  const ArrayX loss_db = profile.OhcGainDb(grid);
  gain_linear_ = (-loss_db / 20.0 * std::log(10.0)).exp();
}

namespace {

// sign(u) * g(|u|) with g(m) = m below the knee and knee*(m/knee)^p above.
FPType BrokenStick(FPType u, FPType knee, FPType p) {
  const FPType m = std::abs(u);
  if (m <= knee) return u;
  const FPType compressed = knee * std::pow(m / knee, p);
  return u < 0.0 ? -compressed : compressed;
}

FPType BrokenStickSlope(FPType u, FPType knee, FPType p) {
  const FPType m = std::abs(u);
  if (m <= knee) return 1.0;
  return p * std::pow(m / knee, p - 1.0);
}

}  // namespace

FeatureMap CochleaStage::Forward(const ArrayX& audio, CochleaCache* cache) const {
  FeatureMap sharp = sharp_bank_.Filter(audio);
  sharp.colwise() *= gain_linear_;
  FeatureMap broad = broad_bank_.Filter(audio);
  broad.colwise() *= gain_linear_;
  FeatureMap envelope(sharp.rows(), sharp.cols());
  for (Index c = 0; c < sharp.rows(); ++c) {
    envelope.row(c) =
        OnePoleLowpass(sharp.row(c).transpose().abs(), envelope_coeff_)
            .transpose();
  }
  const FeatureMap mix = envelope / (envelope + kMixScale);
  const FeatureMap blended = (1.0 - mix) * sharp + mix * broad;
  FeatureMap out(blended.rows(), blended.cols());
  for (Index c = 0; c < blended.rows(); ++c) {
    for (Index t = 0; t < blended.cols(); ++t) {
      out(c, t) =
          kDisplacementPerPa * BrokenStick(blended(c, t), kKnee, kExponent);
    }
  }
  if (cache) {
    cache->sharp = std::move(sharp);
    cache->broad = std::move(broad);
    cache->envelope = std::move(envelope);
    cache->mix = mix;
    cache->blended = blended;
  }
  return out;
}

ArrayX CochleaStage::Backward(const FeatureMap& grad_out,
                              const CochleaCache& cache) const {
  FeatureMap g_blend(grad_out.rows(), grad_out.cols());
  for (Index c = 0; c < grad_out.rows(); ++c) {
    for (Index t = 0; t < grad_out.cols(); ++t) {
      g_blend(c, t) = grad_out(c, t) * kDisplacementPerPa *
                      BrokenStickSlope(cache.blended(c, t), kKnee, kExponent);
    }
  }
  FeatureMap g_sharp = g_blend * (1.0 - cache.mix);
  const FeatureMap g_broad = g_blend * cache.mix;
  // Through the blend weight: m = e / (e + scale).
  const FeatureMap g_mix = g_blend * (cache.broad - cache.sharp);
  const FeatureMap g_env =
      g_mix * kMixScale / (cache.envelope + kMixScale).square();
  for (Index c = 0; c < grad_out.rows(); ++c) {
    const ArrayX g_abs =
        OnePoleLowpassAdjoint(g_env.row(c).transpose(), envelope_coeff_);
    g_sharp.row(c) +=
        (g_abs * cache.sharp.row(c).transpose().sign()).transpose();
  }
  g_sharp.colwise() *= gain_linear_;
  FeatureMap g_broad_scaled = g_broad;
  g_broad_scaled.colwise() *= gain_linear_;
  return sharp_bank_.FilterAdjoint(g_sharp) +
         broad_bank_.FilterAdjoint(g_broad_scaled);
}

// --- IhcStage ----------------------------------------------------------------

IhcStage::IhcStage(FPType sample_rate)
    : coeff_(std::exp(-2.0 * kPi * kLowpassHz / sample_rate)) {}

FeatureMap IhcStage::Forward(const FeatureMap& bm, IhcCache* cache) const {
  FeatureMap l(bm.rows(), bm.cols());
  for (Index c = 0; c < bm.rows(); ++c) {
    const ArrayX rectified = bm.row(c).transpose().max(0.0);
    l.row(c) = OnePoleLowpass(rectified, coeff_).transpose();
  }
  const FeatureMap out = -kVsat * (l / kLref).tanh();
  if (cache) {
    cache->bm = bm;
    cache->lowpassed = l;
  }
  return out;
}

FeatureMap IhcStage::Backward(const FeatureMap& grad_out,
                              const IhcCache& cache) const {
  const FeatureMap th = (cache.lowpassed / kLref).tanh();
  const FeatureMap gl = grad_out * (-kVsat / kLref) * (1.0 - th.square());
  FeatureMap gbm(grad_out.rows(), grad_out.cols());
  for (Index c = 0; c < grad_out.rows(); ++c) {
    const ArrayX gr = OnePoleLowpassAdjoint(gl.row(c).transpose(), coeff_);
    gbm.row(c) =
        (gr * (cache.bm.row(c).transpose() > 0.0).cast<FPType>()).transpose();
  }
  return gbm;
}

// --- AnfStage ----------------------------------------------------------------

AnfStage::AnfStage(FPType sample_rate)
    : adapt_coeff_(std::exp(-2.0 * kPi * kAdaptCutoffHz / sample_rate)) {
  // Thresholds/gains are in drive units (drive = -v in [0, kVsat)). The
  // constants are chosen only to satisfy the documented ordering properties:
  // spontaneous rates HSR > MSR > LSR > 0, HSR saturating earliest, LSR
  // holding the widest dynamic range.
  fibers_[0] = {60.0, 250.0, 0.0005, 500.0};  // HSR
  fibers_[1] = {10.0, 210.0, 0.006, 120.0};   // MSR
  fibers_[2] = {1.0, 170.0, 0.012, 40.0};     // LSR
}

std::array<FeatureMap, 3> AnfStage::Forward(const FeatureMap& ihc,
                                            AnfCache* cache) const {
  const FeatureMap drive = -ihc;  // >= 0 by the IHC sign convention
  std::array<FeatureMap, 3> out;
  for (int f = 0; f < 3; ++f) {
    const FiberParams& fp = fibers_[static_cast<size_t>(f)];
    const FeatureMap dmt = drive - fp.threshold;
    const FeatureMap sat = (fp.gain * dmt.max(0.0)).tanh();
    const FeatureMap base = fp.spont + (fp.sat - fp.spont) * sat;
    FeatureMap raw(base.rows(), base.cols());
    for (Index c = 0; c < base.rows(); ++c) {
      const ArrayX lp = OnePoleLowpass(base.row(c).transpose(), adapt_coeff_);
      raw.row(c) = (base.row(c).transpose() +
                    kOnsetGain * (base.row(c).transpose() - lp))
                       .transpose();
    }
    out[static_cast<size_t>(f)] = raw.max(0.0);
    if (cache) {
      cache->drive_minus_thr[static_cast<size_t>(f)] = dmt;
      cache->sat_out[static_cast<size_t>(f)] = sat;
      cache->raw[static_cast<size_t>(f)] = std::move(raw);
    }
  }
  return out;
}

FeatureMap AnfStage::Backward(const std::array<FeatureMap, 3>& grad_out,
                              const AnfCache& cache) const {
  const Index rows = grad_out[0].rows();
  const Index cols = grad_out[0].cols();
  FeatureMap g_ihc = FeatureMap::Zero(rows, cols);
  for (int f = 0; f < 3; ++f) {
    const FiberParams& fp = fibers_[static_cast<size_t>(f)];
    const size_t fi = static_cast<size_t>(f);
    const FeatureMap g_raw =
        grad_out[fi] * (cache.raw[fi] > 0.0).cast<FPType>();
    // raw = (1 + k) base - k * lowpass(base)
    FeatureMap g_base = (1.0 + kOnsetGain) * g_raw;
    for (Index c = 0; c < rows; ++c) {
      g_base.row(c) -= kOnsetGain * OnePoleLowpassAdjoint(
                                        g_raw.row(c).transpose(), adapt_coeff_)
                                        .transpose();
    }
    const FeatureMap g_sat = (fp.sat - fp.spont) * g_base;
    const FeatureMap g_pre = g_sat * (1.0 - cache.sat_out[fi].square());
    const FeatureMap g_drive =
        fp.gain * g_pre * (cache.drive_minus_thr[fi] > 0.0).cast<FPType>();
    g_ihc -= g_drive;  // drive = -ihc
  }
  return g_ihc;
}

void AnPopulation(const FeatureMap& hsr, const FeatureMap& msr,
                  const FeatureMap& lsr, FPType w_h, FPType w_m, FPType w_l,
                  FeatureMap* r_f, ArrayX* population) {
  if (hsr.rows() != msr.rows() || hsr.rows() != lsr.rows() ||
      hsr.cols() != msr.cols() || hsr.cols() != lsr.cols()) {
    throw std::invalid_argument("fiber maps must share one shape");
  }
  FeatureMap r = w_h * hsr + w_m * msr + w_l * lsr;
  if (population) *population = r.colwise().sum().transpose();
  if (r_f) *r_f = std::move(r);
}

// --- AuditoryChain -----------------------------------------------------------

AuditoryChain::AuditoryChain(const CFGrid& grid, FPType sample_rate,
                             const HearingProfile& profile)
    : grid_(grid),
      profile_(profile),
      cochlea_(grid, sample_rate, profile),
      ihc_(sample_rate),
      anf_(sample_rate) {}

FeatureMap AuditoryChain::Forward(const ArrayX& audio, ChainCache* cache) const {
  const FeatureMap bm =
      cochlea_.Forward(audio, cache ? &cache->cochlea : nullptr);
  const FeatureMap ihc = ihc_.Forward(bm, cache ? &cache->ihc : nullptr);
  const auto rates = anf_.Forward(ihc, cache ? &cache->anf : nullptr);
  FeatureMap r_f;
  AnPopulation(rates[0], rates[1], rates[2], profile_.w_hsr, profile_.w_msr,
               profile_.w_lsr, &r_f, nullptr);
  return r_f;
}

ArrayX AuditoryChain::Backward(const FeatureMap& grad_rf,
                               const ChainCache& cache) const {
  const std::array<FeatureMap, 3> g_rates = {profile_.w_hsr * grad_rf,
                                             profile_.w_msr * grad_rf,
                                             profile_.w_lsr * grad_rf};
  const FeatureMap g_ihc = anf_.Backward(g_rates, cache.anf);
  const FeatureMap g_bm = ihc_.Backward(g_ihc, cache.ihc);
  return cochlea_.Backward(g_bm, cache.cochlea);
}

}  // namespace aliasfree
