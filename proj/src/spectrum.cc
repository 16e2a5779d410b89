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

#include "aliasfree/spectrum.h"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace aliasfree {

Index Spectrum::NearestBin(FPType freq_hz) const {
  Index best = 0;
  FPType best_dist = std::abs(bin_freqs[0] - freq_hz);
  for (Index i = 1; i < bin_freqs.size(); ++i) {
    const FPType d = std::abs(bin_freqs[i] - freq_hz);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

Spectrum MagnitudeSpectrum(const AudioBuffer& buffer, SpectralWindow window) {
  const Index n = buffer.samples.size();
  if (n < 2) throw std::invalid_argument("need at least 2 samples");

  std::vector<FPType> x(static_cast<size_t>(n));
  FPType window_sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    FPType w = 1.0;
    if (window == SpectralWindow::kHann) {
      w = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<FPType>(i) /
                               static_cast<FPType>(n - 1));
    }
    window_sum += w;
    x[static_cast<size_t>(i)] = buffer.samples[i] * w;
  }

  Eigen::FFT<FPType> fft;
  std::vector<std::complex<FPType>> spec;
  fft.fwd(spec, x);

  const Index half = n / 2;  // bins 0..half inclusive
  Spectrum out;
  out.bin_freqs.resize(half + 1);
  out.magnitudes.resize(half + 1);
  out.resolution_hz = buffer.sample_rate / static_cast<FPType>(n);
  const FPType root2 = std::sqrt(2.0);
  for (Index k = 0; k <= half; ++k) {
    out.bin_freqs[k] = out.resolution_hz * static_cast<FPType>(k);
    FPType scale = root2 / window_sum;
    // DC (and the Nyquist bin for even n) has no mirrored partner.
    if (k == 0 || (n % 2 == 0 && k == half)) scale = 1.0 / window_sum;
    out.magnitudes[k] = std::abs(spec[static_cast<size_t>(k)]) * scale;
  }
  return out;
}

void WriteSpectrumCsv(const std::string& path, const Spectrum& spectrum) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "freq_hz,magnitude\n";
  char line[64];
  for (Index i = 0; i < spectrum.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.9g,%.12g\n", spectrum.bin_freqs[i],
                  spectrum.magnitudes[i]);
    os << line;
  }
}

}  // namespace aliasfree
