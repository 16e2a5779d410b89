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

#include "aliasfree/fir.h"

#include <cmath>
#include <stdexcept>

namespace aliasfree {

namespace {

FPType Sinc(FPType x) {
  if (x == 0.0) return 1.0;
  const FPType px = kPi * x;
  return std::sin(px) / px;
}

}  // namespace

ArrayX DesignLowpass(FPType cutoff_norm, int taps) {
  if (!(cutoff_norm > 0.0 && cutoff_norm < 1.0)) {
    throw std::invalid_argument("cutoff must be in (0, 1) of Nyquist");
  }
  if (taps < 3 || taps % 2 == 0) {
    throw std::invalid_argument("taps must be odd and >= 3");
  }
  const int center = (taps - 1) / 2;
  ArrayX h(taps);
  // Fill one half and mirror so symmetry holds bit-for-bit.
  for (int i = 0; i <= center; ++i) {
    const FPType m = static_cast<FPType>(i - center);
    const FPType window =
        0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<FPType>(i) /
                               static_cast<FPType>(taps - 1));
    h[i] = cutoff_norm * Sinc(cutoff_norm * m) * window;
    h[taps - 1 - i] = h[i];
  }
  const FPType sum = h.sum();
  for (int i = 0; i <= center; ++i) {
    h[i] /= sum;
    h[taps - 1 - i] = h[i];
  }
  return h;
}

ArrayX FirFilterSameLength(const ArrayX& x, const ArrayX& taps) {
  const Index n = x.size();
  const Index k = taps.size();
  const Index delay = (k - 1) / 2;
  ArrayX y = ArrayX::Zero(n);
  for (Index t = 0; t < n; ++t) {
    FPType acc = 0.0;
    // y[t] = sum_j h[j] * x[t + delay - j]
    const Index j_lo = std::max<Index>(0, t + delay - (n - 1));
    const Index j_hi = std::min<Index>(k - 1, t + delay);
    for (Index j = j_lo; j <= j_hi; ++j) acc += taps[j] * x[t + delay - j];
    y[t] = acc;
  }
  return y;
}

ArrayX FirFilterSameLengthAdjoint(const ArrayX& grad_out, const ArrayX& taps) {
  const Index n = grad_out.size();
  const Index k = taps.size();
  const Index delay = (k - 1) / 2;
  ArrayX gx = ArrayX::Zero(n);
  // d y[t] / d x[s] = h[t + delay - s]
  for (Index s = 0; s < n; ++s) {
    FPType acc = 0.0;
    const Index t_lo = std::max<Index>(0, s - delay);
    const Index t_hi = std::min<Index>(n - 1, s - delay + (k - 1));
    for (Index t = t_lo; t <= t_hi; ++t) acc += taps[t + delay - s] * grad_out[t];
    gx[s] = acc;
  }
  return gx;
}

ArrayX FirMagnitudeResponse(const ArrayX& taps, int grid_size) {
  ArrayX mag(grid_size);
  for (int g = 0; g < grid_size; ++g) {
    const FPType w = kPi * static_cast<FPType>(g) / static_cast<FPType>(grid_size - 1);
    FPType re = 0.0, im = 0.0;
    for (Index j = 0; j < taps.size(); ++j) {
      re += taps[j] * std::cos(w * static_cast<FPType>(j));
      im -= taps[j] * std::sin(w * static_cast<FPType>(j));
    }
    mag[g] = std::hypot(re, im);
  }
  return mag;
}

ArrayX SincInterpolate(const ArrayX& x, int factor, int taps) {
  if (factor < 1) throw std::invalid_argument("factor must be >= 1");
  if (factor == 1) return x;
  if (taps <= 0) taps = 8 * factor + 1;
  if (taps % 2 == 0) ++taps;
  ArrayX up = ArrayX::Zero(x.size() * factor);
  for (Index i = 0; i < x.size(); ++i) up[i * factor] = x[i];
  const ArrayX lp = DesignLowpass(1.0 / static_cast<FPType>(factor), taps);
  return FirFilterSameLength(up, lp) * static_cast<FPType>(factor);
}

}  // namespace aliasfree
