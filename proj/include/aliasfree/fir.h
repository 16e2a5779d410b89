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

#ifndef ALIASFREE_FIR_H_
#define ALIASFREE_FIR_H_

#include "aliasfree/types.h"

namespace aliasfree {

// Windowed-sinc (Hamming) low-pass prototype. `cutoff_norm` is a fraction of
// Nyquist in (0, 1); `taps` must be odd so the filter is exactly symmetric.
// Coefficients are normalized to unity DC gain and mirrored bit-for-bit
// around the center tap.
ArrayX DesignLowpass(FPType cutoff_norm, int taps);

// Zero-phase application of a linear-phase FIR: the (taps-1)/2 group delay is
// compensated and edges read zeros, so the output has the input's length.
ArrayX FirFilterSameLength(const ArrayX& x, const ArrayX& taps);

// Adjoint of FirFilterSameLength (exact, including edge truncation). For the
// symmetric kernels produced by DesignLowpass this equals the forward op.
ArrayX FirFilterSameLengthAdjoint(const ArrayX& grad_out, const ArrayX& taps);

// Magnitude response at `grid_size` points on [0, Nyquist]; used as the
// in-repo oracle for filter designs.
ArrayX FirMagnitudeResponse(const ArrayX& taps, int grid_size);

// Windowed-sinc interpolation by an integer factor: zero-stuff then low-pass
// at the original Nyquist with gain `factor`. Output length is
// x.size() * factor. `taps` <= 0 picks 8 * factor + 1.
ArrayX SincInterpolate(const ArrayX& x, int factor, int taps = 0);

}  // namespace aliasfree

#endif  // ALIASFREE_FIR_H_
