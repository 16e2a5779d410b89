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

#ifndef ALIASFREE_LAYERS_H_
#define ALIASFREE_LAYERS_H_

#include <cstdint>
#include <string>

#include "aliasfree/types.h"

namespace aliasfree {

// A named parameter array with a same-shaped gradient slot. Gradients are
// accumulated by the backward kernels and consumed by the optimizer.
struct Tensor {
  std::string name;
  ArrayXX value;
  ArrayXX grad;

  Tensor() = default;
  Tensor(std::string tensor_name, Index rows, Index cols)
      : name(std::move(tensor_name)),
        value(ArrayXX::Zero(rows, cols)),
        grad(ArrayXX::Zero(rows, cols)) {}

  Index size() const { return value.size(); }
  void ZeroGrad() { grad.setZero(); }
};

enum class Activation { kIdentity, kTanh, kSigmoid, kRelu };

Activation ActivationFromName(const std::string& name);
std::string ActivationName(Activation a);

FeatureMap ApplyActivation(const FeatureMap& x, Activation a);
// Elementwise dy/dx expressed through the cached outputs y. ReLU uses
// subgradient 0 at 0.
FeatureMap ActivationGradFromOutput(const FeatureMap& y, Activation a);

// --- Convolution kernels -----------------------------------------------
//
// All 1-D convolution weights use a single rank-2 layout:
// weights(out_channel, in_channel * kernel + tap). Stride-1 convolutions use
// symmetric zero padding, so the time axis is preserved; out-of-range taps
// read zero everywhere.

// out[c, t] = sum_k w(c, k) * x[k, t] + bias[c].
FeatureMap PointwiseConv(const FeatureMap& x, const MatrixX& weights,
                         const VectorX& bias);
void PointwiseConvBackward(const FeatureMap& x, const MatrixX& weights,
                           const FeatureMap& grad_out, MatrixX* grad_weights,
                           VectorX* grad_bias, FeatureMap* grad_x);

enum class TapDirection { kHistory, kFuture };

// One FIR filter per channel with dilated taps. History reads
// x[c, t - dilation*i] for i in [0, K); future reads x[c, t + dilation*j]
// for j in [1, K].
FeatureMap DilatedDepthwiseConv(const FeatureMap& x, const ArrayXX& coeffs,
                                int dilation, TapDirection direction);
void DilatedDepthwiseConvBackward(const FeatureMap& x, const ArrayXX& coeffs,
                                  int dilation, TapDirection direction,
                                  const FeatureMap& grad_out,
                                  ArrayXX* grad_coeffs, FeatureMap* grad_x);

// Strided convolution; output time is ceil(time / stride). When `prefilter`
// is non-null, every input channel is low-passed (zero-phase FIR) before the
// strided convolution.
FeatureMap StridedConv(const FeatureMap& x, const ArrayXX& weights,
                       Index in_channels, Index kernel, int stride,
                       const VectorX* bias = nullptr,
                       const ArrayX* prefilter = nullptr);
void StridedConvBackward(const FeatureMap& x, const ArrayXX& weights,
                         Index in_channels, Index kernel, int stride,
                         const VectorX* bias, const ArrayX* prefilter,
                         const FeatureMap& grad_out, ArrayXX* grad_weights,
                         VectorX* grad_bias, FeatureMap* grad_x);

// Fractionally-strided convolution: (stride-1) zeros are inserted between
// input samples and the result is convolved at stride 1, so output time is
// exactly time * stride. Requires kernel >= stride.
FeatureMap TransposedConv(const FeatureMap& x, const ArrayXX& weights,
                          Index in_channels, Index kernel, int stride,
                          const VectorX* bias = nullptr);
void TransposedConvBackward(const FeatureMap& x, const ArrayXX& weights,
                            Index in_channels, Index kernel, int stride,
                            const VectorX* bias, const FeatureMap& grad_out,
                            ArrayXX* grad_weights, VectorX* grad_bias,
                            FeatureMap* grad_x);

// Stride-1 convolution to conv_out channels followed by a 1-D pixel shuffle:
// out[c, t*upscale + u] = conv[c*upscale + u, t]. conv_out must be divisible
// by upscale.
FeatureMap SubpixelConv(const FeatureMap& x, const ArrayXX& weights,
                        Index in_channels, Index kernel, int upscale,
                        const VectorX* bias = nullptr);
void SubpixelConvBackward(const FeatureMap& x, const ArrayXX& weights,
                          Index in_channels, Index kernel, int upscale,
                          const VectorX* bias, const FeatureMap& grad_out,
                          ArrayXX* grad_weights, VectorX* grad_bias,
                          FeatureMap* grad_x);

// Each sample repeated `factor` times.
FeatureMap NearestUpsample(const FeatureMap& x, int factor);
FeatureMap NearestUpsampleBackward(const FeatureMap& grad_out, int factor);

// --- Finite-difference gradient checking -------------------------------

enum class LayerKind {
  kPointwise,
  kDilatedHistory,
  kDilatedFuture,
  kStrided,
  kStridedPrefilter,
  kTransposed,
  kSubpixel,
  kNearest,
  kTanh,
  kSigmoid,
  kRelu,
};

struct LayerCheckShapes {
  Index in_channels = 3;
  Index out_channels = 2;
  Index time = 8;
  Index kernel = 3;
  int dilation = 1;
  int stride = 2;
  int upscale = 2;
};

// Compares analytic input and parameter gradients of the scalar loss
// sum(output * random_projection) against central finite differences
// (step 1e-4, 64-bit). Returns the max relative error over all entries.
FPType GradientCheckLayer(LayerKind kind, const LayerCheckShapes& shapes,
                          uint64_t seed);

inline FPType RelativeError(FPType analytic, FPType numeric) {
  const FPType denom = std::max(
      std::max(std::abs(analytic), std::abs(numeric)), FPType(1e-6));
  return std::abs(analytic - numeric) / denom;
}

}  // namespace aliasfree

#endif  // ALIASFREE_LAYERS_H_
