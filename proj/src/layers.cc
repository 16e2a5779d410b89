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

#include "aliasfree/layers.h"

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "aliasfree/fir.h"
#include "aliasfree/rng.h"

namespace aliasfree {

Activation ActivationFromName(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation: " + name);
}

std::string ActivationName(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kRelu: return "relu";
  }
  return "identity";
}

FeatureMap ApplyActivation(const FeatureMap& x, Activation a) {
  switch (a) {
    case Activation::kIdentity: return x;
    case Activation::kTanh: return x.tanh();
    case Activation::kSigmoid: return 1.0 / (1.0 + (-x).exp());
    case Activation::kRelu: return x.max(0.0);
  }
  return x;
}

FeatureMap ActivationGradFromOutput(const FeatureMap& y, Activation a) {
  switch (a) {
    case Activation::kIdentity: return FeatureMap::Ones(y.rows(), y.cols());
    case Activation::kTanh: return 1.0 - y.square();
    case Activation::kSigmoid: return y * (1.0 - y);
    case Activation::kRelu: return (y > 0.0).cast<FPType>();
  }
  return FeatureMap::Ones(y.rows(), y.cols());
}

FeatureMap PointwiseConv(const FeatureMap& x, const MatrixX& weights,
                         const VectorX& bias) {
  if (x.rows() != weights.cols()) {
    throw std::invalid_argument("pointwise conv: input channel mismatch");
  }
  FeatureMap out = (weights * x.matrix()).array();
  out.matrix().colwise() += bias;
  return out;
}

void PointwiseConvBackward(const FeatureMap& x, const MatrixX& weights,
                           const FeatureMap& grad_out, MatrixX* grad_weights,
                           VectorX* grad_bias, FeatureMap* grad_x) {
  if (grad_weights) *grad_weights += grad_out.matrix() * x.matrix().transpose();
  if (grad_bias) *grad_bias += grad_out.matrix().rowwise().sum();
  if (grad_x) *grad_x = (weights.transpose() * grad_out.matrix()).array();
}

FeatureMap DilatedDepthwiseConv(const FeatureMap& x, const ArrayXX& coeffs,
                                int dilation, TapDirection direction) {
  if (dilation < 1) throw std::invalid_argument("dilation must be >= 1");
  if (x.rows() != coeffs.rows()) {
    throw std::invalid_argument("depthwise conv: one filter per channel required");
  }
  const Index channels = x.rows();
  const Index time = x.cols();
  const Index k = coeffs.cols();
  FeatureMap out = FeatureMap::Zero(channels, time);
  if (direction == TapDirection::kHistory) {
    for (Index i = 0; i < k; ++i) {
      const Index shift = static_cast<Index>(dilation) * i;
      const Index len = time - shift;
      if (len <= 0) break;
      out.block(0, shift, channels, len) +=
          x.block(0, 0, channels, len).colwise() * coeffs.col(i);
    }
  } else {
    for (Index j = 1; j <= k; ++j) {
      const Index shift = static_cast<Index>(dilation) * j;
      const Index len = time - shift;
      if (len <= 0) break;
      out.block(0, 0, channels, len) +=
          x.block(0, shift, channels, len).colwise() * coeffs.col(j - 1);
    }
  }
  return out;
}

void DilatedDepthwiseConvBackward(const FeatureMap& x, const ArrayXX& coeffs,
                                  int dilation, TapDirection direction,
                                  const FeatureMap& grad_out,
                                  ArrayXX* grad_coeffs, FeatureMap* grad_x) {
  const Index channels = x.rows();
  const Index time = x.cols();
  const Index k = coeffs.cols();
  if (grad_x) *grad_x = FeatureMap::Zero(channels, time);
  if (direction == TapDirection::kHistory) {
    for (Index i = 0; i < k; ++i) {
      const Index shift = static_cast<Index>(dilation) * i;
      const Index len = time - shift;
      if (len <= 0) break;
      if (grad_coeffs) {
        grad_coeffs->col(i) +=
            (grad_out.block(0, shift, channels, len) * x.block(0, 0, channels, len))
                .rowwise()
                .sum();
      }
      if (grad_x) {
        grad_x->block(0, 0, channels, len) +=
            grad_out.block(0, shift, channels, len).colwise() * coeffs.col(i);
      }
    }
  } else {
    for (Index j = 1; j <= k; ++j) {
      const Index shift = static_cast<Index>(dilation) * j;
      const Index len = time - shift;
      if (len <= 0) break;
      if (grad_coeffs) {
        grad_coeffs->col(j - 1) +=
            (grad_out.block(0, 0, channels, len) * x.block(0, shift, channels, len))
                .rowwise()
                .sum();
      }
      if (grad_x) {
        grad_x->block(0, shift, channels, len) +=
            grad_out.block(0, 0, channels, len).colwise() * coeffs.col(j - 1);
      }
    }
  }
}

namespace {

// Shared dense 1-D convolution at stride 1 on a (possibly zero-stuffed)
// input, symmetric zero padding. weights(o, ci*k + tap).
FeatureMap DenseConvStride1(const FeatureMap& x, const ArrayXX& weights,
                            Index in_channels, Index kernel,
                            const VectorX* bias) {
  const Index out_channels = weights.rows();
  const Index time = x.cols();
  const Index pad = (kernel - 1) / 2;
  FeatureMap out = FeatureMap::Zero(out_channels, time);
  for (Index o = 0; o < out_channels; ++o) {
    for (Index ci = 0; ci < in_channels; ++ci) {
      for (Index tap = 0; tap < kernel; ++tap) {
        const FPType w = weights(o, ci * kernel + tap);
        if (w == 0.0) continue;
        const Index offset = tap - pad;
        const Index t_lo = std::max<Index>(0, -offset);
        const Index t_hi = std::min<Index>(time, time - offset);
        for (Index t = t_lo; t < t_hi; ++t) out(o, t) += w * x(ci, t + offset);
      }
    }
    if (bias) out.row(o) += (*bias)(o);
  }
  return out;
}

void DenseConvStride1Backward(const FeatureMap& x, const ArrayXX& weights,
                              Index in_channels, Index kernel,
                              const FeatureMap& grad_out, ArrayXX* grad_weights,
                              VectorX* grad_bias, FeatureMap* grad_x) {
  const Index out_channels = weights.rows();
  const Index time = x.cols();
  const Index pad = (kernel - 1) / 2;
  if (grad_x) *grad_x = FeatureMap::Zero(in_channels, time);
  for (Index o = 0; o < out_channels; ++o) {
    if (grad_bias) (*grad_bias)(o) += grad_out.row(o).sum();
    for (Index ci = 0; ci < in_channels; ++ci) {
      for (Index tap = 0; tap < kernel; ++tap) {
        const Index offset = tap - pad;
        const Index t_lo = std::max<Index>(0, -offset);
        const Index t_hi = std::min<Index>(time, time - offset);
        FPType gw = 0.0;
        const FPType w = weights(o, ci * kernel + tap);
        for (Index t = t_lo; t < t_hi; ++t) {
          gw += grad_out(o, t) * x(ci, t + offset);
          if (grad_x) (*grad_x)(ci, t + offset) += w * grad_out(o, t);
        }
        if (grad_weights) (*grad_weights)(o, ci * kernel + tap) += gw;
      }
    }
  }
}

FeatureMap ZeroStuff(const FeatureMap& x, int stride) {
  FeatureMap up = FeatureMap::Zero(x.rows(), x.cols() * stride);
  for (Index t = 0; t < x.cols(); ++t) up.col(t * stride) = x.col(t);
  return up;
}

}  // namespace

FeatureMap StridedConv(const FeatureMap& x, const ArrayXX& weights,
                       Index in_channels, Index kernel, int stride,
                       const VectorX* bias, const ArrayX* prefilter) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (x.rows() != in_channels) {
    throw std::invalid_argument("strided conv: input channel mismatch");
  }
  FeatureMap xp = x;
  if (prefilter) {
    for (Index c = 0; c < x.rows(); ++c) {
      xp.row(c) = FirFilterSameLength(x.row(c).transpose(), *prefilter).transpose();
    }
  }
  const Index out_channels = weights.rows();
  const Index time = x.cols();
  const Index out_time = (time + stride - 1) / stride;
  const Index pad = (kernel - 1) / 2;
  FeatureMap out = FeatureMap::Zero(out_channels, out_time);
  for (Index o = 0; o < out_channels; ++o) {
    for (Index ci = 0; ci < in_channels; ++ci) {
      for (Index tap = 0; tap < kernel; ++tap) {
        const FPType w = weights(o, ci * kernel + tap);
        if (w == 0.0) continue;
        for (Index tau = 0; tau < out_time; ++tau) {
          const Index src = tau * stride + tap - pad;
          if (src < 0 || src >= time) continue;
          out(o, tau) += w * xp(ci, src);
        }
      }
    }
    if (bias) out.row(o) += (*bias)(o);
  }
  return out;
}

void StridedConvBackward(const FeatureMap& x, const ArrayXX& weights,
                         Index in_channels, Index kernel, int stride,
                         const VectorX* bias, const ArrayX* prefilter,
                         const FeatureMap& grad_out, ArrayXX* grad_weights,
                         VectorX* grad_bias, FeatureMap* grad_x) {
  (void)bias;
  FeatureMap xp = x;
  if (prefilter) {
    for (Index c = 0; c < x.rows(); ++c) {
      xp.row(c) = FirFilterSameLength(x.row(c).transpose(), *prefilter).transpose();
    }
  }
  const Index out_channels = weights.rows();
  const Index time = x.cols();
  const Index out_time = grad_out.cols();
  const Index pad = (kernel - 1) / 2;
  FeatureMap gxp = FeatureMap::Zero(in_channels, time);
  for (Index o = 0; o < out_channels; ++o) {
    if (grad_bias) (*grad_bias)(o) += grad_out.row(o).sum();
    for (Index ci = 0; ci < in_channels; ++ci) {
      for (Index tap = 0; tap < kernel; ++tap) {
        const FPType w = weights(o, ci * kernel + tap);
        FPType gw = 0.0;
        for (Index tau = 0; tau < out_time; ++tau) {
          const Index src = tau * stride + tap - pad;
          if (src < 0 || src >= time) continue;
          gw += grad_out(o, tau) * xp(ci, src);
          gxp(ci, src) += w * grad_out(o, tau);
        }
        if (grad_weights) (*grad_weights)(o, ci * kernel + tap) += gw;
      }
    }
  }
  if (grad_x) {
    if (prefilter) {
      grad_x->resize(in_channels, time);
      for (Index c = 0; c < in_channels; ++c) {
        grad_x->row(c) =
            FirFilterSameLengthAdjoint(gxp.row(c).transpose(), *prefilter)
                .transpose();
      }
    } else {
      *grad_x = gxp;
    }
  }
}

FeatureMap TransposedConv(const FeatureMap& x, const ArrayXX& weights,
                          Index in_channels, Index kernel, int stride,
                          const VectorX* bias) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (kernel < stride) throw std::invalid_argument("kernel must be >= stride");
  if (x.rows() != in_channels) {
    throw std::invalid_argument("transposed conv: input channel mismatch");
  }
  return DenseConvStride1(ZeroStuff(x, stride), weights, in_channels, kernel,
                          bias);
}

void TransposedConvBackward(const FeatureMap& x, const ArrayXX& weights,
                            Index in_channels, Index kernel, int stride,
                            const VectorX* bias, const FeatureMap& grad_out,
                            ArrayXX* grad_weights, VectorX* grad_bias,
                            FeatureMap* grad_x) {
  (void)bias;
  const FeatureMap up = ZeroStuff(x, stride);
  FeatureMap gup;
  DenseConvStride1Backward(up, weights, in_channels, kernel, grad_out,
                           grad_weights, grad_bias, grad_x ? &gup : nullptr);
  if (grad_x) {
    grad_x->resize(x.rows(), x.cols());
    for (Index t = 0; t < x.cols(); ++t) grad_x->col(t) = gup.col(t * stride);
  }
}

FeatureMap SubpixelConv(const FeatureMap& x, const ArrayXX& weights,
                        Index in_channels, Index kernel, int upscale,
                        const VectorX* bias) {
  if (upscale < 1) throw std::invalid_argument("upscale must be >= 1");
  const Index conv_out = weights.rows();
  if (conv_out % upscale != 0) {
    throw std::invalid_argument(
        "subpixel conv: conv output channels not divisible by upscale");
  }
  const FeatureMap y = DenseConvStride1(x, weights, in_channels, kernel, bias);
  const Index out_channels = conv_out / upscale;
  FeatureMap out(out_channels, x.cols() * upscale);
  for (Index c = 0; c < out_channels; ++c) {
    for (Index u = 0; u < upscale; ++u) {
      for (Index t = 0; t < x.cols(); ++t) {
        out(c, t * upscale + u) = y(c * upscale + u, t);
      }
    }
  }
  return out;
}

void SubpixelConvBackward(const FeatureMap& x, const ArrayXX& weights,
                          Index in_channels, Index kernel, int upscale,
                          const VectorX* bias, const FeatureMap& grad_out,
                          ArrayXX* grad_weights, VectorX* grad_bias,
                          FeatureMap* grad_x) {
  (void)bias;
  const Index conv_out = weights.rows();
  const Index out_channels = conv_out / upscale;
  FeatureMap gy(conv_out, x.cols());
  for (Index c = 0; c < out_channels; ++c) {
    for (Index u = 0; u < upscale; ++u) {
      for (Index t = 0; t < x.cols(); ++t) {
        gy(c * upscale + u, t) = grad_out(c, t * upscale + u);
      }
    }
  }
  DenseConvStride1Backward(x, weights, in_channels, kernel, gy, grad_weights,
                           grad_bias, grad_x);
}

FeatureMap NearestUpsample(const FeatureMap& x, int factor) {
  if (factor < 1) throw std::invalid_argument("factor must be >= 1");
  FeatureMap out(x.rows(), x.cols() * factor);
  for (Index t = 0; t < x.cols(); ++t) {
    for (Index u = 0; u < factor; ++u) out.col(t * factor + u) = x.col(t);
  }
  return out;
}

FeatureMap NearestUpsampleBackward(const FeatureMap& grad_out, int factor) {
  FeatureMap gx = FeatureMap::Zero(grad_out.rows(), grad_out.cols() / factor);
  for (Index t = 0; t < gx.cols(); ++t) {
    for (Index u = 0; u < factor; ++u) gx.col(t) += grad_out.col(t * factor + u);
  }
  return gx;
}

// --- Gradient checking ---------------------------------------------------

namespace {

constexpr FPType kFdStep = 1e-4;

struct CheckProblem {
  FeatureMap x;
  std::vector<ArrayXX*> params;
  std::function<FeatureMap()> forward;
  // Fills analytic gradients for x and every param, given grad_out.
  std::function<void(const FeatureMap&, FeatureMap*, std::vector<ArrayXX>*)>
      backward;
};

FPType RunCheck(CheckProblem* p, uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  const FeatureMap out0 = p->forward();
  const FeatureMap projection =
      rng.UniformArray(out0.rows(), out0.cols(), -1.0, 1.0);
  auto loss = [&]() { return (p->forward() * projection).sum(); };

  FeatureMap analytic_gx;
  std::vector<ArrayXX> analytic_gp(p->params.size());
  for (size_t i = 0; i < p->params.size(); ++i) {
    analytic_gp[i] = ArrayXX::Zero(p->params[i]->rows(), p->params[i]->cols());
  }
  p->backward(projection, &analytic_gx, &analytic_gp);

  FPType max_err = 0.0;
  auto check_array = [&](ArrayXX* target, const ArrayXX& analytic) {
    for (Index c = 0; c < target->cols(); ++c) {
      for (Index r = 0; r < target->rows(); ++r) {
        const FPType saved = (*target)(r, c);
        (*target)(r, c) = saved + kFdStep;
        const FPType up = loss();
        (*target)(r, c) = saved - kFdStep;
        const FPType down = loss();
        (*target)(r, c) = saved;
        const FPType numeric = (up - down) / (2.0 * kFdStep);
        max_err = std::max(max_err, RelativeError(analytic(r, c), numeric));
      }
    }
  };
  check_array(&p->x, analytic_gx);
  for (size_t i = 0; i < p->params.size(); ++i) {
    check_array(p->params[i], analytic_gp[i]);
  }
  return max_err;
}

}  // namespace

FPType GradientCheckLayer(LayerKind kind, const LayerCheckShapes& s,
                          uint64_t seed) {
  Rng rng(seed);
  CheckProblem p;
  p.x = rng.UniformArray(s.in_channels, s.time, -1.0, 1.0);

  switch (kind) {
    case LayerKind::kPointwise: {
      auto w = std::make_shared<ArrayXX>(
          rng.UniformArray(s.out_channels, s.in_channels, -1.0, 1.0));
      auto b = std::make_shared<ArrayXX>(rng.UniformArray(s.out_channels, 1, -1.0, 1.0));
      p.params = {w.get(), b.get()};
      p.forward = [&p, w, b]() {
        return PointwiseConv(p.x, w->matrix(), b->matrix().col(0));
      };
      p.backward = [&p, w](const FeatureMap& g, FeatureMap* gx,
                           std::vector<ArrayXX>* gp) {
        MatrixX gw = MatrixX::Zero((*gp)[0].rows(), (*gp)[0].cols());
        VectorX gb = VectorX::Zero((*gp)[1].rows());
        PointwiseConvBackward(p.x, w->matrix(), g, &gw, &gb, gx);
        (*gp)[0] = gw.array();
        (*gp)[1].col(0) = gb.array();
      };
      return RunCheck(&p, seed);
    }
    case LayerKind::kDilatedHistory:
    case LayerKind::kDilatedFuture: {
      const TapDirection dir = kind == LayerKind::kDilatedHistory
                                   ? TapDirection::kHistory
                                   : TapDirection::kFuture;
      auto c = std::make_shared<ArrayXX>(
          rng.UniformArray(s.in_channels, s.kernel, -1.0, 1.0));
      p.params = {c.get()};
      p.forward = [&p, c, &s, dir]() {
        return DilatedDepthwiseConv(p.x, *c, s.dilation, dir);
      };
      p.backward = [&p, c, &s, dir](const FeatureMap& g, FeatureMap* gx,
                                    std::vector<ArrayXX>* gp) {
        DilatedDepthwiseConvBackward(p.x, *c, s.dilation, dir, g, &(*gp)[0], gx);
      };
      return RunCheck(&p, seed);
    }
    case LayerKind::kStrided:
    case LayerKind::kStridedPrefilter: {
      auto w = std::make_shared<ArrayXX>(
          rng.UniformArray(s.out_channels, s.in_channels * s.kernel, -1.0, 1.0));
      auto b = std::make_shared<ArrayXX>(rng.UniformArray(s.out_channels, 1, -1.0, 1.0));
      auto lp = std::make_shared<ArrayX>();
      if (kind == LayerKind::kStridedPrefilter) *lp = DesignLowpass(0.5, 7);
      const ArrayX* lp_ptr = kind == LayerKind::kStridedPrefilter ? lp.get() : nullptr;
      p.params = {w.get(), b.get()};
      p.forward = [&p, w, b, &s, lp, lp_ptr]() {
        const VectorX bias = b->matrix().col(0);
        return StridedConv(p.x, *w, s.in_channels, s.kernel, s.stride, &bias,
                           lp_ptr);
      };
      p.backward = [&p, w, b, &s, lp_ptr](const FeatureMap& g, FeatureMap* gx,
                                          std::vector<ArrayXX>* gp) {
        VectorX gb = VectorX::Zero((*gp)[1].rows());
        const VectorX bias = b->matrix().col(0);
        StridedConvBackward(p.x, *w, s.in_channels, s.kernel, s.stride, &bias,
                            lp_ptr, g, &(*gp)[0], &gb, gx);
        (*gp)[1].col(0) = gb.array();
      };
      return RunCheck(&p, seed);
    }
    case LayerKind::kTransposed: {
      auto w = std::make_shared<ArrayXX>(
          rng.UniformArray(s.out_channels, s.in_channels * s.kernel, -1.0, 1.0));
      auto b = std::make_shared<ArrayXX>(rng.UniformArray(s.out_channels, 1, -1.0, 1.0));
      p.params = {w.get(), b.get()};
      p.forward = [&p, w, b, &s]() {
        const VectorX bias = b->matrix().col(0);
        return TransposedConv(p.x, *w, s.in_channels, s.kernel, s.stride, &bias);
      };
      p.backward = [&p, w, b, &s](const FeatureMap& g, FeatureMap* gx,
                                  std::vector<ArrayXX>* gp) {
        VectorX gb = VectorX::Zero((*gp)[1].rows());
        const VectorX bias = b->matrix().col(0);
        TransposedConvBackward(p.x, *w, s.in_channels, s.kernel, s.stride,
                               &bias, g, &(*gp)[0], &gb, gx);
        (*gp)[1].col(0) = gb.array();
      };
      return RunCheck(&p, seed);
    }
    case LayerKind::kSubpixel: {
      const Index conv_out = s.out_channels * s.upscale;
      auto w = std::make_shared<ArrayXX>(
          rng.UniformArray(conv_out, s.in_channels * s.kernel, -1.0, 1.0));
      auto b = std::make_shared<ArrayXX>(rng.UniformArray(conv_out, 1, -1.0, 1.0));
      p.params = {w.get(), b.get()};
      p.forward = [&p, w, b, &s]() {
        const VectorX bias = b->matrix().col(0);
        return SubpixelConv(p.x, *w, s.in_channels, s.kernel, s.upscale, &bias);
      };
      p.backward = [&p, w, b, &s](const FeatureMap& g, FeatureMap* gx,
                                  std::vector<ArrayXX>* gp) {
        VectorX gb = VectorX::Zero((*gp)[1].rows());
        const VectorX bias = b->matrix().col(0);
        SubpixelConvBackward(p.x, *w, s.in_channels, s.kernel, s.upscale, &bias,
                             g, &(*gp)[0], &gb, gx);
        (*gp)[1].col(0) = gb.array();
      };
      return RunCheck(&p, seed);
    }
    case LayerKind::kNearest: {
      p.forward = [&p, &s]() { return NearestUpsample(p.x, s.upscale); };
      p.backward = [&s](const FeatureMap& g, FeatureMap* gx,
                        std::vector<ArrayXX>*) {
        *gx = NearestUpsampleBackward(g, s.upscale);
      };
      return RunCheck(&p, seed);
    }
    case LayerKind::kTanh:
    case LayerKind::kSigmoid:
    case LayerKind::kRelu: {
      const Activation act = kind == LayerKind::kTanh ? Activation::kTanh
                             : kind == LayerKind::kSigmoid
                                 ? Activation::kSigmoid
                                 : Activation::kRelu;
      p.forward = [&p, act]() { return ApplyActivation(p.x, act); };
      p.backward = [&p, act](const FeatureMap& g, FeatureMap* gx,
                             std::vector<ArrayXX>*) {
        const FeatureMap y = ApplyActivation(p.x, act);
        *gx = g * ActivationGradFromOutput(y, act);
      };
      return RunCheck(&p, seed);
    }
  }
  throw std::invalid_argument("unknown layer kind");
}

}  // namespace aliasfree
