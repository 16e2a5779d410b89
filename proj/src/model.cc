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

#include "aliasfree/model.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "aliasfree/fir.h"
#include "aliasfree/rng.h"

namespace aliasfree {

namespace {

FPType InitBound(Index fan_in) {
  return 1.0 / std::sqrt(static_cast<FPType>(std::max<Index>(fan_in, 1)));
}

void InitUniform(Tensor* t, Index fan_in, Rng* rng) {
  const FPType bound = InitBound(fan_in);
  t->value = rng->UniformArray(t->value.rows(), t->value.cols(), -bound, bound);
}

}  // namespace

std::string DescribeSpecViolations(const ModelSpec& spec) {
  std::string out;
  auto add = [&](const std::string& msg) {
    if (!out.empty()) out += "; ";
    out += msg;
  };
  if (spec.memory_blocks < 1) add("memory_blocks must be >= 1");
  if (spec.memory_blocks > 30) add("memory_blocks must be <= 30");
  if (spec.repeats < 1) add("repeats must be >= 1");
  if (spec.kernel_history < 1) add("kernel_history must be >= 1");
  if (spec.kernel_future < 0) add("kernel_future must be >= 0");
  if (spec.hidden_channels < 1) add("hidden_channels must be >= 1");
  if (spec.in_channels < 1) add("in_channels must be >= 1");
  if (spec.out_channels < 1) add("out_channels must be >= 1");
  if (spec.left_context < 0) add("left_context must be >= 0");
  if (spec.right_context < 0) add("right_context must be >= 0");
  return out;
}

void ValidateSpec(const ModelSpec& spec) {
  const std::string violations = DescribeSpecViolations(spec);
  if (!violations.empty()) {
    throw std::invalid_argument("invalid model spec: " + violations);
  }
}

ModelSpec TableSpecCochlear() {
  ModelSpec s;
  s.memory_blocks = 6;
  s.repeats = 2;
  s.kernel_history = 80;
  s.kernel_future = 0;
  s.hidden_channels = 256;
  s.in_channels = 1;
  s.out_channels = 201;
  s.act_hidden = Activation::kTanh;
  s.act_out = Activation::kTanh;
  s.left_context = 256;
  s.right_context = 256;
  return s;
}

ModelSpec TableSpecIhc() {
  ModelSpec s;
  s.memory_blocks = 4;
  s.repeats = 2;
  s.kernel_history = 32;
  s.kernel_future = 32;
  s.hidden_channels = 128;
  s.in_channels = 1;
  s.out_channels = 1;
  s.act_hidden = Activation::kTanh;
  s.act_out = Activation::kTanh;
  s.left_context = 256;
  s.right_context = 256;
  return s;
}

ModelSpec TableSpecAnf() {
  ModelSpec s;
  s.memory_blocks = 8;
  s.repeats = 2;
  s.kernel_history = 16;
  s.kernel_future = 16;
  s.hidden_channels = 32;
  s.in_channels = 1;
  s.out_channels = 1;
  s.act_hidden = Activation::kRelu;
  s.act_out = Activation::kRelu;
  s.left_context = 7936;
  s.right_context = 256;
  return s;
}

ModelSpec TableSpecHa() {
  ModelSpec s;
  s.memory_blocks = 6;
  s.repeats = 2;
  s.kernel_history = 32;
  s.kernel_future = 32;
  s.hidden_channels = 256;
  s.in_channels = 1;
  s.out_channels = 1;
  s.act_hidden = Activation::kTanh;
  s.act_out = Activation::kTanh;
  s.left_context = 7936;
  s.right_context = 256;
  return s;
}

FeatureMap MemoryBlockCore(const FeatureMap& y, const ArrayXX& history,
                           const ArrayXX& future, int d1, int d2,
                           Activation act, const MatrixX& v, const VectorX& u) {
  FeatureMap ytilde = y + DilatedDepthwiseConv(y, history, d1, TapDirection::kHistory);
  if (future.size() > 0) {
    ytilde += DilatedDepthwiseConv(y, future, d2, TapDirection::kFuture);
  }
  return PointwiseConv(ApplyActivation(ytilde, act), v, u);
}

// --- MemoryBlock -----------------------------------------------------------

MemoryBlock::MemoryBlock(const std::string& prefix, Index in_channels,
                         Index hidden, int k1, int k2, int dilation,
                         Activation act)
    : w_(prefix + ".w", hidden, in_channels),
      b_(prefix + ".b", hidden, 1),
      history_(prefix + ".hist", hidden, k1),
      future_(prefix + ".fut", hidden, k2),
      v_(prefix + ".v", hidden, hidden),
      u_(prefix + ".u", hidden, 1),
      k1_(k1),
      k2_(k2),
      dilation_(dilation),
      act_(act) {}

FeatureMap MemoryBlock::Run(const FeatureMap& x, Cache* cache) const {
  const FeatureMap y = PointwiseConv(x, w_.value.matrix(), b_.value.matrix().col(0));
  FeatureMap ytilde =
      y + DilatedDepthwiseConv(y, history_.value, dilation_, TapDirection::kHistory);
  if (k2_ > 0) {
    ytilde += DilatedDepthwiseConv(y, future_.value, dilation_, TapDirection::kFuture);
  }
  const FeatureMap activated = ApplyActivation(ytilde, act_);
  if (cache) {
    cache->x = x;
    cache->y = y;
    cache->activated = activated;
  }
  return PointwiseConv(activated, v_.value.matrix(), u_.value.matrix().col(0));
}

FeatureMap MemoryBlock::Forward(const FeatureMap& x) const {
  return Run(x, &cache_);
}

FeatureMap MemoryBlock::Infer(const FeatureMap& x) const {
  return Run(x, nullptr);
}

FeatureMap MemoryBlock::Backward(const FeatureMap& grad_out,
                                 bool accumulate_param_grads) {
  // Output projection.
  FeatureMap g_act;
  if (accumulate_param_grads) {
    MatrixX gv = MatrixX::Zero(v_.value.rows(), v_.value.cols());
    VectorX gu = VectorX::Zero(u_.value.rows());
    PointwiseConvBackward(cache_.activated, v_.value.matrix(), grad_out, &gv,
                          &gu, &g_act);
    v_.grad += gv.array();
    u_.grad.col(0) += gu.array();
  } else {
    PointwiseConvBackward(cache_.activated, v_.value.matrix(), grad_out,
                          nullptr, nullptr, &g_act);
  }
  // Activation.
  const FeatureMap g_ytilde =
      g_act * ActivationGradFromOutput(cache_.activated, act_);
  // Memory taps: Ytilde depends on Y directly and through both tap stacks.
  FeatureMap g_y = g_ytilde;
  {
    ArrayXX gh = ArrayXX::Zero(history_.value.rows(), history_.value.cols());
    FeatureMap g_from_hist;
    DilatedDepthwiseConvBackward(cache_.y, history_.value, dilation_,
                                 TapDirection::kHistory, g_ytilde,
                                 accumulate_param_grads ? &gh : nullptr,
                                 &g_from_hist);
    if (accumulate_param_grads) history_.grad += gh;
    g_y += g_from_hist;
  }
  if (k2_ > 0) {
    ArrayXX gf = ArrayXX::Zero(future_.value.rows(), future_.value.cols());
    FeatureMap g_from_fut;
    DilatedDepthwiseConvBackward(cache_.y, future_.value, dilation_,
                                 TapDirection::kFuture, g_ytilde,
                                 accumulate_param_grads ? &gf : nullptr,
                                 &g_from_fut);
    if (accumulate_param_grads) future_.grad += gf;
    g_y += g_from_fut;
  }
  // Input projection.
  FeatureMap g_x;
  if (accumulate_param_grads) {
    MatrixX gw = MatrixX::Zero(w_.value.rows(), w_.value.cols());
    VectorX gb = VectorX::Zero(b_.value.rows());
    PointwiseConvBackward(cache_.x, w_.value.matrix(), g_y, &gw, &gb, &g_x);
    w_.grad += gw.array();
    b_.grad.col(0) += gb.array();
  } else {
    PointwiseConvBackward(cache_.x, w_.value.matrix(), g_y, nullptr, nullptr,
                          &g_x);
  }
  return g_x;
}

void MemoryBlock::CollectParams(std::vector<Tensor*>* out) {
  out->push_back(&w_);
  out->push_back(&b_);
  out->push_back(&history_);
  if (k2_ > 0) out->push_back(&future_);
  out->push_back(&v_);
  out->push_back(&u_);
}

void MemoryBlock::InitRandom(Rng* rng) {
  InitUniform(&w_, w_.value.cols(), rng);
  b_.value.setZero();
  InitUniform(&history_, k1_, rng);
  if (k2_ > 0) InitUniform(&future_, k2_, rng);
  InitUniform(&v_, v_.value.cols(), rng);
  u_.value.setZero();
}

void MemoryBlock::FillForRfProbe() {
  w_.value.setConstant(0.5 / static_cast<FPType>(w_.value.cols()));
  b_.value.setZero();
  history_.value.setConstant(0.5 / static_cast<FPType>(k1_));
  if (k2_ > 0) future_.value.setConstant(0.5 / static_cast<FPType>(k2_));
  v_.value.setConstant(0.5 / static_cast<FPType>(v_.value.cols()));
  u_.value.setZero();
}

// --- Model base ------------------------------------------------------------

Index Model::ParameterCount() {
  Index n = 0;
  for (const Tensor* t : Params()) n += t->size();
  return n;
}

void Model::ZeroGrads() {
  for (Tensor* t : Params()) t->ZeroGrad();
}

// --- DCoNNear ---------------------------------------------------------------

DCoNNear::DCoNNear(const ModelSpec& spec, uint64_t seed) : spec_(spec) {
  ValidateSpec(spec);
  const Index h = spec.hidden_channels;
  const int n = spec.memory_blocks * spec.repeats;
  in_proj_ = Tensor("in_proj", h, spec.in_channels);
  blocks_.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int dilation = 1 << (i % spec.memory_blocks);
    blocks_.emplace_back("block" + std::to_string(i), h, h, spec.kernel_history,
                         spec.kernel_future, dilation, spec.act_hidden);
  }
  skip_w_ = Tensor("skip_w", n, 1);
  head_w_ = Tensor("head.w", spec.out_channels, h);
  head_b_ = Tensor("head.b", spec.out_channels, 1);

  Rng rng(seed);
  InitUniform(&in_proj_, spec.in_channels, &rng);
  for (auto& block : blocks_) block.InitRandom(&rng);
  skip_w_.value.setConstant(1.0 / static_cast<FPType>(n));
  InitUniform(&head_w_, h, &rng);
  head_b_.value.setZero();
}

FeatureMap DCoNNear::Run(const FeatureMap& x, Cache* cache) const {
  if (x.rows() != spec_.in_channels) {
    throw std::invalid_argument("dCoNNear: input channel mismatch");
  }
  const Index trim = spec_.left_context + spec_.right_context;
  if (x.cols() <= trim) {
    throw std::invalid_argument("dCoNNear: input shorter than its contexts");
  }
  if (cache) {
    cache->x = x;
    cache->h.clear();
  }
  FeatureMap h = (in_proj_.value.matrix() * x.matrix()).array();
  if (cache) cache->h.push_back(h);
  FeatureMap skip = FeatureMap::Zero(h.rows(), h.cols());
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const FeatureMap core = cache ? blocks_[i].Forward(h) : blocks_[i].Infer(h);
    h += core;
    skip += skip_w_.value(static_cast<Index>(i), 0) * h;
    if (cache) cache->h.push_back(h);
  }
  const FeatureMap head_in = ApplyActivation(skip, spec_.act_out);
  if (cache) cache->head_in = head_in;
  const FeatureMap full = PointwiseConv(head_in, head_w_.value.matrix(),
                                        head_b_.value.matrix().col(0));
  return full.block(0, spec_.left_context, full.rows(), full.cols() - trim);
}

FeatureMap DCoNNear::Forward(const FeatureMap& x) { return Run(x, &cache_); }

FeatureMap DCoNNear::Infer(const FeatureMap& x) const { return Run(x, nullptr); }

FeatureMap DCoNNear::Backward(const FeatureMap& grad_out,
                              bool accumulate_param_grads) {
  const Index time = cache_.x.cols();
  FeatureMap g_full = FeatureMap::Zero(spec_.out_channels, time);
  g_full.block(0, spec_.left_context, grad_out.rows(), grad_out.cols()) = grad_out;

  FeatureMap g_head_in;
  if (accumulate_param_grads) {
    MatrixX gw = MatrixX::Zero(head_w_.value.rows(), head_w_.value.cols());
    VectorX gb = VectorX::Zero(head_b_.value.rows());
    PointwiseConvBackward(cache_.head_in, head_w_.value.matrix(), g_full, &gw,
                          &gb, &g_head_in);
    head_w_.grad += gw.array();
    head_b_.grad.col(0) += gb.array();
  } else {
    PointwiseConvBackward(cache_.head_in, head_w_.value.matrix(), g_full,
                          nullptr, nullptr, &g_head_in);
  }
  const FeatureMap g_skip =
      g_head_in * ActivationGradFromOutput(cache_.head_in, spec_.act_out);

  FeatureMap g_h = FeatureMap::Zero(g_skip.rows(), g_skip.cols());
  for (size_t idx = blocks_.size(); idx > 0; --idx) {
    const size_t i = idx - 1;
    const FPType w = skip_w_.value(static_cast<Index>(i), 0);
    g_h += w * g_skip;
    if (accumulate_param_grads) {
      skip_w_.grad(static_cast<Index>(i), 0) +=
          (g_skip * cache_.h[i + 1]).sum();
    }
    // Residual: h_{i+1} = h_i + core_i, so the block's input gradient adds to
    // the pass-through gradient.
    g_h += blocks_[i].Backward(g_h, accumulate_param_grads);
  }

  FeatureMap g_x;
  if (accumulate_param_grads) {
    MatrixX gw = MatrixX::Zero(in_proj_.value.rows(), in_proj_.value.cols());
    PointwiseConvBackward(cache_.x, in_proj_.value.matrix(), g_h, &gw, nullptr,
                          &g_x);
    in_proj_.grad += gw.array();
  } else {
    PointwiseConvBackward(cache_.x, in_proj_.value.matrix(), g_h, nullptr,
                          nullptr, &g_x);
  }
  return g_x;
}

std::vector<Tensor*> DCoNNear::Params() {
  std::vector<Tensor*> out;
  out.push_back(&in_proj_);
  for (auto& block : blocks_) block.CollectParams(&out);
  out.push_back(&skip_w_);
  out.push_back(&head_w_);
  out.push_back(&head_b_);
  return out;
}

void DCoNNear::DescribeConfig(std::map<std::string, std::string>* kv) const {
  (*kv)["kind"] = "dconnear";
  (*kv)["m"] = std::to_string(spec_.memory_blocks);
  (*kv)["r"] = std::to_string(spec_.repeats);
  (*kv)["k1"] = std::to_string(spec_.kernel_history);
  (*kv)["k2"] = std::to_string(spec_.kernel_future);
  (*kv)["h"] = std::to_string(spec_.hidden_channels);
  (*kv)["c_in"] = std::to_string(spec_.in_channels);
  (*kv)["c_out"] = std::to_string(spec_.out_channels);
  (*kv)["act_hidden"] = ActivationName(spec_.act_hidden);
  (*kv)["act_out"] = ActivationName(spec_.act_out);
  (*kv)["l_l"] = std::to_string(spec_.left_context);
  (*kv)["l_r"] = std::to_string(spec_.right_context);
}

void DCoNNear::FillForRfProbe() {
  in_proj_.value.setConstant(0.5 / static_cast<FPType>(spec_.in_channels));
  for (auto& block : blocks_) block.FillForRfProbe();
  skip_w_.value.setConstant(1.0 / static_cast<FPType>(blocks_.size()));
  head_w_.value.setConstant(0.5 / static_cast<FPType>(spec_.hidden_channels));
  head_b_.value.setZero();
}

void DCoNNear::InitNearIdentity() {
  if (spec_.in_channels != 1 || spec_.out_channels != 1) {
    throw std::invalid_argument("near-identity init requires 1->1 channels");
  }
  const FPType root_h = std::sqrt(static_cast<FPType>(spec_.hidden_channels));
  in_proj_.value.setConstant(1.0 / root_h);
  for (auto& block : blocks_) {
    // Zeroing the output projections silences every block at initialization
    // while keeping gradients alive through V.
    std::vector<Tensor*> params;
    block.CollectParams(&params);
    for (Tensor* t : params) {
      if (t->name.ends_with(".v") || t->name.ends_with(".u")) t->value.setZero();
    }
  }
  skip_w_.value.setConstant(1.0 / static_cast<FPType>(blocks_.size()));
  head_w_.value.setConstant(1.0 / root_h);
  head_b_.value.setZero();
}

std::unique_ptr<DCoNNear> BuildDconnear(const ModelSpec& spec, uint64_t seed) {
  return std::make_unique<DCoNNear>(spec, seed);
}

// --- Autoencoder -------------------------------------------------------------

UpsamplingKind UpsamplingFromName(const std::string& name) {
  if (name == "transposed") return UpsamplingKind::kTransposed;
  if (name == "subpixel") return UpsamplingKind::kSubpixel;
  if (name == "nearest") return UpsamplingKind::kNearest;
  throw std::invalid_argument("unknown upsampling kind: " + name);
}

std::string UpsamplingName(UpsamplingKind kind) {
  switch (kind) {
    case UpsamplingKind::kTransposed: return "transposed";
    case UpsamplingKind::kSubpixel: return "subpixel";
    case UpsamplingKind::kNearest: return "nearest";
  }
  return "transposed";
}

namespace {

Index EncoderIn(const AutoencoderConfig& c, int stage) {
  return stage == 0 ? c.in_channels : static_cast<Index>(c.base_channels) << (stage - 1);
}
Index EncoderOut(const AutoencoderConfig& c, int stage) {
  return static_cast<Index>(c.base_channels) << stage;
}
Index DecoderIn(const AutoencoderConfig& c, int stage) {
  return static_cast<Index>(c.base_channels) << (c.depth - 1 - stage);
}
Index DecoderOut(const AutoencoderConfig& c, int stage) {
  if (stage == c.depth - 1) return c.base_channels;
  return static_cast<Index>(c.base_channels) << (c.depth - 2 - stage);
}

}  // namespace

Autoencoder::Autoencoder(const AutoencoderConfig& config, uint64_t seed)
    : config_(config) {
  if (config.depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (config.kernel < 2) throw std::invalid_argument("kernel must be >= 2");
  Rng rng(seed);
  for (int i = 0; i < config.depth; ++i) {
    const Index cin = EncoderIn(config, i);
    const Index cout = EncoderOut(config, i);
    enc_w_.emplace_back("enc" + std::to_string(i) + ".w", cout,
                        cin * config.kernel);
    enc_b_.emplace_back("enc" + std::to_string(i) + ".b", cout, 1);
    InitUniform(&enc_w_.back(), cin * config.kernel, &rng);
  }
  for (int j = 0; j < config.depth; ++j) {
    const Index cin = DecoderIn(config, j);
    const Index cout = DecoderOut(config, j);
    const Index rows =
        config.upsampling == UpsamplingKind::kSubpixel ? cout * 2 : cout;
    dec_w_.emplace_back("dec" + std::to_string(j) + ".w", rows,
                        cin * config.kernel);
    dec_b_.emplace_back("dec" + std::to_string(j) + ".b", rows, 1);
    InitUniform(&dec_w_.back(), cin * config.kernel, &rng);
  }
  head_w_ = Tensor("head.w", config.out_channels,
                   static_cast<Index>(config.base_channels) * config.kernel);
  head_b_ = Tensor("head.b", config.out_channels, 1);
  InitUniform(&head_w_, config.base_channels * config.kernel, &rng);
  if (config.antialias) prefilter_ = DesignLowpass(0.5, 127);
}

FeatureMap Autoencoder::Run(const FeatureMap& x, Cache* cache) const {
  if (x.rows() != config_.in_channels) {
    throw std::invalid_argument("autoencoder: input channel mismatch");
  }
  if (x.cols() % (Index(1) << config_.depth) != 0) {
    throw std::invalid_argument(
        "autoencoder: input length must be divisible by 2^depth");
  }
  if (cache) {
    cache->stage_in.clear();
    cache->stage_act.clear();
  }
  FeatureMap h = x;
  const ArrayX* lp = config_.antialias ? &prefilter_ : nullptr;
  for (int i = 0; i < config_.depth; ++i) {
    if (cache) cache->stage_in.push_back(h);
    const VectorX bias = enc_b_[static_cast<size_t>(i)].value.matrix().col(0);
    h = StridedConv(h, enc_w_[static_cast<size_t>(i)].value, EncoderIn(config_, i),
                    config_.kernel, 2, &bias, lp);
    h = ApplyActivation(h, Activation::kTanh);
    if (cache) cache->stage_act.push_back(h);
  }
  for (int j = 0; j < config_.depth; ++j) {
    if (cache) cache->stage_in.push_back(h);
    const VectorX bias = dec_b_[static_cast<size_t>(j)].value.matrix().col(0);
    const auto& w = dec_w_[static_cast<size_t>(j)].value;
    const Index cin = DecoderIn(config_, j);
    switch (config_.upsampling) {
      case UpsamplingKind::kTransposed:
        h = TransposedConv(h, w, cin, config_.kernel, 2, &bias);
        break;
      case UpsamplingKind::kSubpixel:
        h = SubpixelConv(h, w, cin, config_.kernel, 2, &bias);
        break;
      case UpsamplingKind::kNearest:
        h = NearestUpsample(h, 2);
        h = StridedConv(h, w, cin, config_.kernel, 1, &bias, nullptr);
        break;
    }
    h = ApplyActivation(h, Activation::kTanh);
    if (cache) cache->stage_act.push_back(h);
  }
  if (cache) cache->stage_in.push_back(h);
  const VectorX bias = head_b_.value.matrix().col(0);
  return StridedConv(h, head_w_.value, config_.base_channels, config_.kernel, 1,
                     &bias, nullptr);
}

FeatureMap Autoencoder::Forward(const FeatureMap& x) { return Run(x, &cache_); }

FeatureMap Autoencoder::Infer(const FeatureMap& x) const {
  return Run(x, nullptr);
}

FeatureMap Autoencoder::Backward(const FeatureMap& grad_out,
                                 bool accumulate_param_grads) {
  const int depth = config_.depth;
  FeatureMap g = grad_out;
  {
    const FeatureMap& head_in = cache_.stage_in.back();
    ArrayXX gw = ArrayXX::Zero(head_w_.value.rows(), head_w_.value.cols());
    VectorX gb = VectorX::Zero(head_b_.value.rows());
    FeatureMap gx;
    const VectorX bias = head_b_.value.matrix().col(0);
    StridedConvBackward(head_in, head_w_.value, config_.base_channels,
                        config_.kernel, 1, &bias, nullptr, g,
                        accumulate_param_grads ? &gw : nullptr,
                        accumulate_param_grads ? &gb : nullptr, &gx);
    if (accumulate_param_grads) {
      head_w_.grad += gw;
      head_b_.grad.col(0) += gb.array();
    }
    g = gx;
  }
  for (int j = depth - 1; j >= 0; --j) {
    const size_t cache_idx = static_cast<size_t>(depth + j);
    g = g * ActivationGradFromOutput(cache_.stage_act[cache_idx], Activation::kTanh);
    const FeatureMap& stage_in = cache_.stage_in[cache_idx];
    const auto& w = dec_w_[static_cast<size_t>(j)].value;
    const Index cin = DecoderIn(config_, j);
    ArrayXX gw = ArrayXX::Zero(w.rows(), w.cols());
    VectorX gb = VectorX::Zero(dec_b_[static_cast<size_t>(j)].value.rows());
    FeatureMap gx;
    const VectorX bias = dec_b_[static_cast<size_t>(j)].value.matrix().col(0);
    switch (config_.upsampling) {
      case UpsamplingKind::kTransposed:
        TransposedConvBackward(stage_in, w, cin, config_.kernel, 2, &bias, g,
                               accumulate_param_grads ? &gw : nullptr,
                               accumulate_param_grads ? &gb : nullptr, &gx);
        break;
      case UpsamplingKind::kSubpixel:
        SubpixelConvBackward(stage_in, w, cin, config_.kernel, 2, &bias, g,
                             accumulate_param_grads ? &gw : nullptr,
                             accumulate_param_grads ? &gb : nullptr, &gx);
        break;
      case UpsamplingKind::kNearest: {
        const FeatureMap up = NearestUpsample(stage_in, 2);
        FeatureMap g_up;
        StridedConvBackward(up, w, cin, config_.kernel, 1, &bias, nullptr, g,
                            accumulate_param_grads ? &gw : nullptr,
                            accumulate_param_grads ? &gb : nullptr, &g_up);
        gx = NearestUpsampleBackward(g_up, 2);
        break;
      }
    }
    if (accumulate_param_grads) {
      dec_w_[static_cast<size_t>(j)].grad += gw;
      dec_b_[static_cast<size_t>(j)].grad.col(0) += gb.array();
    }
    g = gx;
  }
  const ArrayX* lp = config_.antialias ? &prefilter_ : nullptr;
  for (int i = depth - 1; i >= 0; --i) {
    const size_t cache_idx = static_cast<size_t>(i);
    g = g * ActivationGradFromOutput(cache_.stage_act[cache_idx], Activation::kTanh);
    const FeatureMap& stage_in = cache_.stage_in[cache_idx];
    const auto& w = enc_w_[static_cast<size_t>(i)].value;
    ArrayXX gw = ArrayXX::Zero(w.rows(), w.cols());
    VectorX gb = VectorX::Zero(enc_b_[static_cast<size_t>(i)].value.rows());
    FeatureMap gx;
    const VectorX bias = enc_b_[static_cast<size_t>(i)].value.matrix().col(0);
    StridedConvBackward(stage_in, w, EncoderIn(config_, i), config_.kernel, 2,
                        &bias, lp, g, accumulate_param_grads ? &gw : nullptr,
                        accumulate_param_grads ? &gb : nullptr, &gx);
    if (accumulate_param_grads) {
      enc_w_[static_cast<size_t>(i)].grad += gw;
      enc_b_[static_cast<size_t>(i)].grad.col(0) += gb.array();
    }
    g = gx;
  }
  return g;
}

std::vector<Tensor*> Autoencoder::Params() {
  std::vector<Tensor*> out;
  for (size_t i = 0; i < enc_w_.size(); ++i) {
    out.push_back(&enc_w_[i]);
    out.push_back(&enc_b_[i]);
  }
  for (size_t j = 0; j < dec_w_.size(); ++j) {
    out.push_back(&dec_w_[j]);
    out.push_back(&dec_b_[j]);
  }
  out.push_back(&head_w_);
  out.push_back(&head_b_);
  return out;
}

void Autoencoder::DescribeConfig(std::map<std::string, std::string>* kv) const {
  (*kv)["kind"] = "autoencoder";
  (*kv)["depth"] = std::to_string(config_.depth);
  (*kv)["upsampling"] = UpsamplingName(config_.upsampling);
  (*kv)["antialias"] = config_.antialias ? "1" : "0";
  (*kv)["base_channels"] = std::to_string(config_.base_channels);
  (*kv)["kernel"] = std::to_string(config_.kernel);
  (*kv)["c_in"] = std::to_string(config_.in_channels);
  (*kv)["c_out"] = std::to_string(config_.out_channels);
}

FeatureMap Autoencoder::UpsampleStage(const FeatureMap& x, UpsamplingKind kind,
                                      const ArrayXX& weights, Index kernel) {
  switch (kind) {
    case UpsamplingKind::kTransposed:
      return TransposedConv(x, weights, x.rows(), kernel, 2);
    case UpsamplingKind::kSubpixel:
      return SubpixelConv(x, weights, x.rows(), kernel, 2);
    case UpsamplingKind::kNearest:
      return StridedConv(NearestUpsample(x, 2), weights, x.rows(), kernel, 1);
  }
  return x;
}

std::unique_ptr<Autoencoder> BuildAutoencoder(const AutoencoderConfig& config,
                                              uint64_t seed) {
  return std::make_unique<Autoencoder>(config, seed);
}

// --- ThreeBranchAnf ----------------------------------------------------------

ThreeBranchAnf::ThreeBranchAnf(const ModelSpec& shared, const ModelSpec& branch,
                               uint64_t seed)
    : shared_spec_(shared), branch_spec_(branch) {
  ValidateSpec(shared);
  ValidateSpec(branch);
  if (shared.hidden_channels != branch.hidden_channels) {
    throw std::invalid_argument("trunk and branch hidden channels must match");
  }
  const Index h = shared.hidden_channels;
  Rng rng(seed);
  in_proj_ = Tensor("in_proj", h, shared.in_channels);
  InitUniform(&in_proj_, shared.in_channels, &rng);
  for (int i = 0; i < shared.memory_blocks; ++i) {
    trunk_.emplace_back("trunk" + std::to_string(i), h, h,
                        shared.kernel_history, shared.kernel_future, 1 << i,
                        shared.act_hidden);
    trunk_.back().InitRandom(&rng);
  }
  const char* names[3] = {"hsr", "msr", "lsr"};
  for (int b = 0; b < 3; ++b) {
    Branch& br = branches_[static_cast<size_t>(b)];
    for (int i = 0; i < branch.memory_blocks; ++i) {
      br.blocks.emplace_back(std::string(names[b]) + ".block" + std::to_string(i),
                             h, h, branch.kernel_history, branch.kernel_future,
                             1 << i, branch.act_hidden);
      br.blocks.back().InitRandom(&rng);
    }
    br.skip_w = Tensor(std::string(names[b]) + ".skip_w", branch.memory_blocks, 1);
    br.skip_w.value.setConstant(1.0 / static_cast<FPType>(branch.memory_blocks));
    br.head_w = Tensor(std::string(names[b]) + ".head.w", branch.out_channels, h);
    br.head_b = Tensor(std::string(names[b]) + ".head.b", branch.out_channels, 1);
    InitUniform(&br.head_w, h, &rng);
  }
}

FeatureMap ThreeBranchAnf::Run(const FeatureMap& x, Cache* cache) const {
  if (x.rows() != shared_spec_.in_channels) {
    throw std::invalid_argument("anf3: input channel mismatch");
  }
  const Index trim = shared_spec_.left_context + shared_spec_.right_context;
  if (x.cols() <= trim) {
    throw std::invalid_argument("anf3: input shorter than its contexts");
  }
  if (cache) {
    cache->x = x;
    cache->trunk_h.clear();
  }
  FeatureMap h = (in_proj_.value.matrix() * x.matrix()).array();
  if (cache) cache->trunk_h.push_back(h);
  for (size_t i = 0; i < trunk_.size(); ++i) {
    const FeatureMap core = cache ? trunk_[i].Forward(h) : trunk_[i].Infer(h);
    h += core;
    if (cache) cache->trunk_h.push_back(h);
  }
  const Index c_out = branch_spec_.out_channels;
  FeatureMap out(3 * c_out, x.cols());
  for (size_t b = 0; b < 3; ++b) {
    const Branch& br = branches_[b];
    BranchCache* bc = cache ? &cache->branch[b] : nullptr;
    if (bc) bc->h.clear();
    FeatureMap bh = h;
    if (bc) bc->h.push_back(bh);
    FeatureMap skip = FeatureMap::Zero(bh.rows(), bh.cols());
    for (size_t i = 0; i < br.blocks.size(); ++i) {
      const FeatureMap core = bc ? br.blocks[i].Forward(bh) : br.blocks[i].Infer(bh);
      bh += core;
      skip += br.skip_w.value(static_cast<Index>(i), 0) * bh;
      if (bc) bc->h.push_back(bh);
    }
    const FeatureMap relu_skip = ApplyActivation(skip, Activation::kRelu);
    const FeatureMap head_out = PointwiseConv(
        relu_skip, br.head_w.value.matrix(), br.head_b.value.matrix().col(0));
    if (bc) {
      bc->relu_skip = relu_skip;
      bc->head_out = head_out;
    }
    out.block(static_cast<Index>(b) * c_out, 0, c_out, x.cols()) =
        ApplyActivation(head_out, Activation::kRelu);
  }
  return out.block(0, shared_spec_.left_context, out.rows(), x.cols() - trim);
}

FeatureMap ThreeBranchAnf::Forward(const FeatureMap& x) {
  return Run(x, &cache_);
}

FeatureMap ThreeBranchAnf::Infer(const FeatureMap& x) const {
  return Run(x, nullptr);
}

std::array<FeatureMap, 3> ThreeBranchAnf::InferBranches(
    const FeatureMap& x) const {
  const FeatureMap stacked = Infer(x);
  const Index c = branch_spec_.out_channels;
  return {stacked.block(0, 0, c, stacked.cols()),
          stacked.block(c, 0, c, stacked.cols()),
          stacked.block(2 * c, 0, c, stacked.cols())};
}

FeatureMap ThreeBranchAnf::Backward(const FeatureMap& grad_out,
                                    bool accumulate_param_grads) {
  const Index time = cache_.x.cols();
  const Index c_out = branch_spec_.out_channels;
  FeatureMap g_trunk_end =
      FeatureMap::Zero(shared_spec_.hidden_channels, time);
  for (size_t b = 0; b < 3; ++b) {
    Branch& br = branches_[b];
    BranchCache& bc = cache_.branch[b];
    FeatureMap g_branch_out = FeatureMap::Zero(c_out, time);
    g_branch_out.block(0, shared_spec_.left_context, c_out, grad_out.cols()) =
        grad_out.block(static_cast<Index>(b) * c_out, 0, c_out,
                       grad_out.cols());
    // Output clamp.
    const FeatureMap g_head =
        g_branch_out * (bc.head_out > 0.0).cast<FPType>();
    FeatureMap g_relu_skip;
    if (accumulate_param_grads) {
      MatrixX gw = MatrixX::Zero(br.head_w.value.rows(), br.head_w.value.cols());
      VectorX gb = VectorX::Zero(br.head_b.value.rows());
      PointwiseConvBackward(bc.relu_skip, br.head_w.value.matrix(), g_head, &gw,
                            &gb, &g_relu_skip);
      br.head_w.grad += gw.array();
      br.head_b.grad.col(0) += gb.array();
    } else {
      PointwiseConvBackward(bc.relu_skip, br.head_w.value.matrix(), g_head,
                            nullptr, nullptr, &g_relu_skip);
    }
    const FeatureMap g_skip =
        g_relu_skip * (bc.relu_skip > 0.0).cast<FPType>();
    FeatureMap g_h = FeatureMap::Zero(g_skip.rows(), g_skip.cols());
    for (size_t idx = br.blocks.size(); idx > 0; --idx) {
      const size_t i = idx - 1;
      g_h += br.skip_w.value(static_cast<Index>(i), 0) * g_skip;
      if (accumulate_param_grads) {
        br.skip_w.grad(static_cast<Index>(i), 0) += (g_skip * bc.h[i + 1]).sum();
      }
      g_h += br.blocks[i].Backward(g_h, accumulate_param_grads);
    }
    g_trunk_end += g_h;
  }
  FeatureMap g_h = g_trunk_end;
  for (size_t idx = trunk_.size(); idx > 0; --idx) {
    g_h += trunk_[idx - 1].Backward(g_h, accumulate_param_grads);
  }
  FeatureMap g_x;
  if (accumulate_param_grads) {
    MatrixX gw = MatrixX::Zero(in_proj_.value.rows(), in_proj_.value.cols());
    PointwiseConvBackward(cache_.x, in_proj_.value.matrix(), g_h, &gw, nullptr,
                          &g_x);
    in_proj_.grad += gw.array();
  } else {
    PointwiseConvBackward(cache_.x, in_proj_.value.matrix(), g_h, nullptr,
                          nullptr, &g_x);
  }
  return g_x;
}

std::vector<Tensor*> ThreeBranchAnf::Params() {
  std::vector<Tensor*> out;
  out.push_back(&in_proj_);
  for (auto& block : trunk_) block.CollectParams(&out);
  for (auto& br : branches_) {
    for (auto& block : br.blocks) block.CollectParams(&out);
    out.push_back(&br.skip_w);
    out.push_back(&br.head_w);
    out.push_back(&br.head_b);
  }
  return out;
}

void ThreeBranchAnf::DescribeConfig(
    std::map<std::string, std::string>* kv) const {
  (*kv)["kind"] = "anf3";
  (*kv)["m"] = std::to_string(shared_spec_.memory_blocks);
  (*kv)["r"] = std::to_string(shared_spec_.repeats);
  (*kv)["k1"] = std::to_string(shared_spec_.kernel_history);
  (*kv)["k2"] = std::to_string(shared_spec_.kernel_future);
  (*kv)["h"] = std::to_string(shared_spec_.hidden_channels);
  (*kv)["c_in"] = std::to_string(shared_spec_.in_channels);
  (*kv)["c_out"] = std::to_string(branch_spec_.out_channels);
  (*kv)["act_hidden"] = ActivationName(shared_spec_.act_hidden);
  (*kv)["l_l"] = std::to_string(shared_spec_.left_context);
  (*kv)["l_r"] = std::to_string(shared_spec_.right_context);
  (*kv)["branch_m"] = std::to_string(branch_spec_.memory_blocks);
  (*kv)["branch_k1"] = std::to_string(branch_spec_.kernel_history);
  (*kv)["branch_k2"] = std::to_string(branch_spec_.kernel_future);
}

std::unique_ptr<ThreeBranchAnf> BuildAnfThreeBranch(const ModelSpec& shared,
                                                    const ModelSpec& branch,
                                                    uint64_t seed) {
  return std::make_unique<ThreeBranchAnf>(shared, branch, seed);
}

// --- Receptive field ---------------------------------------------------------

ReceptiveField ReceptiveFieldClosedForm(const ModelSpec& spec) {
  ValidateSpec(spec);
  Index dilation_sum = 0;
  for (int m = 0; m < spec.memory_blocks; ++m) dilation_sum += Index(1) << m;
  dilation_sum *= spec.repeats;
  ReceptiveField rf;
  rf.past = static_cast<Index>(spec.kernel_history - 1) * dilation_sum;
  rf.future = static_cast<Index>(spec.kernel_future) * dilation_sum;
  rf.total = rf.past + rf.future + 1;
  return rf;
}

Index ReceptiveFieldEmpirical(const DCoNNear& model, Index max_past,
                              Index max_future) {
  if (model.LeftContext() != 0 || model.RightContext() != 0) {
    throw std::invalid_argument(
        "empirical RF probe requires a model built with zero contexts");
  }
  const Index margin = 32;
  const Index t0 = max_future + margin;
  const Index time = t0 + max_past + margin + 1;
  const Index c_in = model.InChannels();
  FeatureMap zeros = FeatureMap::Zero(c_in, time);
  FeatureMap impulse = zeros;
  impulse.col(t0).setConstant(1e-2);
  const FeatureMap base = model.Infer(zeros);
  const FeatureMap pert = model.Infer(impulse);
  Index first = -1, last = -1;
  for (Index t = 0; t < time; ++t) {
    if (((pert.col(t) - base.col(t)).abs() > 0.0).any()) {
      if (first < 0) first = t;
      last = t;
    }
  }
  if (first < 0) return 0;
  return last - first + 1;
}

// --- Serialization -------------------------------------------------------------

void SaveWeights(const std::string& path, const std::vector<Tensor*>& params) {
  std::ostringstream header;
  header << "ALIASFREE-WEIGHTS v1\n";
  header << "count " << params.size() << "\n";
  size_t offset = 0;
  for (const Tensor* t : params) {
    header << t->name << " " << t->value.rows() << " " << t->value.cols() << " "
           << offset << "\n";
    offset += static_cast<size_t>(t->size()) * 4;
  }
  header << "DATA\n";
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  const std::string h = header.str();
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const Tensor* t : params) {
    // Column-major element order, matching Eigen's default storage.
    for (Index c = 0; c < t->value.cols(); ++c) {
      for (Index r = 0; r < t->value.rows(); ++r) {
        const float v = static_cast<float>(t->value(r, c));
        os.write(reinterpret_cast<const char*>(&v), 4);
      }
    }
  }
  if (!os) throw std::runtime_error("short write: " + path);
}

namespace {

// Token reader that tracks byte offsets so header errors can point at the
// first bad field.
struct HeaderCursor {
  const std::string& text;
  size_t pos = 0;

  void SkipSpace() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\n')) ++pos;
  }
  std::string Token(const std::string& what) {
    SkipSpace();
    const size_t start = pos;
    while (pos < text.size() && text[pos] != ' ' && text[pos] != '\n') ++pos;
    if (pos == start) {
      throw std::runtime_error("malformed weight file: missing " + what +
                               " at byte offset " + std::to_string(start));
    }
    return text.substr(start, pos - start);
  }
  long Number(const std::string& what) {
    SkipSpace();
    const size_t start = pos;
    const std::string tok = Token(what);
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0' || v < 0) {
      throw std::runtime_error("malformed weight file: bad " + what +
                               " at byte offset " + std::to_string(start));
    }
    return v;
  }
};

}  // namespace

void LoadWeights(const std::string& path, const std::vector<Tensor*>& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  const std::string magic = "ALIASFREE-WEIGHTS v1\n";
  if (bytes.rfind(magic, 0) != 0) {
    throw std::runtime_error(
        "malformed weight file: bad magic at byte offset 0");
  }
  const size_t data_marker = bytes.find("\nDATA\n");
  if (data_marker == std::string::npos) {
    throw std::runtime_error("malformed weight file: DATA marker not found");
  }
  const size_t data_start = data_marker + 6;
  const std::string header = bytes.substr(0, data_marker + 1);

  HeaderCursor cur{header, magic.size()};
  const std::string count_key = cur.Token("count keyword");
  if (count_key != "count") {
    throw std::runtime_error("malformed weight file: expected 'count' at byte offset " +
                             std::to_string(cur.pos - count_key.size()));
  }
  const long count = cur.Number("tensor count");
  if (static_cast<size_t>(count) != params.size()) {
    throw std::runtime_error("weight file holds " + std::to_string(count) +
                             " tensors, model expects " +
                             std::to_string(params.size()));
  }
  for (Tensor* t : params) {
    cur.SkipSpace();
    const size_t name_offset = cur.pos;
    const std::string name = cur.Token("tensor name");
    const long rows = cur.Number("rows");
    const long cols = cur.Number("cols");
    const long offset = cur.Number("offset");
    if (name != t->name) {
      throw std::runtime_error("weight file name mismatch at byte offset " +
                               std::to_string(name_offset) + ": got '" + name +
                               "', expected '" + t->name + "'");
    }
    if (rows != t->value.rows() || cols != t->value.cols()) {
      throw std::runtime_error("weight shape mismatch for '" + name +
                               "' at byte offset " + std::to_string(name_offset));
    }
    const size_t need = data_start + static_cast<size_t>(offset) +
                        static_cast<size_t>(rows) * static_cast<size_t>(cols) * 4;
    if (need > bytes.size()) {
      throw std::runtime_error("weight file truncated for '" + name + "'");
    }
    const char* src = bytes.data() + data_start + offset;
    for (Index c = 0; c < t->value.cols(); ++c) {
      for (Index r = 0; r < t->value.rows(); ++r) {
        float v;
        std::memcpy(&v, src, 4);
        src += 4;
        t->value(r, c) = static_cast<FPType>(v);
      }
    }
  }
}

void SaveModelBundle(const std::string& prefix, Model* model) {
  std::map<std::string, std::string> kv;
  model->DescribeConfig(&kv);
  std::ofstream os(prefix + ".cfg");
  if (!os) throw std::runtime_error("cannot open for writing: " + prefix + ".cfg");
  for (const auto& [key, value] : kv) os << key << " = " << value << "\n";
  os.close();
  SaveWeights(prefix + ".weights", model->Params());
}

namespace {

std::map<std::string, std::string> ReadKeyValueFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("bad config line in " + path + ": " + line);
    }
    auto trim = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t");
      const size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

int KvInt(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("missing model config key: " + key);
  return std::stoi(it->second);
}

std::string KvStr(const std::map<std::string, std::string>& kv,
                  const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("missing model config key: " + key);
  return it->second;
}

}  // namespace

std::unique_ptr<Model> LoadModelBundle(const std::string& prefix) {
  const auto kv = ReadKeyValueFile(prefix + ".cfg");
  const std::string kind = KvStr(kv, "kind");
  std::unique_ptr<Model> model;
  if (kind == "dconnear") {
    ModelSpec s;
    s.memory_blocks = KvInt(kv, "m");
    s.repeats = KvInt(kv, "r");
    s.kernel_history = KvInt(kv, "k1");
    s.kernel_future = KvInt(kv, "k2");
    s.hidden_channels = KvInt(kv, "h");
    s.in_channels = KvInt(kv, "c_in");
    s.out_channels = KvInt(kv, "c_out");
    s.act_hidden = ActivationFromName(KvStr(kv, "act_hidden"));
    s.act_out = ActivationFromName(KvStr(kv, "act_out"));
    s.left_context = KvInt(kv, "l_l");
    s.right_context = KvInt(kv, "l_r");
    model = BuildDconnear(s, 0);
  } else if (kind == "autoencoder") {
    AutoencoderConfig c;
    c.depth = KvInt(kv, "depth");
    c.upsampling = UpsamplingFromName(KvStr(kv, "upsampling"));
    c.antialias = KvInt(kv, "antialias") != 0;
    c.base_channels = KvInt(kv, "base_channels");
    c.kernel = KvInt(kv, "kernel");
    c.in_channels = KvInt(kv, "c_in");
    c.out_channels = KvInt(kv, "c_out");
    model = BuildAutoencoder(c, 0);
  } else if (kind == "anf3") {
    ModelSpec shared;
    shared.memory_blocks = KvInt(kv, "m");
    shared.repeats = KvInt(kv, "r");
    shared.kernel_history = KvInt(kv, "k1");
    shared.kernel_future = KvInt(kv, "k2");
    shared.hidden_channels = KvInt(kv, "h");
    shared.in_channels = KvInt(kv, "c_in");
    shared.act_hidden = ActivationFromName(KvStr(kv, "act_hidden"));
    shared.act_out = shared.act_hidden;
    shared.left_context = KvInt(kv, "l_l");
    shared.right_context = KvInt(kv, "l_r");
    ModelSpec branch = shared;
    branch.memory_blocks = KvInt(kv, "branch_m");
    branch.kernel_history = KvInt(kv, "branch_k1");
    branch.kernel_future = KvInt(kv, "branch_k2");
    branch.out_channels = KvInt(kv, "c_out");
    branch.left_context = 0;
    branch.right_context = 0;
    model = BuildAnfThreeBranch(shared, branch, 0);
  } else {
    throw std::runtime_error("unknown model kind in config: " + kind);
  }
  LoadWeights(prefix + ".weights", model->Params());
  return model;
}

}  // namespace aliasfree
