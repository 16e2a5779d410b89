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

#ifndef ALIASFREE_MODEL_H_
#define ALIASFREE_MODEL_H_

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "aliasfree/layers.h"
#include "aliasfree/types.h"

namespace aliasfree {

// Hyperparameters of a memory-block network. Block m (1-indexed within a
// repeat) uses dilation 2^(m-1) for both its history and future taps.
struct ModelSpec {
  int memory_blocks = 1;   // M
  int repeats = 1;         // R
  int kernel_history = 1;  // K1, taps at t - d*i for i in [0, K1)
  int kernel_future = 0;   // K2, taps at t + d*j for j in [1, K2]
  int hidden_channels = 1; // H
  int in_channels = 1;
  int out_channels = 1;
  Activation act_hidden = Activation::kTanh;
  Activation act_out = Activation::kTanh;
  int left_context = 0;   // L_l, trimmed from the head of the output
  int right_context = 0;  // L_r, trimmed from the tail
};

// Empty when valid, otherwise a semicolon-joined list of violated constraints.
std::string DescribeSpecViolations(const ModelSpec& spec);
void ValidateSpec(const ModelSpec& spec);  // throws std::invalid_argument

// Table I configurations.
ModelSpec TableSpecCochlear();  // 1 -> 201 channels
ModelSpec TableSpecIhc();       // per-CF 1 -> 1
ModelSpec TableSpecAnf();       // per-CF, three-branch shape
ModelSpec TableSpecHa();        // waveform -> waveform

// The memory-block recurrence on the post-pointwise signal Y:
//   Ytilde_t = Y_t + sum_i a_i . Y_{t-d1*i} + sum_j b_j . Y_{t+d2*j}
//   out      = V f(Ytilde) + U
// `future` may be empty (K2 == 0).
FeatureMap MemoryBlockCore(const FeatureMap& y, const ArrayXX& history,
                           const ArrayXX& future, int d1, int d2,
                           Activation act, const MatrixX& v, const VectorX& u);

class MemoryBlock {
 public:
  MemoryBlock(const std::string& prefix, Index in_channels, Index hidden,
              int k1, int k2, int dilation, Activation act);

  // Caches the intermediates Backward needs; not safe for concurrent use on
  // one block instance. Infer is the pure, cache-free path.
  FeatureMap Forward(const FeatureMap& x) const;
  FeatureMap Infer(const FeatureMap& x) const;
  // Uses the caches from the last Forward; accumulates parameter gradients
  // unless `accumulate_param_grads` is false.
  FeatureMap Backward(const FeatureMap& grad_out, bool accumulate_param_grads);

  void CollectParams(std::vector<Tensor*>* out);
  void InitRandom(class Rng* rng);
  void FillForRfProbe();
  int dilation() const { return dilation_; }

 private:
  struct Cache {
    FeatureMap x, y, activated;
  };
  FeatureMap Run(const FeatureMap& x, Cache* cache) const;

  Tensor w_, b_;        // pointwise projection into the block
  Tensor history_;      // H x K1 per-channel taps
  Tensor future_;       // H x K2 per-channel taps (may be empty)
  Tensor v_, u_;        // output projection
  int k1_, k2_, dilation_;
  Activation act_;
  mutable Cache cache_;
};

// Common surface for every trainable network in the toolkit.
class Model {
 public:
  virtual ~Model() = default;
  virtual FeatureMap Forward(const FeatureMap& x) = 0;
  virtual FeatureMap Infer(const FeatureMap& x) const = 0;
  virtual FeatureMap Backward(const FeatureMap& grad_out,
                              bool accumulate_param_grads = true) = 0;
  virtual std::vector<Tensor*> Params() = 0;
  virtual Index InChannels() const = 0;
  virtual Index OutChannels() const = 0;
  virtual int LeftContext() const { return 0; }
  virtual int RightContext() const { return 0; }
  virtual void DescribeConfig(std::map<std::string, std::string>* kv) const = 0;

  Index ParameterCount();
  void ZeroGrads();
};

// Fully convolutional stack of memory blocks (no resampling anywhere).
// Composition: bias-free input projection to H channels; N = M*R blocks with
// residual connections; a learned scalar skip weight per block feeding a
// weighted sum; output activation; pointwise head to out_channels. The
// forward pass trims left_context leading and right_context trailing samples.
class DCoNNear : public Model {
 public:
  DCoNNear(const ModelSpec& spec, uint64_t seed);

  FeatureMap Forward(const FeatureMap& x) override;
  FeatureMap Infer(const FeatureMap& x) const override;
  FeatureMap Backward(const FeatureMap& grad_out,
                      bool accumulate_param_grads = true) override;
  std::vector<Tensor*> Params() override;
  Index InChannels() const override { return spec_.in_channels; }
  Index OutChannels() const override { return spec_.out_channels; }
  int LeftContext() const override { return spec_.left_context; }
  int RightContext() const override { return spec_.right_context; }
  void DescribeConfig(std::map<std::string, std::string>* kv) const override;

  const ModelSpec& spec() const { return spec_; }
  // Small positive weights, zero biases; used by the empirical
  // receptive-field probe.
  void FillForRfProbe();
  // Pass-through initialization: blocks contribute nothing at t=0 (their
  // output projections start at zero) and the projection/head pair is scaled
  // so head(act_out(in_proj(x))) ~= x for small signals.
  void InitNearIdentity();

 private:
  struct Cache {
    FeatureMap x;
    std::vector<FeatureMap> h;  // h[0] after input projection, h[i+1] after block i
    FeatureMap head_in;         // act_out(skip sum)
  };
  FeatureMap Run(const FeatureMap& x, Cache* cache) const;

  ModelSpec spec_;
  Tensor in_proj_;  // H x C_in, bias-free (the first block's bias absorbs it)
  std::vector<MemoryBlock> blocks_;
  Tensor skip_w_;  // N x 1 scalars
  Tensor head_w_, head_b_;
  mutable Cache cache_;
};

enum class UpsamplingKind { kTransposed, kSubpixel, kNearest };
UpsamplingKind UpsamplingFromName(const std::string& name);
std::string UpsamplingName(UpsamplingKind kind);

struct AutoencoderConfig {
  int depth = 4;
  UpsamplingKind upsampling = UpsamplingKind::kTransposed;
  bool antialias = false;
  int base_channels = 16;  // doubles per encoder stage
  int kernel = 16;
  int in_channels = 1;
  int out_channels = 1;
};

// The artifact-prone reference architecture: `depth` stride-2 encoder
// convolutions (tanh between) and `depth` upsampling decoder stages of the
// configured kind, then a linear head. When antialias is set, a cutoff-0.5
// low-pass precedes every strided convolution. Input length must be
// divisible by 2^depth.
class Autoencoder : public Model {
 public:
  Autoencoder(const AutoencoderConfig& config, uint64_t seed);

  FeatureMap Forward(const FeatureMap& x) override;
  FeatureMap Infer(const FeatureMap& x) const override;
  FeatureMap Backward(const FeatureMap& grad_out,
                      bool accumulate_param_grads = true) override;
  std::vector<Tensor*> Params() override;
  Index InChannels() const override { return config_.in_channels; }
  Index OutChannels() const override { return config_.out_channels; }
  void DescribeConfig(std::map<std::string, std::string>* kv) const override;

  const AutoencoderConfig& config() const { return config_; }
  // Runs one decoder-style upsampling stage built from this model's kind with
  // single-channel weights; used by the imaging probe.
  static FeatureMap UpsampleStage(const FeatureMap& x, UpsamplingKind kind,
                                  const ArrayXX& weights, Index kernel);

 private:
  struct Cache {
    std::vector<FeatureMap> stage_in;   // input of each conv stage
    std::vector<FeatureMap> stage_act;  // activation outputs
  };
  FeatureMap Run(const FeatureMap& x, Cache* cache) const;

  AutoencoderConfig config_;
  std::vector<Tensor> enc_w_, enc_b_;
  std::vector<Tensor> dec_w_, dec_b_;
  Tensor head_w_, head_b_;
  ArrayX prefilter_;  // fixed, non-learnable
  mutable Cache cache_;
};

// Shared trunk of `shared.memory_blocks` blocks feeding three independent
// branches (HSR, MSR, LSR); each branch owns `branch.memory_blocks` blocks,
// a skip aggregation, and a pointwise head clamped by ReLU. Forward stacks
// the branch outputs as rows [hsr; msr; lsr].
class ThreeBranchAnf : public Model {
 public:
  ThreeBranchAnf(const ModelSpec& shared, const ModelSpec& branch,
                 uint64_t seed);

  FeatureMap Forward(const FeatureMap& x) override;
  FeatureMap Infer(const FeatureMap& x) const override;
  FeatureMap Backward(const FeatureMap& grad_out,
                      bool accumulate_param_grads = true) override;
  std::vector<Tensor*> Params() override;
  Index InChannels() const override { return shared_spec_.in_channels; }
  Index OutChannels() const override { return 3 * branch_spec_.out_channels; }
  int LeftContext() const override { return shared_spec_.left_context; }
  int RightContext() const override { return shared_spec_.right_context; }
  void DescribeConfig(std::map<std::string, std::string>* kv) const override;

  std::array<FeatureMap, 3> InferBranches(const FeatureMap& x) const;

 private:
  struct BranchCache {
    std::vector<FeatureMap> h;
    FeatureMap relu_skip;  // ReLU(skip sum)
    FeatureMap head_out;   // pre-clamp head output
  };
  struct Cache {
    FeatureMap x;
    std::vector<FeatureMap> trunk_h;
    std::array<BranchCache, 3> branch;
  };
  FeatureMap Run(const FeatureMap& x, Cache* cache) const;

  ModelSpec shared_spec_, branch_spec_;
  Tensor in_proj_;
  std::vector<MemoryBlock> trunk_;
  struct Branch {
    std::vector<MemoryBlock> blocks;
    Tensor skip_w, head_w, head_b;
  };
  std::array<Branch, 3> branches_;
  mutable Cache cache_;
};

std::unique_ptr<DCoNNear> BuildDconnear(const ModelSpec& spec, uint64_t seed);
std::unique_ptr<Autoencoder> BuildAutoencoder(const AutoencoderConfig& config,
                                              uint64_t seed);
std::unique_ptr<ThreeBranchAnf> BuildAnfThreeBranch(const ModelSpec& shared,
                                                    const ModelSpec& branch,
                                                    uint64_t seed);

// --- Receptive field ------------------------------------------------------

struct ReceptiveField {
  Index past = 0;    // samples before t that influence output t
  Index future = 0;  // samples after t
  Index total = 1;   // past + future + 1
};

// Exact span implied by the implemented composition rules: every block with
// dilation d contributes (K1-1)*d past and K2*d future samples.
ReceptiveField ReceptiveFieldClosedForm(const ModelSpec& spec);

// Ground-truth oracle: perturbs one input sample of a probe-weighted model
// and returns the width of the nonzero output delta. `max_past`/`max_future`
// bound the search window and must be at least the true span.
Index ReceptiveFieldEmpirical(const DCoNNear& model, Index max_past,
                              Index max_future);

// --- Serialization --------------------------------------------------------

// Weight container: text header (names, shapes, byte offsets) followed by
// little-endian float32 data. Errors carry the byte offset of the first bad
// header field.
void SaveWeights(const std::string& path, const std::vector<Tensor*>& params);
void LoadWeights(const std::string& path, const std::vector<Tensor*>& params);

// <prefix>.cfg (key = value lines mirroring the model configuration) plus
// <prefix>.weights.
void SaveModelBundle(const std::string& prefix, Model* model);
std::unique_ptr<Model> LoadModelBundle(const std::string& prefix);

}  // namespace aliasfree

#endif  // ALIASFREE_MODEL_H_
