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

#ifndef ALIASFREE_TRAINING_H_
#define ALIASFREE_TRAINING_H_

#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "aliasfree/audio.h"
#include "aliasfree/model.h"
#include "aliasfree/surrogates.h"
#include "aliasfree/types.h"

namespace aliasfree {

struct TrainConfig {
  FPType lr = 1e-4;
  int epochs = 10;
  int batch = 8;
  int patience = 5;  // epochs without val improvement before halving lr
  uint64_t seed = 1;
  FPType alpha = 30.0;  // AN-response term weight
  FPType beta = 1.0;    // population term weight
  FPType val_fraction = 0.1;
  Index core_len = 512;  // segmentation core; hop == core_len
};

struct TrainingRun {
  std::vector<FPType> train_loss;
  std::vector<FPType> val_loss;
  std::vector<FPType> best_val;  // running minimum, non-increasing
  std::vector<FPType> lr_history;
};

// Rows of `epoch,train_loss,val_loss,lr`.
void WriteTrainingLogCsv(const std::string& path, const TrainingRun& run);

// --- Losses -------------------------------------------------------------

FPType MaeLoss(const FeatureMap& pred, const FeatureMap& target);
FeatureMap MaeLossGrad(const FeatureMap& pred, const FeatureMap& target);

// alpha * MSE(r, r_hat) + beta * MSE(p, p_hat) where p sums r over CF rows.
FPType HaLoss(const FeatureMap& r, const FeatureMap& r_hat, FPType alpha,
              FPType beta);
FeatureMap HaLossGrad(const FeatureMap& r, const FeatureMap& r_hat,
                      FPType alpha, FPType beta);

// --- Optimizer and schedule ----------------------------------------------

class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Tensor*> params, FPType lr);

  // Applies one update from the gradients currently in the tensors. The
  // caller owns zeroing gradients between batches.
  void Step();
  void set_lr(FPType lr) { lr_ = lr; }
  FPType lr() const { return lr_; }

  static constexpr FPType kBeta1 = 0.9;
  static constexpr FPType kBeta2 = 0.999;
  static constexpr FPType kEpsilon = 1e-8;

 private:
  std::vector<Tensor*> params_;
  std::vector<ArrayXX> m_, v_;
  long step_ = 0;
  FPType lr_;
};

// Halves the rate after `patience` consecutive epochs without a new best
// validation loss; the stall counter resets on improvement and after each
// halving.
class LrScheduler {
 public:
  LrScheduler(FPType lr, int patience) : lr_(lr), patience_(patience) {}

  FPType Observe(FPType val_loss);
  FPType lr() const { return lr_; }
  FPType best() const { return best_; }

 private:
  FPType lr_;
  int patience_;
  FPType best_ = std::numeric_limits<FPType>::infinity();
  int stall_ = 0;
};

// --- Auditory pathways -----------------------------------------------------

// A frozen waveform -> AN-response map that closed-loop training
// differentiates through without writing parameter gradients.
class Pathway {
 public:
  virtual ~Pathway() = default;
  virtual FeatureMap Forward(const ArrayX& audio) = 0;
  // Backward for the most recent Forward.
  virtual ArrayX Backward(const FeatureMap& grad) = 0;
  virtual bool Frozen() const = 0;
  virtual Index TrimLeft() const { return 0; }
  virtual Index TrimRight() const { return 0; }
};

class SurrogatePathway : public Pathway {
 public:
  SurrogatePathway(const CFGrid& grid, FPType sample_rate,
                   const HearingProfile& profile)
      : chain_(grid, sample_rate, profile) {}

  FeatureMap Forward(const ArrayX& audio) override {
    return chain_.Forward(audio, &cache_);
  }
  ArrayX Backward(const FeatureMap& grad) override {
    return chain_.Backward(grad, cache_);
  }
  bool Frozen() const override { return true; }
  const AuditoryChain& chain() const { return chain_; }

 private:
  AuditoryChain chain_;
  ChainCache cache_;
};

// Wraps a trained emulator (waveform in, rate map out). Must be explicitly
// marked frozen before closed-loop use; Backward never accumulates into the
// wrapped model's parameter gradients.
class ModelPathway : public Pathway {
 public:
  ModelPathway(Model* model, bool frozen) : model_(model), frozen_(frozen) {}

  FeatureMap Forward(const ArrayX& audio) override;
  ArrayX Backward(const FeatureMap& grad) override;
  bool Frozen() const override { return frozen_; }
  Index TrimLeft() const override { return model_->LeftContext(); }
  Index TrimRight() const override { return model_->RightContext(); }

 private:
  Model* model_;
  bool frozen_;
};

// --- Desk-scale corpus ------------------------------------------------------

struct CorpusConfig {
  int count = 20;
  FPType duration_s = 0.5;
  FPType sample_rate = kDefaultSampleRateHz;
  uint64_t seed = 1;
  FPType level_db = 70.0;
  bool make_pairs = false;  // emit (noisy, clean) pairs for SE training
  FPType snr_min_db = -5.0;
  FPType snr_max_db = 5.0;
};

struct CorpusItem {
  AudioBuffer clean;
  AudioBuffer noisy;  // empty unless make_pairs
  std::string kind;   // tone | complex | am | noise
  FPType freq_hz = 0.0;
  FPType snr_db = 0.0;  // meaningful only for pairs
};

// Calibrated tone complexes, AM tones, and filtered noise; byte-reproducible
// for a fixed seed.
std::vector<CorpusItem> GenerateCorpus(const CorpusConfig& config);

// --- Training harnesses -------------------------------------------------------

enum class EmulatorTarget { kIdentity, kCochlea, kIhc, kAnf };
EmulatorTarget EmulatorTargetFromName(const std::string& name);

struct EmulatorTask {
  EmulatorTarget target = EmulatorTarget::kCochlea;
  CFGrid grid;  // cochlear output channels; must match the student's head
  HearingProfile profile = MakeProfile("NH");
  FPType sample_rate = kDefaultSampleRateHz;
};

// Paper scalings applied to the surrogate targets: BM x1e6, IHC x10,
// ANF x0.01. The same scalings are applied to stage inputs so emulators
// compose in their trained domains.
FPType EmulatorTargetScale(EmulatorTarget target);

// Minimizes MAE between the student and the surrogate stage on segmented
// frames. The level plan follows the stage: 70 dB SPL for cochlea/identity,
// alternating 70/130 dB for IHC and ANF.
TrainingRun TrainEmulator(Model* student, const EmulatorTask& task,
                          const std::vector<AudioBuffer>& data,
                          const TrainConfig& cfg);

// Minimizes HaLoss between the NH response to the raw input and the HI
// response to the processed input. Both pathways must be frozen; gradients
// flow through the HI pathway into the processor only.
TrainingRun TrainHaClosedLoop(Model* ha, Pathway* nh, Pathway* hi,
                              const std::vector<AudioBuffer>& data,
                              const TrainConfig& cfg);

// Minimizes MAE between NH(clean) and NH(se(noisy)).
TrainingRun TrainSeClosedLoop(Model* se, Pathway* nh,
                              const std::vector<std::pair<AudioBuffer, AudioBuffer>>& pairs,
                              const TrainConfig& cfg);

// Max relative error of the analytic processor-parameter gradients against
// central finite differences (step 1e-4) through the full frozen chain, for
// one frame. The processor should be small; cost is two chain evaluations
// per parameter.
FPType ClosedLoopGradientCheck(Model* ha, Pathway* nh, Pathway* hi,
                               const ArrayX& frame, FPType alpha, FPType beta);

}  // namespace aliasfree

#endif  // ALIASFREE_TRAINING_H_
