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

#include "aliasfree/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "aliasfree/rng.h"

namespace aliasfree {

void WriteTrainingLogCsv(const std::string& path, const TrainingRun& run) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "epoch,train_loss,val_loss,lr\n";
  char line[128];
  for (size_t e = 0; e < run.train_loss.size(); ++e) {
    std::snprintf(line, sizeof(line), "%zu,%.12g,%.12g,%.12g\n", e + 1,
                  run.train_loss[e], run.val_loss[e], run.lr_history[e]);
    os << line;
  }
}

FPType MaeLoss(const FeatureMap& pred, const FeatureMap& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("MAE: shape mismatch");
  }
  return (pred - target).abs().mean();
}

FeatureMap MaeLossGrad(const FeatureMap& pred, const FeatureMap& target) {
  const FPType inv_n = 1.0 / static_cast<FPType>(pred.size());
  return (pred - target).sign() * inv_n;
}

FPType HaLoss(const FeatureMap& r, const FeatureMap& r_hat, FPType alpha,
              FPType beta) {
  if (r.rows() != r_hat.rows() || r.cols() != r_hat.cols()) {
    throw std::invalid_argument("HA loss: shape mismatch");
  }
  const FPType mse_r = (r - r_hat).square().mean();
  const ArrayX p = r.colwise().sum().transpose();
  const ArrayX p_hat = r_hat.colwise().sum().transpose();
  const FPType mse_p = (p - p_hat).square().mean();
  return alpha * mse_r + beta * mse_p;
}

FeatureMap HaLossGrad(const FeatureMap& r, const FeatureMap& r_hat,
                      FPType alpha, FPType beta) {
  const FPType inv_n = 1.0 / static_cast<FPType>(r.size());
  const FPType inv_t = 1.0 / static_cast<FPType>(r.cols());
  FeatureMap g = alpha * 2.0 * (r_hat - r) * inv_n;
  const ArrayX p_diff =
      (r_hat.colwise().sum() - r.colwise().sum()).transpose();
  g.rowwise() += (beta * 2.0 * inv_t * p_diff).transpose();
  return g;
}

// --- AdamOptimizer ---------------------------------------------------------

AdamOptimizer::AdamOptimizer(std::vector<Tensor*> params, FPType lr)
    : params_(std::move(params)), lr_(lr) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor* t : params_) {
    m_.push_back(ArrayXX::Zero(t->value.rows(), t->value.cols()));
    v_.push_back(ArrayXX::Zero(t->value.rows(), t->value.cols()));
  }
}

void AdamOptimizer::Step() {
  ++step_;
  const FPType bias1 = 1.0 - std::pow(kBeta1, static_cast<FPType>(step_));
  const FPType bias2 = 1.0 - std::pow(kBeta2, static_cast<FPType>(step_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor* t = params_[i];
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * t->grad;
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * t->grad.square();
    const ArrayXX m_hat = m_[i] / bias1;
    const ArrayXX v_hat = v_[i] / bias2;
    t->value -= lr_ * m_hat / (v_hat.sqrt() + kEpsilon);
  }
}

FPType LrScheduler::Observe(FPType val_loss) {
  if (val_loss < best_) {
    best_ = val_loss;
    stall_ = 0;
  } else {
    ++stall_;
    if (stall_ >= patience_) {
      lr_ *= 0.5;
      stall_ = 0;
    }
  }
  return lr_;
}

// --- ModelPathway ------------------------------------------------------------

FeatureMap ModelPathway::Forward(const ArrayX& audio) {
  FeatureMap x(1, audio.size());
  x.row(0) = audio.transpose();
  return model_->Forward(x);
}

ArrayX ModelPathway::Backward(const FeatureMap& grad) {
  const FeatureMap gx = model_->Backward(grad, /*accumulate_param_grads=*/false);
  return gx.row(0).transpose();
}

// --- Corpus -------------------------------------------------------------------

namespace {

FPType LogUniform(Rng* rng, FPType lo, FPType hi) {
  return std::exp(rng->Uniform(std::log(lo), std::log(hi)));
}

ArrayX MakeClean(Rng* rng, const std::string& kind, Index n, FPType fs,
                 FPType freq_cap, FPType* freq_out) {
  const ArrayX t = ArrayX::LinSpaced(n, 0.0, static_cast<FPType>(n - 1)) / fs;
  if (kind == "tone") {
    const FPType f = LogUniform(rng, 150.0, freq_cap);
    *freq_out = f;
    const FPType phase = rng->Uniform(0.0, 2.0 * kPi);
    return (2.0 * kPi * f * t + phase).sin();
  }
  if (kind == "complex") {
    const FPType f0 = rng->Uniform(100.0, 400.0);
    *freq_out = f0;
    const int harmonics = rng->UniformInt(3, 6);
    ArrayX out = ArrayX::Zero(n);
    for (int k = 1; k <= harmonics; ++k) {
      const FPType amp = rng->Uniform(0.3, 1.0);
      const FPType phase = rng->Uniform(0.0, 2.0 * kPi);
      if (f0 * k < freq_cap) {
        out += amp * (2.0 * kPi * f0 * static_cast<FPType>(k) * t + phase).sin();
      }
    }
    return out;
  }
  if (kind == "am") {
    const FPType fc = LogUniform(rng, 500.0, freq_cap);
    *freq_out = fc;
    const FPType fm = rng->Uniform(4.0, 40.0);
    return (0.5 + 0.5 * (2.0 * kPi * fm * t).sin()) * (2.0 * kPi * fc * t).sin();
  }
  // Low-passed white noise.
  *freq_out = 0.0;
  const FPType fc = LogUniform(rng, 500.0, freq_cap);
  const FPType coeff = std::exp(-2.0 * kPi * fc / fs);
  return OnePoleLowpass(rng->NormalArray(n), coeff);
}

}  // namespace

std::vector<CorpusItem> GenerateCorpus(const CorpusConfig& config) {
  Rng rng(config.seed);
  const Index n = static_cast<Index>(std::lround(config.duration_s * config.sample_rate));
  std::vector<CorpusItem> items;
  items.reserve(static_cast<size_t>(std::max(config.count, 0)));
  const char* clean_kinds[4] = {"tone", "complex", "am", "noise"};
  const int n_kinds = config.make_pairs ? 3 : 4;  // pairs keep tonal cleans
  const FPType freq_cap = config.make_pairs ? 1800.0 : 4000.0;
  for (int i = 0; i < config.count; ++i) {
    CorpusItem item;
    item.kind = clean_kinds[i % n_kinds];
    ArrayX clean = MakeClean(&rng, item.kind, n, config.sample_rate, freq_cap,
                             &item.freq_hz);
    AudioBuffer buf{clean, config.sample_rate};
    item.clean = ScaleToSpl(buf, config.level_db);
    if (config.make_pairs) {
      // High-passed noise keeps the interferer spectrally apart from the
      // tonal cleans at desk scale.
      const ArrayX white = rng.NormalArray(n);
      const FPType coeff = std::exp(-2.0 * kPi * 3000.0 / config.sample_rate);
      ArrayX noise = white - OnePoleLowpass(white, coeff);
      item.snr_db = rng.Uniform(config.snr_min_db, config.snr_max_db);
      const FPType clean_rms = Rms(item.clean);
      const FPType noise_rms = std::sqrt(noise.square().mean());
      const FPType target_noise_rms =
          clean_rms * std::pow(10.0, -item.snr_db / 20.0);
      noise *= target_noise_rms / noise_rms;
      item.noisy.sample_rate = config.sample_rate;
      item.noisy.samples = item.clean.samples + noise;
    }
    items.push_back(std::move(item));
  }
  return items;
}

// --- Shared harness plumbing ---------------------------------------------------

namespace {

struct FrameExample {
  ArrayX input;       // L_l + core + L_r samples
  FeatureMap target;  // rows x core_len
};

// Cuts full-length (input, target) rows into aligned frames, dropping the
// trailing partial frame.
void CutFrames(const ArrayX& input, const FeatureMap& target, Index core_len,
               Index left, Index right, std::vector<FrameExample>* out) {
  const Index n = input.size();
  for (Index start = 0; start + core_len <= n; start += core_len) {
    FrameExample ex;
    ex.input = ArrayX::Zero(left + core_len + right);
    const Index lo = std::max<Index>(0, start - left);
    const Index hi = std::min<Index>(n, start + core_len + right);
    ex.input.segment(lo - (start - left), hi - lo) = input.segment(lo, hi - lo);
    ex.target = target.block(0, start, target.rows(), core_len);
    out->push_back(std::move(ex));
  }
}

struct SplitIndices {
  std::vector<size_t> train, val;
};

SplitIndices SplitTrainVal(size_t count, FPType val_fraction, Rng* rng) {
  std::vector<size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  rng->Shuffle(&order);
  SplitIndices split;
  const size_t n_val =
      std::min(count > 1 ? count - 1 : 0,
               static_cast<size_t>(std::ceil(val_fraction * static_cast<FPType>(count))));
  split.val.assign(order.begin(), order.begin() + static_cast<long>(n_val));
  split.train.assign(order.begin() + static_cast<long>(n_val), order.end());
  return split;
}

FeatureMap RowToMap(const ArrayX& row) {
  FeatureMap m(1, row.size());
  m.row(0) = row.transpose();
  return m;
}

// Silent items pass through uncalibrated (they carry no level to adjust).
AudioBuffer CalibrateOrKeep(const AudioBuffer& item, FPType level_db) {
  if (Rms(item) <= 0.0) return item;
  return ScaleToSpl(item, level_db);
}

}  // namespace

EmulatorTarget EmulatorTargetFromName(const std::string& name) {
  if (name == "identity") return EmulatorTarget::kIdentity;
  if (name == "cochlea") return EmulatorTarget::kCochlea;
  if (name == "ihc") return EmulatorTarget::kIhc;
  if (name == "anf") return EmulatorTarget::kAnf;
  throw std::invalid_argument("unknown emulator target: " + name);
}

FPType EmulatorTargetScale(EmulatorTarget target) {
  switch (target) {
    case EmulatorTarget::kIdentity: return 1.0;
    case EmulatorTarget::kCochlea: return 1e6;
    case EmulatorTarget::kIhc: return 10.0;
    case EmulatorTarget::kAnf: return 0.01;
  }
  return 1.0;
}

TrainingRun TrainEmulator(Model* student, const EmulatorTask& task,
                          const std::vector<AudioBuffer>& data,
                          const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("empty training data");
  const FPType scale = EmulatorTargetScale(task.target);

  CochleaStage cochlea(task.grid, task.sample_rate, task.profile);
  IhcStage ihc(task.sample_rate);
  AnfStage anf(task.sample_rate);

  // Full-length examples per the stage's level plan.
  std::vector<FrameExample> frames;
  for (size_t i = 0; i < data.size(); ++i) {
    FPType level = 70.0;
    if (task.target == EmulatorTarget::kIhc || task.target == EmulatorTarget::kAnf) {
      level = (i % 2 == 0) ? 70.0 : 130.0;
    }
    const AudioBuffer calibrated = CalibrateOrKeep(data[i], level);
    const ArrayX& x = calibrated.samples;
    switch (task.target) {
      case EmulatorTarget::kIdentity: {
        CutFrames(x, RowToMap(x), cfg.core_len, student->LeftContext(),
                  student->RightContext(), &frames);
        break;
      }
      case EmulatorTarget::kCochlea: {
        const FeatureMap bm = cochlea.Forward(x);
        CutFrames(x, scale * bm, cfg.core_len, student->LeftContext(),
                  student->RightContext(), &frames);
        break;
      }
      case EmulatorTarget::kIhc: {
        const FeatureMap bm = cochlea.Forward(x);
        const FeatureMap pot = ihc.Forward(bm);
        for (Index c = 0; c < bm.rows(); ++c) {
          CutFrames(1e6 * bm.row(c).transpose(),
                    scale * pot.row(c), cfg.core_len,
                    student->LeftContext(), student->RightContext(), &frames);
        }
        break;
      }
      case EmulatorTarget::kAnf: {
        const FeatureMap bm = cochlea.Forward(x);
        const FeatureMap pot = ihc.Forward(bm);
        const auto rates = anf.Forward(pot);
        for (Index c = 0; c < pot.rows(); ++c) {
          FeatureMap target(3, pot.cols());
          target.row(0) = rates[0].row(c);
          target.row(1) = rates[1].row(c);
          target.row(2) = rates[2].row(c);
          CutFrames(10.0 * pot.row(c).transpose(), scale * target, cfg.core_len,
                    student->LeftContext(), student->RightContext(), &frames);
        }
        break;
      }
    }
  }
  if (frames.empty()) {
    throw std::invalid_argument("no full frames; data shorter than core_len");
  }

  Rng rng(cfg.seed);
  const SplitIndices split = SplitTrainVal(frames.size(), cfg.val_fraction, &rng);
  AdamOptimizer adam(student->Params(), cfg.lr);
  LrScheduler scheduler(cfg.lr, cfg.patience);

  TrainingRun run;
  std::vector<size_t> order = split.train;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.Shuffle(&order);
    FPType train_sum = 0.0;
    size_t batch_fill = 0;
    student->ZeroGrads();
    for (size_t pos = 0; pos < order.size(); ++pos) {
      const FrameExample& ex = frames[order[pos]];
      const FeatureMap pred = student->Forward(RowToMap(ex.input));
      train_sum += MaeLoss(pred, ex.target);
      student->Backward(MaeLossGrad(pred, ex.target));
      if (++batch_fill == static_cast<size_t>(cfg.batch) ||
          pos + 1 == order.size()) {
        for (Tensor* t : student->Params()) {
          t->grad /= static_cast<FPType>(batch_fill);
        }
        adam.Step();
        student->ZeroGrads();
        batch_fill = 0;
      }
    }
    FPType val_sum = 0.0;
    for (const size_t vi : split.val) {
      const FrameExample& ex = frames[vi];
      val_sum += MaeLoss(student->Infer(RowToMap(ex.input)), ex.target);
    }
    const FPType train_loss =
        order.empty() ? 0.0 : train_sum / static_cast<FPType>(order.size());
    const FPType val_loss = split.val.empty()
                                ? train_loss
                                : val_sum / static_cast<FPType>(split.val.size());
    adam.set_lr(scheduler.Observe(val_loss));
    run.train_loss.push_back(train_loss);
    run.val_loss.push_back(val_loss);
    run.best_val.push_back(scheduler.best());
    run.lr_history.push_back(adam.lr());
  }
  return run;
}

namespace {

struct Aligned {
  FeatureMap a, b;
  Index offset_a = 0, offset_b = 0;  // column offsets of the common region
};

// Crops two pathway outputs over the same core to their common region.
Aligned AlignResponses(const FeatureMap& r, Index trim_l_r, Index trim_r_r,
                       const FeatureMap& r_hat, Index trim_l_h, Index trim_r_h,
                       Index core_len) {
  Aligned out;
  const Index lo = std::max(trim_l_r, trim_l_h);
  const Index hi = core_len - std::max(trim_r_r, trim_r_h);
  if (hi <= lo) throw std::invalid_argument("pathway trims leave no overlap");
  out.offset_a = lo - trim_l_r;
  out.offset_b = lo - trim_l_h;
  out.a = r.block(0, out.offset_a, r.rows(), hi - lo);
  out.b = r_hat.block(0, out.offset_b, r_hat.rows(), hi - lo);
  return out;
}

void CheckFrozen(const Pathway& p, const char* which) {
  if (!p.Frozen()) {
    throw std::invalid_argument(
        std::string("configuration error: ") + which +
        " auditory pathway has unfrozen parameters");
  }
}

}  // namespace

TrainingRun TrainHaClosedLoop(Model* ha, Pathway* nh, Pathway* hi,
                              const std::vector<AudioBuffer>& data,
                              const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("empty training data");
  CheckFrozen(*nh, "NH");
  CheckFrozen(*hi, "HI");

  std::vector<FrameExample> frames;
  for (const AudioBuffer& item : data) {
    const AudioBuffer calibrated = CalibrateOrKeep(item, 70.0);
    // Target slot stores the raw core; NH responses are computed per frame.
    CutFrames(calibrated.samples, RowToMap(calibrated.samples), cfg.core_len,
              ha->LeftContext(), ha->RightContext(), &frames);
  }
  if (frames.empty()) {
    throw std::invalid_argument("no full frames; data shorter than core_len");
  }

  Rng rng(cfg.seed);
  const SplitIndices split = SplitTrainVal(frames.size(), cfg.val_fraction, &rng);
  AdamOptimizer adam(ha->Params(), cfg.lr);
  LrScheduler scheduler(cfg.lr, cfg.patience);

  auto frame_loss = [&](const FrameExample& ex, bool train) -> FPType {
    const ArrayX core = ex.target.row(0).transpose();
    const FeatureMap r = nh->Forward(core);
    FeatureMap ha_out;
    if (train) {
      ha_out = ha->Forward(RowToMap(ex.input));
    } else {
      ha_out = ha->Infer(RowToMap(ex.input));
    }
    const FeatureMap r_hat = hi->Forward(ha_out.row(0).transpose());
    const Aligned al =
        AlignResponses(r, nh->TrimLeft(), nh->TrimRight(), r_hat,
                       hi->TrimLeft(), hi->TrimRight(), cfg.core_len);
    const FPType loss = HaLoss(al.a, al.b, cfg.alpha, cfg.beta);
    if (train) {
      FeatureMap g_hat = FeatureMap::Zero(r_hat.rows(), r_hat.cols());
      g_hat.block(0, al.offset_b, al.b.rows(), al.b.cols()) =
          HaLossGrad(al.a, al.b, cfg.alpha, cfg.beta);
      const ArrayX g_ha_out = hi->Backward(g_hat);
      ha->Backward(RowToMap(g_ha_out));
    }
    return loss;
  };

  TrainingRun run;
  std::vector<size_t> order = split.train;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.Shuffle(&order);
    FPType train_sum = 0.0;
    size_t batch_fill = 0;
    ha->ZeroGrads();
    for (size_t pos = 0; pos < order.size(); ++pos) {
      train_sum += frame_loss(frames[order[pos]], /*train=*/true);
      if (++batch_fill == static_cast<size_t>(cfg.batch) ||
          pos + 1 == order.size()) {
        // Average the accumulated gradients over the batch.
        for (Tensor* t : ha->Params()) {
          t->grad /= static_cast<FPType>(batch_fill);
        }
        adam.Step();
        ha->ZeroGrads();
        batch_fill = 0;
      }
    }
    FPType val_sum = 0.0;
    for (const size_t vi : split.val) {
      val_sum += frame_loss(frames[vi], /*train=*/false);
    }
    const FPType train_loss =
        order.empty() ? 0.0 : train_sum / static_cast<FPType>(order.size());
    const FPType val_loss = split.val.empty()
                                ? train_loss
                                : val_sum / static_cast<FPType>(split.val.size());
    adam.set_lr(scheduler.Observe(val_loss));
    run.train_loss.push_back(train_loss);
    run.val_loss.push_back(val_loss);
    run.best_val.push_back(scheduler.best());
    run.lr_history.push_back(adam.lr());
  }
  return run;
}

TrainingRun TrainSeClosedLoop(
    Model* se, Pathway* nh,
    const std::vector<std::pair<AudioBuffer, AudioBuffer>>& pairs,
    const TrainConfig& cfg) {
  if (pairs.empty()) throw std::invalid_argument("empty training data");
  CheckFrozen(*nh, "NH");

  // input = noisy frame, target row = clean core.
  std::vector<FrameExample> frames;
  for (const auto& [noisy, clean] : pairs) {
    if (noisy.samples.size() != clean.samples.size()) {
      throw std::invalid_argument("noisy/clean pair length mismatch");
    }
    CutFrames(noisy.samples, RowToMap(clean.samples), cfg.core_len,
              se->LeftContext(), se->RightContext(), &frames);
  }
  if (frames.empty()) {
    throw std::invalid_argument("no full frames; data shorter than core_len");
  }

  Rng rng(cfg.seed);
  const SplitIndices split = SplitTrainVal(frames.size(), cfg.val_fraction, &rng);
  AdamOptimizer adam(se->Params(), cfg.lr);
  LrScheduler scheduler(cfg.lr, cfg.patience);

  auto frame_loss = [&](const FrameExample& ex, bool train) -> FPType {
    const ArrayX clean_core = ex.target.row(0).transpose();
    const FeatureMap r_clean = nh->Forward(clean_core);
    FeatureMap se_out;
    if (train) {
      se_out = se->Forward(RowToMap(ex.input));
    } else {
      se_out = se->Infer(RowToMap(ex.input));
    }
    // Forward order matters: the pathway's cache must hold the processed
    // branch when Backward runs.
    const FeatureMap r_proc = nh->Forward(se_out.row(0).transpose());
    const Aligned al = AlignResponses(r_clean, nh->TrimLeft(), nh->TrimRight(),
                                      r_proc, nh->TrimLeft(), nh->TrimRight(),
                                      cfg.core_len);
    const FPType loss = MaeLoss(al.b, al.a);
    if (train) {
      FeatureMap g_proc = FeatureMap::Zero(r_proc.rows(), r_proc.cols());
      g_proc.block(0, al.offset_b, al.b.rows(), al.b.cols()) =
          MaeLossGrad(al.b, al.a);
      const ArrayX g_se_out = nh->Backward(g_proc);
      se->Backward(RowToMap(g_se_out));
    }
    return loss;
  };

  TrainingRun run;
  std::vector<size_t> order = split.train;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.Shuffle(&order);
    FPType train_sum = 0.0;
    size_t batch_fill = 0;
    se->ZeroGrads();
    for (size_t pos = 0; pos < order.size(); ++pos) {
      train_sum += frame_loss(frames[order[pos]], /*train=*/true);
      if (++batch_fill == static_cast<size_t>(cfg.batch) ||
          pos + 1 == order.size()) {
        for (Tensor* t : se->Params()) {
          t->grad /= static_cast<FPType>(batch_fill);
        }
        adam.Step();
        se->ZeroGrads();
        batch_fill = 0;
      }
    }
    FPType val_sum = 0.0;
    for (const size_t vi : split.val) {
      val_sum += frame_loss(frames[vi], /*train=*/false);
    }
    const FPType train_loss =
        order.empty() ? 0.0 : train_sum / static_cast<FPType>(order.size());
    const FPType val_loss = split.val.empty()
                                ? train_loss
                                : val_sum / static_cast<FPType>(split.val.size());
    adam.set_lr(scheduler.Observe(val_loss));
    run.train_loss.push_back(train_loss);
    run.val_loss.push_back(val_loss);
    run.best_val.push_back(scheduler.best());
    run.lr_history.push_back(adam.lr());
  }
  return run;
}

FPType ClosedLoopGradientCheck(Model* ha, Pathway* nh, Pathway* hi,
                               const ArrayX& frame, FPType alpha, FPType beta) {
  const Index core_len =
      frame.size() - ha->LeftContext() - ha->RightContext();
  const ArrayX core =
      frame.segment(ha->LeftContext(), core_len);
  const FeatureMap r = nh->Forward(core);

  auto loss_of_current_params = [&]() -> FPType {
    const FeatureMap ha_out = ha->Infer(RowToMap(frame));
    const FeatureMap r_hat = hi->Forward(ha_out.row(0).transpose());
    const Aligned al = AlignResponses(r, nh->TrimLeft(), nh->TrimRight(), r_hat,
                                      hi->TrimLeft(), hi->TrimRight(), core_len);
    return HaLoss(al.a, al.b, alpha, beta);
  };

  // Analytic gradients.
  ha->ZeroGrads();
  {
    const FeatureMap ha_out = ha->Forward(RowToMap(frame));
    const FeatureMap r_hat = hi->Forward(ha_out.row(0).transpose());
    const Aligned al = AlignResponses(r, nh->TrimLeft(), nh->TrimRight(), r_hat,
                                      hi->TrimLeft(), hi->TrimRight(), core_len);
    FeatureMap g_hat = FeatureMap::Zero(r_hat.rows(), r_hat.cols());
    g_hat.block(0, al.offset_b, al.b.rows(), al.b.cols()) =
        HaLossGrad(al.a, al.b, alpha, beta);
    const ArrayX g_ha_out = hi->Backward(g_hat);
    ha->Backward(RowToMap(g_ha_out));
  }

  constexpr FPType kStep = 1e-4;
  FPType max_err = 0.0;
  for (Tensor* t : ha->Params()) {
    for (Index c = 0; c < t->value.cols(); ++c) {
      for (Index r_i = 0; r_i < t->value.rows(); ++r_i) {
        const FPType saved = t->value(r_i, c);
        t->value(r_i, c) = saved + kStep;
        const FPType up = loss_of_current_params();
        t->value(r_i, c) = saved - kStep;
        const FPType down = loss_of_current_params();
        t->value(r_i, c) = saved;
        const FPType numeric = (up - down) / (2.0 * kStep);
        max_err = std::max(max_err, RelativeError(t->grad(r_i, c), numeric));
      }
    }
  }
  return max_err;
}

}  // namespace aliasfree
