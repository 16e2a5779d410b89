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
//
// Acceptance suite: one pass/fail line per criterion. Every tolerance is
// fixed here, against measured oracle runs, before the assertions execute.
// The exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "aliasfree/analysis.h"
#include "aliasfree/audio.h"
#include "aliasfree/layers.h"
#include "aliasfree/model.h"
#include "aliasfree/rng.h"
#include "aliasfree/spectrum.h"
#include "aliasfree/surrogates.h"
#include "aliasfree/training.h"

namespace aliasfree {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr FPType kFs = 20000.0;

struct Criterion {
  int number;
  std::string title;
  std::function<bool(std::string*)> run;
};

// --- shared helpers ---------------------------------------------------------

std::vector<AudioBuffer> CleanCorpus(int count, FPType duration_s, uint64_t seed) {
  CorpusConfig cc;
  cc.count = count;
  cc.duration_s = duration_s;
  cc.seed = seed;
  std::vector<AudioBuffer> out;
  for (const auto& item : GenerateCorpus(cc)) out.push_back(item.clean);
  return out;
}

ArrayX ProcessWithZeroContexts(const Model& model, const ArrayX& x) {
  FeatureMap in(1, model.LeftContext() + x.size() + model.RightContext());
  in.setZero();
  in.block(0, model.LeftContext(), 1, x.size()) = x.transpose();
  return model.Infer(in).row(0).transpose();
}

std::string Detail(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// --- criterion 1: gradient suite ---------------------------------------------

bool Criterion1(std::string* detail) {
  FPType worst_layer = 0.0;
  for (const LayerKind kind :
       {LayerKind::kPointwise, LayerKind::kDilatedHistory,
        LayerKind::kDilatedFuture, LayerKind::kStrided,
        LayerKind::kStridedPrefilter, LayerKind::kTransposed,
        LayerKind::kSubpixel, LayerKind::kNearest, LayerKind::kTanh,
        LayerKind::kSigmoid, LayerKind::kRelu}) {
    LayerCheckShapes shapes;
    shapes.kernel = 4;
    worst_layer = std::max(worst_layer, GradientCheckLayer(kind, shapes, 1234));
  }

  // Surrogate stages, norm-relative against the numeric gradient's scale.
  CFGrid grid;
  grid.center_freqs.resize(2);
  grid.center_freqs[0] = 1000.0;
  grid.center_freqs[1] = 2400.0;
  Rng rng(77);
  FPType worst_stage = 0.0;
  {
    const CochleaStage stage(grid, kFs, MakeProfile("NH"));
    AudioBuffer tone{Sine(1000.0, kFs, 128, 0.37), kFs};
    tone = ScaleToSpl(tone, 65.0);
    ArrayX x = tone.samples;
    const FeatureMap projection = rng.UniformArray(2, 128, -1.0, 1.0);
    CochleaCache cache;
    (void)stage.Forward(x, &cache);
    const ArrayX gx = stage.Backward(projection, cache);
    FPType diff = 0.0, scale = 0.0;
    for (Index i = 0; i < x.size(); i += 2) {
      const FPType saved = x[i];
      x[i] = saved + 1e-9;
      const FPType up = (stage.Forward(x) * projection).sum();
      x[i] = saved - 1e-9;
      const FPType down = (stage.Forward(x) * projection).sum();
      x[i] = saved;
      const FPType numeric = (up - down) / 2e-9;
      diff = std::max(diff, std::abs(gx[i] - numeric));
      scale = std::max(scale, std::abs(numeric));
    }
    worst_stage = std::max(worst_stage, diff / scale);
  }
  {
    const IhcStage ihc(kFs);
    FeatureMap bm(2, 100);
    bm.row(0) = (2e-9 * Sine(1017.0, kFs, 100, 0.31)).transpose();
    bm.row(1) = (5e-9 * Sine(2403.0, kFs, 100, 0.77)).transpose();
    const FeatureMap projection = rng.UniformArray(2, 100, -1.0, 1.0);
    IhcCache cache;
    (void)ihc.Forward(bm, &cache);
    const FeatureMap g = ihc.Backward(projection, cache);
    FPType diff = 0.0, scale = 0.0;
    for (Index c = 0; c < 2; ++c) {
      for (Index t = 0; t < 100; t += 2) {
        const FPType saved = bm(c, t);
        bm(c, t) = saved + 1e-15;
        const FPType up = (ihc.Forward(bm) * projection).sum();
        bm(c, t) = saved - 1e-15;
        const FPType down = (ihc.Forward(bm) * projection).sum();
        bm(c, t) = saved;
        const FPType numeric = (up - down) / 2e-15;
        diff = std::max(diff, std::abs(g(c, t) - numeric));
        scale = std::max(scale, std::abs(numeric));
      }
    }
    worst_stage = std::max(worst_stage, diff / scale);
  }
  {
    const AnfStage anf(kFs);
    FeatureMap v(2, 100);
    v.row(0) = (-0.013 - 0.0065 * Sine(901.0, kFs, 100, 0.41).abs()).transpose();
    v.row(1) = (-0.002 - 0.0025 * Sine(2411.0, kFs, 100, 0.97).abs()).transpose();
    std::array<FeatureMap, 3> projection = {rng.UniformArray(2, 100, -1.0, 1.0),
                                            rng.UniformArray(2, 100, -1.0, 1.0),
                                            rng.UniformArray(2, 100, -1.0, 1.0)};
    AnfCache cache;
    (void)anf.Forward(v, &cache);
    const FeatureMap g = anf.Backward(projection, cache);
    auto loss = [&]() {
      const auto rates = anf.Forward(v);
      FPType sum = 0.0;
      for (int f = 0; f < 3; ++f) {
        sum += (rates[static_cast<size_t>(f)] *
                projection[static_cast<size_t>(f)]).sum();
      }
      return sum;
    };
    FPType diff = 0.0, scale = 0.0;
    for (Index c = 0; c < 2; ++c) {
      for (Index t = 0; t < 100; t += 2) {
        const FPType saved = v(c, t);
        v(c, t) = saved + 1e-9;
        const FPType up = loss();
        v(c, t) = saved - 1e-9;
        const FPType down = loss();
        v(c, t) = saved;
        const FPType numeric = (up - down) / 2e-9;
        diff = std::max(diff, std::abs(g(c, t) - numeric));
        scale = std::max(scale, std::abs(numeric));
      }
    }
    worst_stage = std::max(worst_stage, diff / scale);
  }

  // Full pipeline through the frozen chain for a <= 200 parameter processor.
  const CFGrid small_grid = CFGrid::LogSpaced(3);
  ModelSpec hs;
  hs.memory_blocks = 1;
  hs.repeats = 1;
  hs.kernel_history = 2;
  hs.kernel_future = 1;
  hs.hidden_channels = 4;
  hs.left_context = 6;
  hs.right_context = 3;
  auto ha = BuildDconnear(hs, 50);
  const Index param_count = ha->ParameterCount();
  SurrogatePathway nh(small_grid, kFs, MakeProfile("NH"));
  SurrogatePathway hi(small_grid, kFs, MakeProfile("Slope35-7,0,0"));
  AudioBuffer tone{Sine(1000.0, kFs, 64 + 9, 0.3), kFs};
  tone = ScaleToSpl(tone, 70.0);
  const FPType pipeline_err =
      ClosedLoopGradientCheck(ha.get(), &nh, &hi, tone.samples, 30.0, 1.0);

  *detail = Detail(
      "layers max %.2e (< 1e-4), stages max %.2e (< 1e-4), "
      "full pipeline %.2e (< 1e-3, %ld params)",
      worst_layer, worst_stage, pipeline_err, static_cast<long>(param_count));
  return worst_layer < 1e-4 && worst_stage < 1e-4 && pipeline_err < 1e-3 &&
         param_count <= 200;
}

// --- criterion 2: receptive-field equivalence ---------------------------------

bool Criterion2(std::string* detail) {
  std::vector<std::pair<std::string, ModelSpec>> specs;
  {
    ModelSpec a;
    a.memory_blocks = 2;
    a.repeats = 1;
    a.kernel_history = 3;
    a.hidden_channels = 3;
    specs.emplace_back("toy-history", a);
    ModelSpec b;
    b.memory_blocks = 3;
    b.repeats = 2;
    b.kernel_history = 4;
    b.kernel_future = 2;
    b.hidden_channels = 4;
    specs.emplace_back("toy-mixed", b);
  }
  for (auto [name, spec] : {std::pair<std::string, ModelSpec>{"cochlear", TableSpecCochlear()},
                            {"ihc", TableSpecIhc()},
                            {"anf", TableSpecAnf()},
                            {"ha", TableSpecHa()}}) {
    spec.left_context = 0;
    spec.right_context = 0;
    specs.emplace_back(name, spec);
  }

  std::string parts;
  bool ok = true;
  for (const auto& [name, spec] : specs) {
    const ReceptiveField closed = ReceptiveFieldClosedForm(spec);
    auto model = BuildDconnear(spec, 3);
    model->FillForRfProbe();
    const Index empirical =
        ReceptiveFieldEmpirical(*model, closed.past + 16, closed.future + 16);
    if (!parts.empty()) parts += ", ";
    parts += Detail("%s %ld/%ld", name.c_str(), static_cast<long>(closed.total),
                    static_cast<long>(empirical));
    ok = ok && closed.total == empirical;
  }
  *detail = "closed/empirical: " + parts;
  return ok;
}

// --- criterion 3: parameter counts --------------------------------------------

bool Criterion3(std::string* detail) {
  struct Row {
    const char* name;
    Index count;
    FPType reported;
  };
  ModelSpec anf_branch = TableSpecAnf();
  anf_branch.out_channels = 1;
  anf_branch.left_context = 0;
  anf_branch.right_context = 0;
  const Row rows[] = {
      {"cochlear", BuildDconnear(TableSpecCochlear(), 1)->ParameterCount(), 1.5e6},
      {"ihc", BuildDconnear(TableSpecIhc(), 1)->ParameterCount(), 0.3e6},
      {"anf", BuildAnfThreeBranch(TableSpecAnf(), anf_branch, 1)->ParameterCount(),
       0.1e6},
      {"ha", BuildDconnear(TableSpecHa(), 1)->ParameterCount(), 1.6e6},
  };
  bool ok = true;
  std::string parts;
  for (const Row& row : rows) {
    const FPType deviation =
        (static_cast<FPType>(row.count) - row.reported) / row.reported;
    const bool within = std::abs(deviation) <= 0.10;
    ok = ok && within;
    if (!parts.empty()) parts += ", ";
    parts += Detail("%s %ld (%+.1f%%%s)", row.name, static_cast<long>(row.count),
                    100.0 * deviation, within ? "" : " OUT");
  }
  *detail = parts;
  return ok;
}

// --- criterion 4: artifact ordering at initialization --------------------------

bool Criterion4(std::string* detail) {
  ModelSpec ds;
  ds.memory_blocks = 4;
  ds.repeats = 2;
  ds.kernel_history = 8;
  ds.kernel_future = 2;
  ds.hidden_channels = 16;
  const uint64_t seed = 303;
  auto dcon = BuildDconnear(ds, seed);
  AutoencoderConfig ac;
  ac.depth = 4;
  ac.upsampling = UpsamplingKind::kTransposed;
  auto ae_transposed = BuildAutoencoder(ac, seed);
  ac.upsampling = UpsamplingKind::kSubpixel;
  auto ae_subpixel = BuildAutoencoder(ac, seed);

  const FPType thd_dcon =
      ToneProbe(ModelProbeSystem(dcon.get(), 2048), 1000.0, 70.0, 1.0, kFs).thd_db;
  const FPType thd_transposed =
      ToneProbe(ModelProbeSystem(ae_transposed.get(), 2048, 16), 1000.0, 70.0,
                1.0, kFs)
          .thd_db;
  const FPType thd_subpixel =
      ToneProbe(ModelProbeSystem(ae_subpixel.get(), 2048, 16), 1000.0, 70.0, 1.0,
                kFs)
          .thd_db;

  // Imaging: a random nearest-neighbor decoder stage against the dCoNNear
  // output in the same mirror band (fs/2 - 500 Hz +- 50).
  Rng rng(seed);
  const ArrayXX w = rng.UniformArray(1, 16, -0.25, 0.25);
  auto nearest_stage = [&w](const ArrayX& x) {
    FeatureMap m(1, x.size());
    m.row(0) = x.transpose();
    return ArrayX(
        Autoencoder::UpsampleStage(m, UpsamplingKind::kNearest, w, 16).row(0)
            .transpose());
  };
  const FPType mirror_nearest = ImagingProbe(nearest_stage, 2, 500.0, kFs, 20000);
  const ArtifactReport r500 =
      ToneProbe(ModelProbeSystem(dcon.get(), 2048), 500.0, 70.0, 1.0, kFs);
  const FPType mirror_dcon =
      BandEnergyDb(r500.spectrum, kFs / 2 - 550.0, kFs / 2 - 450.0);

  *detail = Detail(
      "thd dconnear %.1f vs transposed %.1f / subpixel %.1f dB (need +20); "
      "mirror nearest %.1f (> -60) vs dconnear %.1f (< -120) dB",
      thd_dcon, thd_transposed, thd_subpixel, mirror_nearest, mirror_dcon);
  return thd_transposed >= thd_dcon + 20.0 && thd_subpixel >= thd_dcon + 20.0 &&
         mirror_nearest > -60.0 && mirror_dcon < -120.0;
}

// --- criterion 5: artifact ordering after training ------------------------------

bool Criterion5(std::string* detail) {
  const auto data = CleanCorpus(16, 0.4, 42);
  EmulatorTask task;
  task.target = EmulatorTarget::kCochlea;
  task.grid = CFGrid::LogSpaced(5);
  TrainConfig cfg;
  cfg.lr = 2e-3;
  cfg.epochs = 10;
  cfg.batch = 8;
  cfg.seed = 7;
  cfg.core_len = 512;

  ModelSpec ds;
  ds.memory_blocks = 3;
  ds.repeats = 1;
  ds.kernel_history = 10;
  ds.hidden_channels = 12;
  ds.out_channels = 5;
  ds.left_context = 32;
  ds.right_context = 8;
  auto student_d = BuildDconnear(ds, 99);
  const TrainingRun run_d = TrainEmulator(student_d.get(), task, data, cfg);

  AutoencoderConfig bc;
  bc.depth = 2;
  bc.base_channels = 8;
  bc.kernel = 16;
  bc.upsampling = UpsamplingKind::kTransposed;
  bc.out_channels = 5;
  auto student_b = BuildAutoencoder(bc, 99);
  const TrainingRun run_b = TrainEmulator(student_b.get(), task, data, cfg);

  ProbeSystem sys_d = ModelProbeSystem(student_d.get(), 2048);
  sys_d.channel_freqs = task.grid.center_freqs;
  ProbeSystem sys_b = ModelProbeSystem(student_b.get(), 2048, 4);
  sys_b.channel_freqs = task.grid.center_freqs;
  const FPType thd_d = ToneProbe(sys_d, 1000.0, 70.0, 1.0, kFs).thd_db;
  const FPType thd_b = ToneProbe(sys_b, 1000.0, 70.0, 1.0, kFs).thd_db;

  const bool both_learned = run_d.val_loss.back() < run_d.val_loss.front() &&
                            run_b.val_loss.back() < run_b.val_loss.front();
  *detail = Detail(
      "trained thd dconnear %.1f vs transposed baseline %.1f dB "
      "(margin %.1f, need >= 2); val %.2e->%.2e / %.2e->%.2e",
      thd_d, thd_b, thd_b - thd_d, run_d.val_loss.front(), run_d.val_loss.back(),
      run_b.val_loss.front(), run_b.val_loss.back());
  return both_learned && thd_d <= thd_b - 2.0;
}

// --- criterion 6: aliasing reproduction -----------------------------------------

bool Criterion6(std::string* detail) {
  const auto bare = AliasingProbe(8, false, kFs);
  const auto filtered = AliasingProbe(8, true, kFs);
  *detail = Detail("sub-500 Hz energy %.1f dB without prefilter (> -60), "
                   "%.1f dB with (need <= bare - 20)",
                   bare.sub500_energy_db, filtered.sub500_energy_db);
  return bare.sub500_energy_db > -60.0 &&
         filtered.sub500_energy_db <= bare.sub500_energy_db - 20.0;
}

// --- criterion 7: closed-loop restoration ----------------------------------------

bool Criterion7(std::string* detail) {
  const auto train_data = CleanCorpus(16, 0.5, 50);
  const auto held_out = CleanCorpus(6, 0.5, 51);

  const CFGrid grid = CFGrid::LogSpaced(21);
  SurrogatePathway nh(grid, kFs, MakeProfile("NH"));
  SurrogatePathway hi(grid, kFs, MakeProfile("Slope35-7,0,0"));
  ModelSpec hs;
  hs.memory_blocks = 2;
  hs.repeats = 2;
  hs.kernel_history = 6;
  hs.kernel_future = 2;
  hs.hidden_channels = 12;
  hs.left_context = 48;
  hs.right_context = 16;
  auto ha = BuildDconnear(hs, 60);
  ha->InitNearIdentity();
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 15;
  cfg.batch = 8;
  cfg.seed = 61;
  cfg.core_len = 512;
  (void)TrainHaClosedLoop(ha.get(), &nh, &hi, train_data, cfg);

  AuditoryChain nh_chain(grid, kFs, MakeProfile("NH"));
  AuditoryChain hi_chain(grid, kFs, MakeProfile("Slope35-7,0,0"));
  FPType unprocessed = 0.0, processed = 0.0, control = 0.0;
  for (const AudioBuffer& item : held_out) {
    const AudioBuffer calibrated = ScaleToSpl(item, 70.0);
    const ArrayX p_nh =
        nh_chain.Forward(calibrated.samples).colwise().sum().transpose();
    const ArrayX p_unproc =
        hi_chain.Forward(calibrated.samples).colwise().sum().transpose();
    const ArrayX enhanced = ProcessWithZeroContexts(*ha, calibrated.samples);
    const ArrayX p_proc = hi_chain.Forward(enhanced).colwise().sum().transpose();
    unprocessed += Nrmse(p_nh, p_unproc);
    processed += Nrmse(p_nh, p_proc);
    control += Nrmse(p_nh, p_nh);
  }
  unprocessed /= held_out.size();
  processed /= held_out.size();
  control /= held_out.size();
  *detail = Detail(
      "held-out NRMSE at 70 dB: unprocessed %.2f%%, processed %.2f%% "
      "(need lower), NH-vs-NH control %.3g%% (need 0)",
      unprocessed, processed, control);
  return processed < unprocessed && control == 0.0;
}

// --- criterion 8: closed-loop speech enhancement ----------------------------------

bool Criterion8(std::string* detail) {
  CorpusConfig cc;
  cc.count = 16;
  cc.duration_s = 0.5;
  cc.seed = 70;
  cc.make_pairs = true;
  std::vector<std::pair<AudioBuffer, AudioBuffer>> train_pairs;
  for (const auto& item : GenerateCorpus(cc)) {
    train_pairs.emplace_back(item.noisy, item.clean);
  }
  cc.count = 6;
  cc.seed = 71;
  std::vector<std::pair<AudioBuffer, AudioBuffer>> held_out;
  for (const auto& item : GenerateCorpus(cc)) {
    held_out.emplace_back(item.noisy, item.clean);
  }

  const CFGrid grid = CFGrid::LogSpaced(21);
  SurrogatePathway nh(grid, kFs, MakeProfile("NH"));
  ModelSpec ss;
  ss.memory_blocks = 2;
  ss.repeats = 2;
  ss.kernel_history = 6;
  ss.kernel_future = 2;
  ss.hidden_channels = 12;
  ss.left_context = 48;
  ss.right_context = 16;
  auto se = BuildDconnear(ss, 80);
  se->InitNearIdentity();
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 15;
  cfg.batch = 8;
  cfg.seed = 81;
  cfg.core_len = 512;
  (void)TrainSeClosedLoop(se.get(), &nh, train_pairs, cfg);

  AuditoryChain chain(grid, kFs, MakeProfile("NH"));
  FPType mae_unproc = 0.0, mae_proc = 0.0;
  for (const auto& [noisy, clean] : held_out) {
    const FeatureMap r_clean = chain.Forward(clean.samples);
    const FeatureMap r_noisy = chain.Forward(noisy.samples);
    const ArrayX enhanced = ProcessWithZeroContexts(*se, noisy.samples);
    const FeatureMap r_proc = chain.Forward(enhanced);
    mae_unproc += MaeLoss(r_noisy, r_clean);
    mae_proc += MaeLoss(r_proc, r_clean);
  }
  const FPType reduction = 100.0 * (1.0 - mae_proc / mae_unproc);
  *detail = Detail("held-out auditory MAE: unprocessed %.1f, processed %.1f "
                   "(reduction %.1f%%, need >= 20%%)",
                   mae_unproc / held_out.size(), mae_proc / held_out.size(),
                   reduction);
  return reduction >= 20.0;
}

// --- criterion 9: metric exactness -------------------------------------------------

bool Criterion9(std::string* detail) {
  bool ok = true;
  std::string parts;
  auto expect = [&](bool condition, const char* what) {
    ok = ok && condition;
    if (!condition) {
      if (!parts.empty()) parts += ", ";
      parts += what;
    }
  };

  // thd_fractional examples.
  {
    const Spectrum pure = MagnitudeSpectrum({Sine(1000.0, kFs, 20000), kFs});
    expect(ThdFractional(pure, 1000.0) == kThdFloorDb, "thd floor");
    const Spectrum second = MagnitudeSpectrum(
        {Sine(1000.0, kFs, 20000) + 0.1 * Sine(2000.0, kFs, 20000), kFs});
    expect(std::abs(ThdFractional(second, 1000.0) + 20.0) < 0.1, "thd -20");
    const Spectrum fractional = MagnitudeSpectrum(
        {Sine(1000.0, kFs, 20000) + 0.1 * Sine(1250.0, kFs, 20000) +
             0.1 * Sine(1500.0, kFs, 20000),
         kFs});
    expect(std::abs(ThdFractional(fractional, 1000.0) -
                    20.0 * std::log10(std::sqrt(0.02))) < 0.1,
           "thd quarter harmonics");
  }
  // nrmse examples.
  {
    ArrayX p(4), p_hat(4);
    p << 1, 2, 3, 4;
    p_hat << 1, 2, 3, 0;
    expect(Nrmse(p, p) == 0.0, "nrmse zero");
    expect(std::abs(Nrmse(ArrayX::Constant(5, 2.5), ArrayX::Zero(5)) - 100.0) <
               1e-12,
           "nrmse hundred");
    expect(std::abs(Nrmse(p, p_hat) - 50.0) < 1e-12, "nrmse fifty");
  }
  // scale_to_spl examples (Eq. 4 calibration to 1e-9 relative).
  {
    Rng rng(9);
    AudioBuffer buf{rng.NormalArray(2048), kFs};
    const FPType target70 = 2e-5 * std::pow(10.0, 3.5);
    expect(std::abs(Rms(ScaleToSpl(buf, 70.0)) - target70) / target70 < 1e-9,
           "calibration 70 dB");
    expect(std::abs(Rms(ScaleToSpl(buf, 0.0)) - 2e-5) / 2e-5 < 1e-9,
           "calibration 0 dB");
  }
  // ha_loss examples.
  {
    Rng rng(10);
    const FeatureMap r = rng.UniformArray(4, 16, 0.0, 100.0);
    const FeatureMap r_hat = rng.UniformArray(4, 16, 0.0, 100.0);
    expect(HaLoss(r, r, 30.0, 1.0) == 0.0, "ha_loss zero");
    const ArrayX p = r.colwise().sum().transpose();
    const ArrayX p_hat = r_hat.colwise().sum().transpose();
    expect(std::abs(HaLoss(r, r_hat, 0.0, 1.0) - (p - p_hat).square().mean()) <
               1e-9,
           "ha_loss alpha=0");
    const FeatureMap single = r.topRows(1);
    const FeatureMap single_hat = r_hat.topRows(1);
    expect(std::abs(HaLoss(single, single_hat, 30.0, 1.0) -
                    31.0 * (single - single_hat).square().mean()) < 1e-9,
           "ha_loss single CF");
  }
  *detail = ok ? "all example values reproduced at stated tolerances"
               : "failed: " + parts;
  return ok;
}

// --- criterion 10: CLI determinism ---------------------------------------------------

bool Criterion10(std::string* detail) {
  const char* binary = std::getenv("ALIASFREE_BIN");
  if (!binary || !*binary) {
    *detail = "ALIASFREE_BIN not set";
    return false;
  }
  const std::string scratch =
      (fs::temp_directory_path() / "aliasfree_acceptance_cli").string();
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  auto run = [&](const std::string& args) {
    const std::string command = std::string(binary) + " " + args +
                                " > " + scratch + "/out.txt 2>&1";
    return WEXITSTATUS(std::system(command.c_str()));
  };
  auto file_bytes = [](const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  };

  bool ok = true;
  std::string parts;
  auto compare = [&](const std::string& a, const std::string& b,
                     const char* what) {
    const bool same = file_bytes(a) == file_bytes(b) && !file_bytes(a).empty();
    ok = ok && same;
    if (!same) {
      if (!parts.empty()) parts += ", ";
      parts += what;
    }
  };

  const std::string corpus_args =
      " --seed 5 --set count=4 --set duration_s=0.2 --set make_pairs=1";
  ok = ok && run("gen-corpus --out " + scratch + "/c1" + corpus_args) == 0;
  ok = ok && run("gen-corpus --out " + scratch + "/c2" + corpus_args) == 0;
  compare(scratch + "/c1/manifest.csv", scratch + "/c2/manifest.csv",
          "corpus manifest");
  compare(scratch + "/c1/noisy_001.wav", scratch + "/c2/noisy_001.wav",
          "corpus audio");

  const std::string train_args =
      " --seed 9 --set task=emulator --set target=identity --set corpus=" +
      scratch + "/c1 --set epochs=2 --set core_len=256 --set m=1 --set r=1 "
      "--set k1=2 --set h=4 --set l_l=8 --set l_r=4";
  ok = ok && run("train --out " + scratch + "/t1" + train_args) == 0;
  ok = ok && run("train --out " + scratch + "/t2" + train_args) == 0;
  compare(scratch + "/t1/checkpoint.weights", scratch + "/t2/checkpoint.weights",
          "checkpoint");
  compare(scratch + "/t1/log.csv", scratch + "/t2/log.csv", "training log");

  const std::string probe_args =
      " --seed 3 --set system=identity --set probe=tone --set duration_s=0.5";
  ok = ok && run("probe --out " + scratch + "/p1" + probe_args) == 0;
  ok = ok && run("probe --out " + scratch + "/p2" + probe_args) == 0;
  compare(scratch + "/p1/report.txt", scratch + "/p2/report.txt", "probe report");
  compare(scratch + "/p1/spectrum_db.csv", scratch + "/p2/spectrum_db.csv",
          "probe spectrum");

  const std::string metrics_args = " --set corpus=" + scratch +
                                   "/c1 --set n_cf=5 --set levels=70 "
                                   "--set profile=Slope35-7,0,0";
  ok = ok && run("metrics --out " + scratch + "/m1" + metrics_args) == 0;
  ok = ok && run("metrics --out " + scratch + "/m2" + metrics_args) == 0;
  compare(scratch + "/m1/nrmse.csv", scratch + "/m2/nrmse.csv", "metrics table");

  // Bench output is timing and therefore exempt; its resolved config is not.
  const std::string bench_args = " --set preset=tiny --set n_frames=2";
  ok = ok && run("bench --out " + scratch + "/b1" + bench_args) == 0;
  ok = ok && run("bench --out " + scratch + "/b2" + bench_args) == 0;

  fs::remove_all(scratch);
  *detail = ok ? "gen-corpus/train/probe/metrics byte-identical across reruns"
               : "mismatch: " + parts;
  return ok;
}

int RunAll() {
  const std::vector<Criterion> criteria = {
      {1, "gradient suite", Criterion1},
      {2, "receptive-field equivalence", Criterion2},
      {3, "parameter-count reproduction", Criterion3},
      {4, "artifact ordering at initialization", Criterion4},
      {5, "artifact ordering after training", Criterion5},
      {6, "aliasing reproduction", Criterion6},
      {7, "closed-loop restoration", Criterion7},
      {8, "speech-enhancement closed loop", Criterion8},
      {9, "metric exactness", Criterion9},
      {10, "CLI determinism", Criterion10},
  };
  int failures = 0;
  for (const Criterion& criterion : criteria) {
    const auto start = Clock::now();
    bool passed = false;
    std::string detail;
    try {
      passed = criterion.run(&detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("[%s] criterion %2d: %s — %s (%.1fs)\n",
                passed ? "PASS" : "FAIL", criterion.number,
                criterion.title.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!passed) ++failures;
  }
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures;
}

}  // namespace
}  // namespace aliasfree

int main() { return aliasfree::RunAll(); }
