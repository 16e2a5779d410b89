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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aliasfree/audio.h"
#include "aliasfree/rng.h"
#include "aliasfree/training.h"

using namespace aliasfree;

namespace {
constexpr FPType kFs = 20000.0;

ModelSpec TinySpec() {
  ModelSpec s;
  s.memory_blocks = 1;
  s.repeats = 1;
  s.kernel_history = 2;
  s.kernel_future = 1;
  s.hidden_channels = 4;
  s.left_context = 8;
  s.right_context = 4;
  return s;
}

// Exact pass-through: one silenced block at width 1 with identity
// projections and linear activations.
std::unique_ptr<DCoNNear> ExactPassThrough() {
  ModelSpec s;
  s.memory_blocks = 1;
  s.repeats = 1;
  s.kernel_history = 1;
  s.kernel_future = 0;
  s.hidden_channels = 1;
  s.act_hidden = Activation::kIdentity;
  s.act_out = Activation::kIdentity;
  auto model = BuildDconnear(s, 1);
  for (Tensor* t : model->Params()) {
    if (t->name == "in_proj" || t->name == "head.w" || t->name == "skip_w") {
      t->value.setOnes();
    } else {
      t->value.setZero();
    }
  }
  return model;
}

std::vector<AudioBuffer> ToneCorpus(int count, Index n, uint64_t seed) {
  Rng rng(seed);
  std::vector<AudioBuffer> out;
  for (int i = 0; i < count; ++i) {
    const FPType f = std::exp(rng.Uniform(std::log(200.0), std::log(3000.0)));
    AudioBuffer buf{Sine(f, kFs, n, rng.Uniform(0.0, 2.0 * kPi)) +
                        0.2 * rng.NormalArray(n),
                    kFs};
    out.push_back(ScaleToSpl(buf, 70.0));
  }
  return out;
}

}  // namespace

TEST_CASE("mae loss") {
  Rng rng(1);
  const FeatureMap target = rng.UniformArray(3, 10, -1.0, 1.0);
  CHECK(MaeLoss(target, target) == 0.0);
  CHECK(MaeLoss((target + 1.0).eval(), target) == doctest::Approx(1.0));
  CHECK_THROWS_AS(MaeLoss(target, target.leftCols(4)), std::invalid_argument);

  SUBCASE("gradient matches finite differences") {
    FeatureMap pred = rng.UniformArray(3, 10, -1.0, 1.0);
    const FeatureMap g = MaeLossGrad(pred, target);
    constexpr FPType h = 1e-7;
    for (Index t = 0; t < 10; t += 3) {
      const FPType saved = pred(1, t);
      pred(1, t) = saved + h;
      const FPType up = MaeLoss(pred, target);
      pred(1, t) = saved - h;
      const FPType down = MaeLoss(pred, target);
      pred(1, t) = saved;
      CHECK(RelativeError(g(1, t), (up - down) / (2 * h)) < 1e-5);
    }
  }
}

TEST_CASE("ha loss") {
  Rng rng(2);
  const FeatureMap r = rng.UniformArray(4, 12, 0.0, 100.0);
  CHECK(HaLoss(r, r, 30.0, 1.0) == 0.0);

  SUBCASE("alpha zero reduces to the population term") {
    const FeatureMap r_hat = rng.UniformArray(4, 12, 0.0, 100.0);
    const ArrayX p = r.colwise().sum().transpose();
    const ArrayX p_hat = r_hat.colwise().sum().transpose();
    CHECK(HaLoss(r, r_hat, 0.0, 2.5) ==
          doctest::Approx(2.5 * (p - p_hat).square().mean()).epsilon(1e-12));
  }
  SUBCASE("single CF collapses to (alpha+beta) * MSE") {
    const FeatureMap r1 = rng.UniformArray(1, 20, 0.0, 50.0);
    const FeatureMap r1_hat = rng.UniformArray(1, 20, 0.0, 50.0);
    const FPType mse = (r1 - r1_hat).square().mean();
    CHECK(HaLoss(r1, r1_hat, 30.0, 1.0) ==
          doctest::Approx(31.0 * mse).epsilon(1e-12));
  }
  SUBCASE("gradient matches finite differences") {
    FeatureMap r_hat = rng.UniformArray(4, 12, 0.0, 100.0);
    const FeatureMap g = HaLossGrad(r, r_hat, 30.0, 1.0);
    constexpr FPType h = 1e-5;
    for (Index c = 0; c < 4; ++c) {
      for (Index t = 0; t < 12; t += 5) {
        const FPType saved = r_hat(c, t);
        r_hat(c, t) = saved + h;
        const FPType up = HaLoss(r, r_hat, 30.0, 1.0);
        r_hat(c, t) = saved - h;
        const FPType down = HaLoss(r, r_hat, 30.0, 1.0);
        r_hat(c, t) = saved;
        CHECK(RelativeError(g(c, t), (up - down) / (2 * h)) < 1e-5);
      }
    }
  }
}

TEST_CASE("adam optimizer") {
  SUBCASE("zero gradients leave parameters untouched") {
    Tensor t("p", 3, 2);
    Rng rng(3);
    t.value = rng.UniformArray(3, 2, -1.0, 1.0);
    const ArrayXX before = t.value;
    AdamOptimizer adam({&t}, 1e-3);
    adam.Step();
    adam.Step();
    CHECK((t.value == before).all());
  }
  SUBCASE("first step moves by lr * sign(grad)") {
    Tensor t("p", 2, 2);
    t.value.setZero();
    t.grad << 0.5, -2.0, 1e-3, 4.0;
    AdamOptimizer adam({&t}, 1e-2);
    adam.Step();
    for (Index c = 0; c < 2; ++c) {
      for (Index r = 0; r < 2; ++r) {
        const FPType expected = -1e-2 * (t.grad(r, c) > 0 ? 1.0 : -1.0);
        CHECK(std::abs(t.value(r, c) - expected) < 1e-6);
      }
    }
  }
  SUBCASE("identical runs are bit-identical after ten steps") {
    auto run = [] {
      Tensor t("p", 4, 4);
      Rng rng(4);
      t.value = rng.UniformArray(4, 4, -1.0, 1.0);
      AdamOptimizer adam({&t}, 3e-3);
      for (int i = 0; i < 10; ++i) {
        t.grad = rng.UniformArray(4, 4, -1.0, 1.0);
        adam.Step();
      }
      return ArrayXX(t.value);
    };
    const ArrayXX a = run();
    const ArrayXX b = run();
    CHECK((a == b).all());
  }
}

TEST_CASE("learning-rate schedule") {
  SUBCASE("strictly decreasing keeps the rate") {
    LrScheduler sched(1e-4, 5);
    for (int e = 0; e < 12; ++e) {
      CHECK(sched.Observe(1.0 / (e + 1)) == 1e-4);
    }
  }
  SUBCASE("five stalled epochs halve once, at the fifth") {
    LrScheduler sched(1e-4, 5);
    CHECK(sched.Observe(1.0) == 1e-4);  // initial best
    CHECK(sched.Observe(0.5) == 1e-4);  // improvement
    for (int stall = 1; stall <= 4; ++stall) {
      CHECK(sched.Observe(0.5) == 1e-4);
    }
    CHECK(sched.Observe(0.5) == doctest::Approx(5e-5));  // fifth stall
    // Counter reset after halving: four more stalls keep the new rate.
    for (int stall = 1; stall <= 4; ++stall) {
      CHECK(sched.Observe(0.5) == doctest::Approx(5e-5));
    }
    CHECK(sched.Observe(0.5) == doctest::Approx(2.5e-5));
  }
  SUBCASE("improvement resets the stall counter") {
    LrScheduler sched(1e-4, 5);
    (void)sched.Observe(1.0);
    for (int stall = 0; stall < 4; ++stall) (void)sched.Observe(1.0);
    CHECK(sched.Observe(0.9) == 1e-4);  // improvement at the 4th stall
    for (int stall = 0; stall < 4; ++stall) {
      CHECK(sched.Observe(0.9) == 1e-4);
    }
    CHECK(sched.Observe(0.9) == doctest::Approx(5e-5));
  }
}

TEST_CASE("corpus generator") {
  SUBCASE("deterministic per seed") {
    CorpusConfig cfg;
    cfg.count = 6;
    cfg.duration_s = 0.1;
    cfg.seed = 77;
    const auto a = GenerateCorpus(cfg);
    const auto b = GenerateCorpus(cfg);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK((a[i].clean.samples == b[i].clean.samples).all());
      CHECK(a[i].kind == b[i].kind);
    }
  }
  SUBCASE("pairs stay inside the SNR bounds") {
    CorpusConfig cfg;
    cfg.count = 9;
    cfg.duration_s = 0.1;
    cfg.make_pairs = true;
    cfg.seed = 78;
    for (const CorpusItem& item : GenerateCorpus(cfg)) {
      CHECK(item.snr_db >= -5.0);
      CHECK(item.snr_db <= 5.0);
      REQUIRE(item.noisy.samples.size() == item.clean.samples.size());
      // Mixed to the requested SNR.
      const ArrayX noise = item.noisy.samples - item.clean.samples;
      const FPType snr = 20.0 * std::log10(Rms(item.clean) /
                                           std::sqrt(noise.square().mean()));
      CHECK(snr == doctest::Approx(item.snr_db).epsilon(1e-9));
    }
  }
  SUBCASE("calibrated to the requested level") {
    CorpusConfig cfg;
    cfg.count = 3;
    cfg.duration_s = 0.05;
    cfg.level_db = 60.0;
    for (const CorpusItem& item : GenerateCorpus(cfg)) {
      CHECK(Rms(item.clean) ==
            doctest::Approx(2e-5 * std::pow(10.0, 3.0)).epsilon(1e-9));
    }
  }
}

TEST_CASE("emulator training") {
  SUBCASE("identity task converges on a small corpus") {
    ModelSpec s = TinySpec();
    s.hidden_channels = 8;
    s.kernel_history = 4;
    auto student = BuildDconnear(s, 5);
    EmulatorTask task;
    task.target = EmulatorTarget::kIdentity;
    task.grid = CFGrid::LogSpaced(1);
    TrainConfig cfg;
    cfg.lr = 3e-3;
    cfg.epochs = 12;
    cfg.batch = 8;
    cfg.seed = 6;
    cfg.core_len = 256;
    const TrainingRun run =
        TrainEmulator(student.get(), task, ToneCorpus(10, 2000, 7), cfg);
    REQUIRE(run.val_loss.size() == 12);
    CHECK(run.val_loss.back() < 0.1 * run.val_loss.front());
    // best_val is the running minimum.
    for (size_t e = 1; e < run.best_val.size(); ++e) {
      CHECK(run.best_val[e] <= run.best_val[e - 1]);
      CHECK(run.best_val[e] <= run.val_loss[e]);
    }
  }
  SUBCASE("zero-signal dataset gives zero loss for a zero-bias student") {
    auto student = BuildDconnear(TinySpec(), 8);
    EmulatorTask task;
    task.target = EmulatorTarget::kIdentity;
    task.grid = CFGrid::LogSpaced(1);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.core_len = 64;
    cfg.seed = 9;
    std::vector<AudioBuffer> silent(3, AudioBuffer{ArrayX::Zero(512), kFs});
    const TrainingRun run = TrainEmulator(student.get(), task, silent, cfg);
    CHECK(run.train_loss[0] == 0.0);
  }
  SUBCASE("same seed twice gives identical trajectories") {
    const auto corpus = ToneCorpus(6, 1200, 10);
    auto run_once = [&corpus] {
      auto student = BuildDconnear(TinySpec(), 11);
      EmulatorTask task;
      task.target = EmulatorTarget::kCochlea;
      task.grid = CFGrid::LogSpaced(3);
      TrainConfig cfg;
      cfg.epochs = 3;
      cfg.core_len = 200;
      cfg.seed = 12;
      ModelSpec s = TinySpec();
      s.out_channels = 3;
      auto model = BuildDconnear(s, 11);
      return TrainEmulator(model.get(), task, corpus, cfg);
    };
    const TrainingRun a = run_once();
    const TrainingRun b = run_once();
    for (size_t e = 0; e < a.train_loss.size(); ++e) {
      CHECK(a.train_loss[e] == b.train_loss[e]);
      CHECK(a.val_loss[e] == b.val_loss[e]);
    }
  }
  SUBCASE("ihc and anf stages train end to end") {
    const auto corpus = ToneCorpus(2, 800, 13);
    EmulatorTask task;
    task.grid = CFGrid::LogSpaced(2);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.core_len = 128;
    cfg.seed = 14;

    task.target = EmulatorTarget::kIhc;
    auto ihc_student = BuildDconnear(TinySpec(), 15);
    CHECK(TrainEmulator(ihc_student.get(), task, corpus, cfg).train_loss[0] > 0.0);

    task.target = EmulatorTarget::kAnf;
    ModelSpec branch = TinySpec();
    branch.left_context = 0;
    branch.right_context = 0;
    branch.act_hidden = Activation::kRelu;
    branch.act_out = Activation::kRelu;
    ModelSpec shared = branch;
    shared.left_context = 8;
    shared.right_context = 4;
    auto anf_student = BuildAnfThreeBranch(shared, branch, 16);
    CHECK(TrainEmulator(anf_student.get(), task, corpus, cfg).train_loss[0] > 0.0);
  }
  SUBCASE("empty data is rejected") {
    auto student = BuildDconnear(TinySpec(), 17);
    EmulatorTask task;
    CHECK_THROWS_AS(TrainEmulator(student.get(), task, {}, TrainConfig{}),
                    std::invalid_argument);
  }
}

TEST_CASE("closed-loop HA training") {
  const CFGrid grid = CFGrid::LogSpaced(5);

  SUBCASE("identical pathways with exact pass-through sit at a zero-gradient fixed point") {
    auto ha = ExactPassThrough();
    SurrogatePathway nh(grid, kFs, MakeProfile("NH"));
    SurrogatePathway hi(grid, kFs, MakeProfile("NH"));
    std::vector<ArrayXX> before;
    for (Tensor* t : ha->Params()) before.push_back(t->value);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.core_len = 128;
    cfg.seed = 20;
    const TrainingRun run = TrainHaClosedLoop(ha.get(), &nh, &hi,
                                              ToneCorpus(3, 600, 21), cfg);
    CHECK(run.train_loss[0] == 0.0);
    CHECK(run.val_loss.back() == 0.0);
    const auto params = ha->Params();
    for (size_t i = 0; i < params.size(); ++i) {
      CHECK((params[i]->value == before[i]).all());
    }
  }

  SUBCASE("near-identity init starts at the unprocessed loss") {
    ModelSpec s = TinySpec();
    auto ha = BuildDconnear(s, 22);
    ha->InitNearIdentity();
    SurrogatePathway nh(grid, kFs, MakeProfile("NH"));
    SurrogatePathway hi(grid, kFs, MakeProfile("Slope35-7,0,0"));
    const auto corpus = ToneCorpus(1, 600, 23);
    const Index core_len = 256;
    const auto frames =
        Segment(corpus[0].samples, core_len, s.left_context, s.right_context,
                core_len);
    const ArrayX core = frames[0].core;
    FeatureMap frame_map(1, frames[0].TotalLength());
    frame_map.row(0) = frames[0].Concatenated().transpose();

    const FeatureMap r = nh.Forward(core);
    const FPType unprocessed = HaLoss(r, hi.Forward(core), 30.0, 1.0);
    const FeatureMap ha_out = ha->Infer(frame_map);
    const FPType at_init =
        HaLoss(r, hi.Forward(ha_out.row(0).transpose()), 30.0, 1.0);
    CHECK(at_init == doctest::Approx(unprocessed).epsilon(0.05));
  }

  SUBCASE("unfrozen pathway is a configuration error") {
    auto ha = ExactPassThrough();
    auto emulator = BuildDconnear(TinySpec(), 24);
    SurrogatePathway nh(grid, kFs, MakeProfile("NH"));
    ModelPathway hi(emulator.get(), /*frozen=*/false);
    bool threw = false;
    try {
      TrainHaClosedLoop(ha.get(), &nh, &hi, ToneCorpus(2, 600, 25), TrainConfig{});
    } catch (const std::invalid_argument& e) {
      threw = true;
      CHECK(std::string(e.what()).find("configuration error") != std::string::npos);
    }
    CHECK(threw);
  }

  SUBCASE("frozen model pathway keeps its parameters bit-identical") {
    auto ha = BuildDconnear(TinySpec(), 26);
    ha->InitNearIdentity();
    ModelSpec espec = TinySpec();
    espec.out_channels = 5;
    espec.left_context = 4;
    espec.right_context = 2;
    auto emulator = BuildDconnear(espec, 27);
    std::vector<ArrayXX> before;
    for (Tensor* t : emulator->Params()) before.push_back(t->value);
    SurrogatePathway nh(grid, kFs, MakeProfile("NH"));
    ModelPathway hi(emulator.get(), /*frozen=*/true);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.core_len = 128;
    cfg.seed = 28;
    (void)TrainHaClosedLoop(ha.get(), &nh, &hi, ToneCorpus(2, 600, 29), cfg);
    const auto params = emulator->Params();
    for (size_t i = 0; i < params.size(); ++i) {
      CHECK((params[i]->value == before[i]).all());
      CHECK((params[i]->grad == 0.0).all());
    }
  }

  SUBCASE("same seed twice gives identical trajectories") {
    const auto corpus = ToneCorpus(3, 600, 30);
    auto run_once = [&corpus, this_grid = grid] {
      auto ha = BuildDconnear(TinySpec(), 31);
      ha->InitNearIdentity();
      SurrogatePathway nh(this_grid, kFs, MakeProfile("NH"));
      SurrogatePathway hi(this_grid, kFs, MakeProfile("Slope35-7,0,0"));
      TrainConfig cfg;
      cfg.epochs = 2;
      cfg.core_len = 128;
      cfg.seed = 32;
      return TrainHaClosedLoop(ha.get(), &nh, &hi, corpus, cfg);
    };
    const TrainingRun a = run_once();
    const TrainingRun b = run_once();
    for (size_t e = 0; e < a.train_loss.size(); ++e) {
      CHECK(a.train_loss[e] == b.train_loss[e]);
      CHECK(a.val_loss[e] == b.val_loss[e]);
    }
  }
}

TEST_CASE("closed-loop SE training") {
  const CFGrid grid = CFGrid::LogSpaced(4);
  SUBCASE("clean pairs with a pass-through model are a zero-loss fixed point") {
    auto se = ExactPassThrough();
    SurrogatePathway nh(grid, kFs, MakeProfile("NH"));
    const auto corpus = ToneCorpus(2, 600, 40);
    std::vector<std::pair<AudioBuffer, AudioBuffer>> pairs;
    for (const auto& item : corpus) pairs.emplace_back(item, item);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.core_len = 128;
    cfg.seed = 41;
    const TrainingRun run = TrainSeClosedLoop(se.get(), &nh, pairs, cfg);
    CHECK(run.train_loss[0] == 0.0);
  }
}

TEST_CASE("closed-loop gradient check on a tiny processor") {
  const CFGrid grid = CFGrid::LogSpaced(3);
  ModelSpec s;
  s.memory_blocks = 1;
  s.repeats = 1;
  s.kernel_history = 2;
  s.kernel_future = 1;
  s.hidden_channels = 4;
  s.left_context = 6;
  s.right_context = 3;
  auto ha = BuildDconnear(s, 50);
  CHECK(ha->ParameterCount() <= 200);
  SurrogatePathway nh(grid, kFs, MakeProfile("NH"));
  SurrogatePathway hi(grid, kFs, MakeProfile("Slope35-7,0,0"));
  AudioBuffer tone{Sine(1000.0, kFs, 64 + 9, 0.3), kFs};
  tone = ScaleToSpl(tone, 70.0);
  const FPType err =
      ClosedLoopGradientCheck(ha.get(), &nh, &hi, tone.samples, 30.0, 1.0);
  CHECK(err < 1e-3);
}
