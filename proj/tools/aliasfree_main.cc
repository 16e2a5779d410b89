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

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aliasfree/analysis.h"
#include "aliasfree/audio.h"
#include "aliasfree/config.h"
#include "aliasfree/fir.h"
#include "aliasfree/layers.h"
#include "aliasfree/model.h"
#include "aliasfree/surrogates.h"
#include "aliasfree/training.h"

namespace aliasfree {
namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> sets;
  long long seed = -1;
};

RunConfig BuildConfig(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = RunConfig::FromFile(args.config_path);
  for (const std::string& s : args.sets) cfg.ApplyOverride(s);
  if (args.seed >= 0) cfg.Set("seed", std::to_string(args.seed));
  if (!args.out_dir.empty()) cfg.Set("out", args.out_dir);
  return cfg;
}

std::string ResolveRunDir(const RunConfig& cfg, const std::string& command) {
  std::string dir = cfg.Str("out", "");
  if (dir.empty()) {
    std::string root = "runs";
    if (const char* env = std::getenv("ALIASFREE_OUT")) {
      if (*env) root = env;
    }
    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_utc);
    dir = root + "/" + command + "-" + cfg.Hash() + "-" + stamp;
  }
  fs::create_directories(dir);
  return dir;
}

ModelSpec SpecFromConfig(const RunConfig& cfg, int default_c_out) {
  ModelSpec s;
  s.memory_blocks = cfg.Int("m", 2);
  s.repeats = cfg.Int("r", 1);
  s.kernel_history = cfg.Int("k1", 8);
  s.kernel_future = cfg.Int("k2", 0);
  s.hidden_channels = cfg.Int("h", 16);
  s.in_channels = cfg.Int("c_in", 1);
  s.out_channels = cfg.Int("c_out", default_c_out);
  s.act_hidden = ActivationFromName(cfg.Str("act_hidden", "tanh"));
  s.act_out = ActivationFromName(cfg.Str("act_out", "tanh"));
  s.left_context = cfg.Int("l_l", 64);
  s.right_context = cfg.Int("l_r", 16);
  return s;
}

std::unique_ptr<Model> ModelFromConfig(const RunConfig& cfg, int default_c_out,
                                       uint64_t seed) {
  const std::string kind = cfg.Str("model", "dconnear");
  if (kind == "dconnear") {
    return BuildDconnear(SpecFromConfig(cfg, default_c_out), seed);
  }
  if (kind == "anf3") {
    ModelSpec shared = SpecFromConfig(cfg, default_c_out);
    shared.act_hidden = ActivationFromName(cfg.Str("act_hidden", "relu"));
    shared.act_out = shared.act_hidden;
    ModelSpec branch = shared;
    branch.memory_blocks = cfg.Int("branch_m", shared.memory_blocks);
    branch.kernel_history = cfg.Int("branch_k1", shared.kernel_history);
    branch.kernel_future = cfg.Int("branch_k2", shared.kernel_future);
    branch.out_channels = 1;
    branch.left_context = 0;
    branch.right_context = 0;
    return BuildAnfThreeBranch(shared, branch, seed);
  }
  if (kind.rfind("baseline:", 0) == 0) {
    AutoencoderConfig ac;
    ac.depth = cfg.Int("depth", 4);
    ac.upsampling = UpsamplingFromName(kind.substr(9));
    ac.antialias = cfg.Flag("antialias", false);
    ac.base_channels = cfg.Int("base_channels", 16);
    ac.kernel = cfg.Int("kernel", 16);
    ac.out_channels = default_c_out;
    return BuildAutoencoder(ac, seed);
  }
  throw ConfigError("unknown model '" + kind +
                    "'; valid: dconnear, anf3, baseline:transposed, "
                    "baseline:subpixel, baseline:nearest");
}

std::vector<AudioBuffer> LoadCorpusAudio(const std::string& dir) {
  std::vector<AudioBuffer> out;
  for (const ManifestEntry& e : ReadManifest(dir)) {
    out.push_back(ReadWav(dir + "/" + e.file));
  }
  if (out.empty()) throw ConfigError("corpus is empty: " + dir);
  return out;
}

// Zero-padded contexts on both sides, matching the training frame layout.
ArrayX ProcessUtterance(const Model& model, const ArrayX& x) {
  FeatureMap in(1, model.LeftContext() + x.size() + model.RightContext());
  in.setZero();
  in.block(0, model.LeftContext(), 1, x.size()) = x.transpose();
  return model.Infer(in).row(0).transpose();
}

// --- gen-corpus -----------------------------------------------------------

int CmdGenCorpus(const RunConfig& cfg) {
  cfg.CheckKeys({"out", "seed", "count", "duration_s", "sample_rate",
                 "level_db", "make_pairs", "snr_min_db", "snr_max_db"});
  const std::string dir = ResolveRunDir(cfg, "corpus");
  CorpusConfig cc;
  cc.count = cfg.Int("count", 20);
  if (cc.count < 0) throw ConfigError("count must be >= 0");
  cc.duration_s = cfg.Real("duration_s", 0.5);
  cc.sample_rate = cfg.Real("sample_rate", kDefaultSampleRateHz);
  cc.seed = cfg.Seed(1);
  cc.level_db = cfg.Real("level_db", 70.0);
  cc.make_pairs = cfg.Flag("make_pairs", false);
  cc.snr_min_db = cfg.Real("snr_min_db", -5.0);
  cc.snr_max_db = cfg.Real("snr_max_db", 5.0);

  const std::vector<CorpusItem> items = GenerateCorpus(cc);
  std::vector<ManifestEntry> manifest;
  char name[64];
  for (size_t i = 0; i < items.size(); ++i) {
    const CorpusItem& item = items[i];
    std::snprintf(name, sizeof(name), "clean_%03zu.wav", i);
    const std::string clean_name = name;
    WriteWav(dir + "/" + clean_name, item.clean);
    ManifestEntry e;
    e.kind = item.kind;
    e.freq_hz = item.freq_hz;
    e.level_db = cc.level_db;
    if (cc.make_pairs) {
      std::snprintf(name, sizeof(name), "noisy_%03zu.wav", i);
      WriteWav(dir + "/" + name, item.noisy);
      e.file = name;
      e.pair_file = clean_name;
      e.snr_db = item.snr_db;
    } else {
      e.file = clean_name;
    }
    manifest.push_back(std::move(e));
  }
  WriteManifest(dir, manifest);
  cfg.WriteResolved(dir + "/resolved.cfg");
  std::printf("wrote %zu items to %s\n", items.size(), dir.c_str());
  return 0;
}

// --- train ------------------------------------------------------------------

int CmdTrain(const RunConfig& cfg) {
  cfg.CheckKeys({"out",        "seed",      "task",       "corpus",
                 "target",     "n_cf",      "profile",    "model",
                 "m",          "r",         "k1",         "k2",
                 "h",          "c_in",      "c_out",      "act_hidden",
                 "act_out",    "l_l",       "l_r",        "branch_m",
                 "branch_k1",  "branch_k2", "depth",      "base_channels",
                 "kernel",     "antialias", "epochs",     "lr",
                 "batch",      "patience",  "alpha",      "beta",
                 "val_fraction", "core_len", "sample_rate", "init"});
  const std::string task = cfg.RequiredStr("task");
  if (task != "emulator" && task != "ha" && task != "se") {
    throw ConfigError("unknown task '" + task +
                      "'; valid tasks: emulator, ha, se");
  }
  const std::string corpus = cfg.RequiredStr("corpus");
  const std::string dir = ResolveRunDir(cfg, "train");
  const uint64_t seed = cfg.Seed(1);
  const FPType fs = cfg.Real("sample_rate", kDefaultSampleRateHz);

  TrainConfig tc;
  tc.lr = cfg.Real("lr", 1e-3);
  tc.epochs = cfg.Int("epochs", 10);
  tc.batch = cfg.Int("batch", 8);
  tc.patience = cfg.Int("patience", 5);
  tc.seed = seed;
  tc.alpha = cfg.Real("alpha", 30.0);
  tc.beta = cfg.Real("beta", 1.0);
  tc.val_fraction = cfg.Real("val_fraction", 0.1);
  tc.core_len = cfg.Int("core_len", 512);

  TrainingRun run;
  std::unique_ptr<Model> model;
  if (task == "emulator") {
    EmulatorTask et;
    et.target = EmulatorTargetFromName(cfg.Str("target", "cochlea"));
    et.grid = CFGrid::LogSpaced(cfg.Int("n_cf", 5));
    et.sample_rate = fs;
    const int default_c_out =
        et.target == EmulatorTarget::kCochlea ? static_cast<int>(et.grid.size()) : 1;
    model = ModelFromConfig(cfg, default_c_out, seed);
    run = TrainEmulator(model.get(), et, LoadCorpusAudio(corpus), tc);
  } else if (task == "ha") {
    model = ModelFromConfig(cfg, 1, seed);
    if (cfg.Str("init", "near_identity") == "near_identity") {
      if (auto* d = dynamic_cast<DCoNNear*>(model.get())) d->InitNearIdentity();
    }
    const CFGrid grid = CFGrid::LogSpaced(cfg.Int("n_cf", 21));
    SurrogatePathway nh(grid, fs, MakeProfile("NH"));
    SurrogatePathway hi(grid, fs,
                        MakeProfile(cfg.Str("profile", "Slope35-7,0,0")));
    run = TrainHaClosedLoop(model.get(), &nh, &hi, LoadCorpusAudio(corpus), tc);
  } else {
    model = ModelFromConfig(cfg, 1, seed);
    if (cfg.Str("init", "near_identity") == "near_identity") {
      if (auto* d = dynamic_cast<DCoNNear*>(model.get())) d->InitNearIdentity();
    }
    const CFGrid grid = CFGrid::LogSpaced(cfg.Int("n_cf", 21));
    SurrogatePathway nh(grid, fs, MakeProfile("NH"));
    std::vector<std::pair<AudioBuffer, AudioBuffer>> pairs;
    for (const ManifestEntry& e : ReadManifest(corpus)) {
      if (e.pair_file.empty()) continue;
      pairs.emplace_back(ReadWav(corpus + "/" + e.file),
                         ReadWav(corpus + "/" + e.pair_file));
    }
    if (pairs.empty()) {
      throw ConfigError("task se needs a paired corpus (make_pairs = 1)");
    }
    run = TrainSeClosedLoop(model.get(), &nh, pairs, tc);
  }

  SaveModelBundle(dir + "/checkpoint", model.get());
  WriteTrainingLogCsv(dir + "/log.csv", run);
  cfg.WriteResolved(dir + "/resolved.cfg");
  std::printf("task %s: %d epochs, final val loss %.6g -> %s\n", task.c_str(),
              tc.epochs, run.val_loss.empty() ? 0.0 : run.val_loss.back(),
              dir.c_str());
  return 0;
}

// --- probe -----------------------------------------------------------------

int CmdProbe(const RunConfig& cfg) {
  cfg.CheckKeys({"out",       "seed",          "system",   "probe",
                 "freq_hz",   "level_db",      "duration_s", "sample_rate",
                 "depth",     "antialias",     "pad",      "n_cf",
                 "m",         "r",             "k1",       "k2",
                 "h",         "c_in",          "c_out",    "act_hidden",
                 "act_out",   "l_l",           "l_r",      "base_channels",
                 "kernel",    "upsampler",     "factor",   "length"});
  const std::string dir = ResolveRunDir(cfg, "probe");
  const std::string probe = cfg.Str("probe", "tone");
  const FPType fs = cfg.Real("sample_rate", kDefaultSampleRateHz);
  const uint64_t seed = cfg.Seed(1);

  if (probe == "aliasing") {
    const auto result = AliasingProbe(cfg.Int("depth", 8),
                                      cfg.Flag("antialias", false), fs);
    WriteReport(dir + "/report.txt", result.report);
    WriteSpectrumDbCsv(dir + "/spectrum_db.csv", result.report.spectrum);
    cfg.WriteResolved(dir + "/resolved.cfg");
    std::printf("sub-500 Hz energy: %.2f dB\n", result.sub500_energy_db);
    return 0;
  }
  if (probe == "imaging") {
    const int factor = cfg.Int("factor", 2);
    const std::string upsampler = cfg.Str("upsampler", "nearest");
    std::function<ArrayX(const ArrayX&)> up;
    if (upsampler == "nearest") {
      up = [factor](const ArrayX& x) {
        FeatureMap m(1, x.size());
        m.row(0) = x.transpose();
        return ArrayX(NearestUpsample(m, factor).row(0).transpose());
      };
    } else if (upsampler == "sinc") {
      up = [factor](const ArrayX& x) { return SincInterpolate(x, factor); };
    } else {
      throw ConfigError("unknown upsampler '" + upsampler +
                        "'; valid: nearest, sinc");
    }
    const FPType mirror_db =
        ImagingProbe(up, factor, cfg.Real("freq_hz", 500.0), fs, 20000);
    std::ofstream os(dir + "/imaging.txt");
    os << "upsampler " << upsampler << "\n"
       << "factor " << factor << "\n"
       << "mirror_band_energy_db " << mirror_db << "\n";
    cfg.WriteResolved(dir + "/resolved.cfg");
    std::printf("mirror band energy: %.2f dB\n", mirror_db);
    return 0;
  }
  if (probe != "tone" && probe != "step") {
    throw ConfigError("unknown probe '" + probe +
                      "'; valid: tone, step, aliasing, imaging");
  }

  const std::string system_name = cfg.Str("system", "identity");
  ProbeSystem system;
  std::unique_ptr<Model> model;
  std::unique_ptr<CochleaStage> cochlea;
  if (system_name == "identity") {
    system = IdentitySystem();
  } else if (system_name == "cochlea") {
    cochlea = std::make_unique<CochleaStage>(
        CFGrid::LogSpaced(cfg.Int("n_cf", 21)), fs, MakeProfile("NH"));
    system = CochleaSystem(cochlea.get());
  } else if (system_name == "dconnear" ||
             system_name.rfind("baseline:", 0) == 0) {
    RunConfig model_cfg = cfg;
    model_cfg.Set("model", system_name == "dconnear" ? "dconnear" : system_name);
    model = ModelFromConfig(model_cfg, 1, seed);
    Index multiple = 1;
    if (auto* ae = dynamic_cast<Autoencoder*>(model.get())) {
      multiple = Index(1) << ae->config().depth;
    }
    system = ModelProbeSystem(model.get(), cfg.Int("pad", 2048), multiple);
  } else if (system_name.rfind("checkpoint:", 0) == 0) {
    model = LoadModelBundle(system_name.substr(11));
    Index multiple = 1;
    if (auto* ae = dynamic_cast<Autoencoder*>(model.get())) {
      multiple = Index(1) << ae->config().depth;
    }
    system = ModelProbeSystem(model.get(), cfg.Int("pad", 2048), multiple);
  } else {
    throw ConfigError("unknown system '" + system_name +
                      "'; valid: identity, cochlea, dconnear, baseline:KIND, "
                      "checkpoint:PREFIX");
  }

  ArtifactReport report;
  if (probe == "tone") {
    report = ToneProbe(system, cfg.Real("freq_hz", 1000.0),
                       cfg.Real("level_db", 70.0), cfg.Real("duration_s", 1.0),
                       fs);
  } else {
    report = StepProbe(system, cfg.Real("level_db", 70.0), fs,
                       cfg.Int("length", 4096));
  }
  WriteReport(dir + "/report.txt", report);
  WriteSpectrumDbCsv(dir + "/spectrum_db.csv", report.spectrum);
  cfg.WriteResolved(dir + "/resolved.cfg");
  std::printf("%s probe of %s: thd %.2f dB, %zu peaks\n", probe.c_str(),
              system_name.c_str(), report.thd_db, report.peak_freqs_hz.size());
  return 0;
}

// --- metrics ----------------------------------------------------------------

int CmdMetrics(const RunConfig& cfg) {
  cfg.CheckKeys({"out", "seed", "corpus", "checkpoint", "profile", "n_cf",
                 "levels", "sample_rate", "export_excitation",
                 "export_ratelevel", "export_synchrony", "cf_hz"});
  const std::string dir = ResolveRunDir(cfg, "metrics");
  const std::string corpus = cfg.RequiredStr("corpus");
  const FPType fs = cfg.Real("sample_rate", kDefaultSampleRateHz);
  const CFGrid grid = CFGrid::LogSpaced(cfg.Int("n_cf", 21));
  const HearingProfile hi_profile =
      MakeProfile(cfg.Str("profile", "Slope35-7,0,0"));
  AuditoryChain nh(grid, fs, MakeProfile("NH"));
  AuditoryChain hi(grid, fs, hi_profile);

  std::unique_ptr<Model> ha;
  if (cfg.Has("checkpoint")) ha = LoadModelBundle(cfg.RequiredStr("checkpoint"));

  std::vector<FPType> levels;
  {
    std::string spec = cfg.Str("levels", "40,50,60,70");
    std::replace(spec.begin(), spec.end(), ',', ' ');
    std::istringstream ss(spec);
    FPType v;
    while (ss >> v) levels.push_back(v);
  }

  const std::vector<AudioBuffer> data = LoadCorpusAudio(corpus);
  std::ofstream os(dir + "/nrmse.csv");
  os << "level_db,nrmse_unprocessed,nrmse_processed\n";
  for (const FPType level : levels) {
    FPType sum_unproc = 0.0, sum_proc = 0.0;
    for (const AudioBuffer& item : data) {
      const AudioBuffer calibrated = ScaleToSpl(item, level);
      const ArrayX p_nh = nh.Forward(calibrated.samples).colwise().sum().transpose();
      const ArrayX p_unproc =
          hi.Forward(calibrated.samples).colwise().sum().transpose();
      sum_unproc += Nrmse(p_nh, p_unproc);
      if (ha) {
        const ArrayX processed = ProcessUtterance(*ha, calibrated.samples);
        const ArrayX p_proc = hi.Forward(processed).colwise().sum().transpose();
        sum_proc += Nrmse(p_nh, p_proc);
      } else {
        sum_proc = sum_unproc;
      }
    }
    char line[96];
    std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g\n", level,
                  sum_unproc / static_cast<FPType>(data.size()),
                  sum_proc / static_cast<FPType>(data.size()));
    os << line;
  }
  os.close();

  if (cfg.Flag("export_excitation", false)) {
    CochleaStage stage(grid, fs, MakeProfile("NH"));
    const auto patterns = MeasureExcitationPatterns(
        [&stage](const AudioBuffer& b) { return stage.Forward(b.samples); },
        grid, {500.0, 1000.0, 2000.0},
        {10, 20, 30, 40, 50, 60, 70, 80, 90}, fs);
    WriteExcitationCsv(dir + "/excitation.csv", patterns);
  }
  if (cfg.Flag("export_ratelevel", false)) {
    std::vector<FPType> rl_levels;
    for (int l = 0; l <= 100; l += 10) rl_levels.push_back(l);
    const auto curves =
        MeasureRateLevel(cfg.Real("cf_hz", 3972.7), rl_levels, fs, MakeProfile("NH"));
    WriteRateLevelCsv(dir + "/rate_level.csv", curves);
  }
  if (cfg.Flag("export_synchrony", false)) {
    std::vector<FPType> sl_levels;
    for (int l = 0; l <= 100; l += 10) sl_levels.push_back(l);
    const auto curves = MeasureSynchronyLevel(cfg.Real("cf_hz", 3972.7), 100.0,
                                              sl_levels, fs, MakeProfile("NH"));
    WriteSynchronyCsv(dir + "/synchrony.csv", curves);
  }
  cfg.WriteResolved(dir + "/resolved.cfg");
  std::printf("metrics over %zu items at %zu levels -> %s\n", data.size(),
              levels.size(), dir.c_str());
  return 0;
}

// --- bench ------------------------------------------------------------------

int CmdBench(const RunConfig& cfg) {
  cfg.CheckKeys({"out", "seed", "checkpoint", "preset", "frame_len",
                 "n_frames", "sample_rate"});
  const std::string dir = ResolveRunDir(cfg, "bench");
  const int n_frames = cfg.Int("n_frames", 100);
  if (n_frames <= 0) throw ConfigError("no frames");
  const FPType fs = cfg.Real("sample_rate", kDefaultSampleRateHz);

  std::unique_ptr<Model> model;
  if (cfg.Has("checkpoint")) {
    model = LoadModelBundle(cfg.RequiredStr("checkpoint"));
  } else {
    const std::string preset = cfg.Str("preset", "tiny");
    if (preset == "tiny") {
      ModelSpec s;
      s.memory_blocks = 2;
      s.kernel_history = 8;
      s.hidden_channels = 8;
      model = BuildDconnear(s, cfg.Seed(1));
    } else if (preset == "cochlear_table1") {
      model = BuildDconnear(TableSpecCochlear(), cfg.Seed(1));
    } else if (preset == "ihc_table1") {
      model = BuildDconnear(TableSpecIhc(), cfg.Seed(1));
    } else if (preset == "ha_table1") {
      model = BuildDconnear(TableSpecHa(), cfg.Seed(1));
    } else {
      throw ConfigError("unknown preset '" + preset +
                        "'; valid: tiny, cochlear_table1, ihc_table1, "
                        "ha_table1");
    }
  }

  const BenchResult result =
      RtfBench(*model, cfg.Int("frame_len", 512), n_frames, fs);
  std::ofstream os(dir + "/bench.txt");
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "frame_len %ld\nn_frames %d\nframe_ms %.4f\nrtf %.4f\n"
                "hardware %s\n",
                static_cast<long>(result.frame_len), result.n_frames,
                result.mean_frame_ms, result.rtf, result.hardware.c_str());
  os << buf;
  os.close();
  cfg.WriteResolved(dir + "/resolved.cfg");
  std::printf("frame_ms %.4f rtf %.4f (%s)\n", result.mean_frame_ms, result.rtf,
              result.hardware.c_str());
  return 0;
}

int Run(int argc, char** argv) {
  CLI::App app{"aliasfree: artifact-free 1-D convolutional audio toolkit"};
  app.require_subcommand(1);

  struct SubSpec {
    std::string name, help;
    int (*fn)(const RunConfig&);
  };
  const std::vector<SubSpec> subs = {
      {"gen-corpus", "generate a calibrated desk-scale corpus", &CmdGenCorpus},
      {"train", "train emulators or closed-loop processors", &CmdTrain},
      {"probe", "tone/step/aliasing/imaging artifact probes", &CmdProbe},
      {"metrics", "NRMSE tables and auditory-property exports", &CmdMetrics},
      {"bench", "real-time factor measurement", &CmdBench},
  };
  std::vector<CommonArgs> args(subs.size());
  std::vector<CLI::App*> apps;
  for (size_t i = 0; i < subs.size(); ++i) {
    CLI::App* sub = app.add_subcommand(subs[i].name, subs[i].help);
    sub->add_option("--config", args[i].config_path, "config file (key = value)");
    sub->add_option("--seed", args[i].seed, "seed override");
    sub->add_option("--out", args[i].out_dir, "output directory (exact)");
    sub->add_option("--set", args[i].sets, "key=value override")
        ->take_all();
    apps.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  for (size_t i = 0; i < subs.size(); ++i) {
    if (apps[i]->parsed()) {
      try {
        return subs[i].fn(BuildConfig(args[i]));
      } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }
  }
  return 1;
}

}  // namespace
}  // namespace aliasfree

int main(int argc, char** argv) { return aliasfree::Run(argc, argv); }
