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
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "aliasfree/audio.h"
#include "aliasfree/fir.h"
#include "aliasfree/rng.h"
#include "aliasfree/spectrum.h"

using namespace aliasfree;

TEST_CASE("rms basics") {
  AudioBuffer constant{ArrayX::Constant(100, 0.5), 20000.0};
  CHECK(Rms(constant) == doctest::Approx(0.5).epsilon(1e-12));

  AudioBuffer zeros{ArrayX::Zero(64), 20000.0};
  CHECK(Rms(zeros) == 0.0);

  // Unit-amplitude sine over an integer number of periods.
  AudioBuffer sine{Sine(1000.0, 20000.0, 20000), 20000.0};
  CHECK(std::abs(Rms(sine) - 1.0 / std::sqrt(2.0)) < 1e-9);

  AudioBuffer empty;
  CHECK_THROWS_WITH_AS(Rms(empty), "empty signal", std::invalid_argument);
}

TEST_CASE("scale_to_spl calibration") {
  Rng rng(7);
  AudioBuffer buf{rng.NormalArray(4096), 20000.0};

  SUBCASE("70 dB SPL target") {
    const AudioBuffer out = ScaleToSpl(buf, 70.0);
    const FPType target = 2e-5 * std::pow(10.0, 3.5);
    CHECK(std::abs(Rms(out) - target) / target < 1e-9);
    CHECK(out.samples.size() == buf.samples.size());
    // Pure rescaling: sample ratios constant.
    const FPType ratio = out.samples[0] / buf.samples[0];
    for (Index i = 1; i < buf.size(); i += 97) {
      CHECK(out.samples[i] / buf.samples[i] == doctest::Approx(ratio).epsilon(1e-12));
    }
  }

  SUBCASE("idempotent at matching level") {
    const AudioBuffer once = ScaleToSpl(buf, 55.0);
    const AudioBuffer twice = ScaleToSpl(once, 55.0);
    for (Index i = 0; i < once.size(); i += 65) {
      CHECK(std::abs(twice.samples[i] - once.samples[i]) <=
            1e-12 * std::abs(once.samples[i]));
    }
  }

  SUBCASE("0 dB gives the reference pressure") {
    CHECK(Rms(ScaleToSpl(buf, 0.0)) == doctest::Approx(2e-5).epsilon(1e-9));
  }

  SUBCASE("silent input rejected") {
    AudioBuffer silent{ArrayX::Zero(128), 20000.0};
    CHECK_THROWS_WITH_AS(ScaleToSpl(silent, 70.0),
                         "silent signal cannot be calibrated",
                         std::invalid_argument);
  }
}

TEST_CASE("segment windows and contexts") {
  SUBCASE("two 2048 frames with 256 contexts") {
    Rng rng(3);
    const ArrayX signal = rng.NormalArray(4096);
    const auto frames = Segment(signal, 2048, 256, 256, 2048);
    REQUIRE(frames.size() == 2);
    for (const Frame& f : frames) CHECK(f.TotalLength() == 2560);
    CHECK((frames[0].left_context == 0.0).all());
    CHECK((frames[0].core == signal.segment(0, 2048)).all());
    CHECK((frames[0].right_context == signal.segment(2048, 256)).all());
    CHECK((frames[1].left_context == signal.segment(2048 - 256, 256)).all());
    CHECK((frames[1].right_context == 0.0).all());
  }

  SUBCASE("signal of exactly one core") {
    const ArrayX signal = ArrayX::Ones(100);
    const auto frames = Segment(signal, 100, 20, 30, 100);
    REQUIRE(frames.size() == 1);
    CHECK((frames[0].left_context == 0.0).all());
    CHECK((frames[0].right_context == 0.0).all());
    CHECK(frames[0].Concatenated().size() == 150);
  }

  SUBCASE("ANF-sized window arithmetic") {
    const ArrayX signal = ArrayX::Ones(9000);
    const auto frames = Segment(signal, 8192, 7936, 256, 8192);
    REQUIRE(frames.size() == 2);
    CHECK(frames[0].TotalLength() == 16384);
  }

  SUBCASE("core concatenation reconstructs the signal") {
    Rng rng(11);
    for (const Index n : {37, 100, 2048, 5000}) {
      const ArrayX signal = rng.NormalArray(n);
      const Index core = 64;
      const auto frames = Segment(signal, core, 16, 8, core);
      ArrayX rebuilt = ArrayX::Zero(static_cast<Index>(frames.size()) * core);
      for (size_t k = 0; k < frames.size(); ++k) {
        rebuilt.segment(static_cast<Index>(k) * core, core) = frames[k].core;
      }
      CHECK((rebuilt.head(n) == signal).all());
      CHECK((rebuilt.tail(rebuilt.size() - n) == 0.0).all());
    }
  }

  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(Segment(ArrayX::Ones(10), 0, 0, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(Segment(ArrayX::Ones(10), 4, 0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(Segment(ArrayX::Ones(10), 4, -1, 0, 4), std::invalid_argument);
  }
}

TEST_CASE("magnitude spectrum conventions") {
  SUBCASE("unit impulse is flat") {
    ArrayX x = ArrayX::Zero(256);
    x[0] = 1.0;
    const Spectrum s = MagnitudeSpectrum({x, 20000.0});
    for (Index k = 1; k < s.size() - 1; ++k) {
      CHECK(s.magnitudes[k] ==
            doctest::Approx(std::sqrt(2.0) / 256).epsilon(1e-9));
    }
  }

  SUBCASE("DC signal hits only bin zero") {
    const Spectrum s = MagnitudeSpectrum({ArrayX::Constant(128, 3.25), 20000.0});
    CHECK(s.magnitudes[0] == doctest::Approx(3.25).epsilon(1e-12));
    CHECK(s.bin_freqs[0] == 0.0);
    for (Index k = 1; k < s.size(); ++k) CHECK(s.magnitudes[k] < 1e-12);
  }

  SUBCASE("bin-centered sine reads its RMS") {
    const Spectrum s = MagnitudeSpectrum({Sine(1000.0, 20000.0, 20000), 20000.0});
    const Index bin = s.NearestBin(1000.0);
    CHECK(s.bin_freqs[bin] == doctest::Approx(1000.0));
    CHECK(s.magnitudes[bin] ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    FPType rest = 0.0;
    for (Index k = 0; k < s.size(); ++k) {
      if (k != bin) rest = std::max(rest, s.magnitudes[k]);
    }
    CHECK(rest < 1e-10);
  }

  SUBCASE("Parseval consistency") {
    Rng rng(19);
    for (const Index n : {100, 101, 4096, 65536}) {
      const ArrayX x = rng.NormalArray(n);
      const Spectrum s = MagnitudeSpectrum({x, 20000.0});
      const FPType mean_power = x.square().mean();
      const FPType spec_power = s.magnitudes.square().sum();
      CHECK(std::abs(mean_power - spec_power) / mean_power < 1e-6);
    }
  }

  SUBCASE("too short input") {
    CHECK_THROWS_AS(MagnitudeSpectrum({ArrayX::Ones(1), 20000.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("windowed-sinc lowpass design") {
  SUBCASE("symmetry is exact and DC gain unity") {
    const ArrayX h = DesignLowpass(0.5, 63);
    REQUIRE(h.size() == 63);
    for (int i = 0; i < 63; ++i) CHECK(h[i] == h[62 - i]);
    CHECK(h.sum() >= 0.999);
    CHECK(h.sum() <= 1.001);
  }

  SUBCASE("-6 dB point lands at the cutoff") {
    for (const FPType cutoff : {0.25, 0.5, 0.8}) {
      const ArrayX h = DesignLowpass(cutoff, 63);
      const int grid = 4096;
      const ArrayX mag = FirMagnitudeResponse(h, grid);
      // First grid point at or below half gain.
      int crossing = grid - 1;
      for (int g = 0; g < grid; ++g) {
        if (mag[g] <= 0.5) {
          crossing = g;
          break;
        }
      }
      const FPType expected = cutoff * static_cast<FPType>(grid - 1);
      CHECK(std::abs(static_cast<FPType>(crossing) - expected) <= 1.0);
    }
  }

  SUBCASE("near-unity cutoff is near-allpass") {
    const ArrayX h = DesignLowpass(0.999, 63);
    const ArrayX mag = FirMagnitudeResponse(h, 512);
    for (int g = 0; g < 480; ++g) CHECK(mag[g] > 0.9);
  }

  SUBCASE("stopband attenuation measured on white noise") {
    Rng rng(23);
    const ArrayX noise = rng.NormalArray(32768);
    const ArrayX h = DesignLowpass(0.5, 127);
    const ArrayX filtered = FirFilterSameLength(noise, h);
    const Spectrum in_spec = MagnitudeSpectrum({noise, 20000.0});
    const Spectrum out_spec = MagnitudeSpectrum({filtered, 20000.0});
    auto band_db = [](const Spectrum& s, FPType lo, FPType hi) {
      FPType sum = 0.0;
      for (Index k = 0; k < s.size(); ++k) {
        if (s.bin_freqs[k] >= lo && s.bin_freqs[k] < hi) {
          sum += s.magnitudes[k] * s.magnitudes[k];
        }
      }
      return 10.0 * std::log10(sum);
    };
    const FPType pass_ratio =
        band_db(out_spec, 0, 0.45 * 10000) - band_db(in_spec, 0, 0.45 * 10000);
    const FPType stop_ratio = band_db(out_spec, 0.55 * 10000, 10000) -
                              band_db(in_spec, 0.55 * 10000, 10000);
    CHECK(pass_ratio > -1.0);           // passband roughly unity
    CHECK(stop_ratio < pass_ratio - 40.0);
  }

  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(DesignLowpass(0.5, 64), std::invalid_argument);
    CHECK_THROWS_AS(DesignLowpass(0.0, 63), std::invalid_argument);
    CHECK_THROWS_AS(DesignLowpass(1.0, 63), std::invalid_argument);
  }
}

TEST_CASE("zero-phase FIR application and adjoint") {
  Rng rng(5);
  const ArrayX x = rng.NormalArray(200);
  const ArrayX h = DesignLowpass(0.4, 31);

  SUBCASE("pure delay compensation") {
    ArrayX delta = ArrayX::Zero(31);
    delta[15] = 1.0;  // identity kernel for a 31-tap linear-phase filter
    const ArrayX y = FirFilterSameLength(x, delta);
    CHECK((y == x).all());
  }

  SUBCASE("adjoint identity <a, F x> == <F* a, x>") {
    const ArrayX a = rng.NormalArray(200);
    const FPType lhs = (a * FirFilterSameLength(x, h)).sum();
    const FPType rhs = (FirFilterSameLengthAdjoint(a, h) * x).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("spectrum csv export") {
  const Spectrum s = MagnitudeSpectrum({Sine(1000.0, 20000.0, 2000), 20000.0});
  const std::string path =
      (std::filesystem::temp_directory_path() / "aliasfree_spectrum.csv").string();
  WriteSpectrumCsv(path, s);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "freq_hz,magnitude");
  Index rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == s.size());
  std::filesystem::remove(path);
}

TEST_CASE("wav round trip preserves float32 samples") {
  Rng rng(31);
  AudioBuffer buf{rng.NormalArray(777) * 0.05, 20000.0};
  const std::string path =
      (std::filesystem::temp_directory_path() / "aliasfree_test.wav").string();
  WriteWav(path, buf);
  const AudioBuffer back = ReadWav(path);
  REQUIRE(back.samples.size() == buf.samples.size());
  CHECK(back.sample_rate == 20000.0);
  for (Index i = 0; i < buf.size(); ++i) {
    CHECK(back.samples[i] == static_cast<FPType>(static_cast<float>(buf.samples[i])));
  }
  std::filesystem::remove(path);
}
