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

#include "aliasfree/audio.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace aliasfree {

namespace {

static_assert(sizeof(float) == 4, "float must be 32-bit for WAV I/O");

void CheckFinite(const ArrayX& samples) {
  if (!samples.allFinite()) {
    throw std::invalid_argument("signal contains NaN or Inf samples");
  }
}

}  // namespace

ArrayX Frame::Concatenated() const {
  ArrayX out(TotalLength());
  out.segment(0, left_context.size()) = left_context;
  out.segment(left_context.size(), core.size()) = core;
  out.segment(left_context.size() + core.size(), right_context.size()) =
      right_context;
  return out;
}

FPType Rms(const AudioBuffer& buffer) {
  if (buffer.samples.size() == 0) {
    throw std::invalid_argument("empty signal");
  }
  return std::sqrt(buffer.samples.square().mean());
}

AudioBuffer ScaleToSpl(const AudioBuffer& buffer, FPType level_db_spl) {
  CheckFinite(buffer.samples);
  const FPType rms = Rms(buffer);
  if (rms <= 0.0) {
    throw std::invalid_argument("silent signal cannot be calibrated");
  }
  const FPType target = kReferencePressurePa * std::pow(10.0, level_db_spl / 20.0);
  AudioBuffer out;
  out.sample_rate = buffer.sample_rate;
  out.samples = buffer.samples * (target / rms);
  return out;
}

std::vector<Frame> Segment(const ArrayX& signal, Index core_len,
                           Index left_len, Index right_len, Index hop) {
  if (core_len <= 0) throw std::invalid_argument("core length must be > 0");
  if (hop <= 0) throw std::invalid_argument("hop must be > 0");
  if (left_len < 0 || right_len < 0) {
    throw std::invalid_argument("context lengths must be >= 0");
  }
  const Index n = signal.size();
  const Index num_frames = (n + hop - 1) / hop;

  // Reads [start, start+len) with zeros outside the signal.
  auto slice = [&](Index start, Index len) {
    ArrayX out = ArrayX::Zero(len);
    const Index lo = std::max<Index>(start, 0);
    const Index hi = std::min<Index>(start + len, n);
    if (hi > lo) out.segment(lo - start, hi - lo) = signal.segment(lo, hi - lo);
    return out;
  };

  std::vector<Frame> frames;
  frames.reserve(static_cast<size_t>(num_frames));
  for (Index k = 0; k < num_frames; ++k) {
    Frame f;
    const Index start = k * hop;
    f.left_context = slice(start - left_len, left_len);
    f.core = slice(start, core_len);
    f.right_context = slice(start + core_len, right_len);
    frames.push_back(std::move(f));
  }
  return frames;
}

ArrayX Sine(FPType freq_hz, FPType sample_rate, Index n, FPType phase) {
  ArrayX out(n);
  const FPType w = 2.0 * kPi * freq_hz / sample_rate;
  for (Index i = 0; i < n; ++i) out[i] = std::sin(w * static_cast<FPType>(i) + phase);
  return out;
}

ArrayX UnitStep(Index n) { return ArrayX::Ones(n); }

namespace {

void PutU32(std::ofstream& os, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

void PutU16(std::ofstream& os, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

uint32_t GetU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t GetU16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void WriteWav(const std::string& path, const AudioBuffer& buffer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  const uint32_t n = static_cast<uint32_t>(buffer.samples.size());
  const uint32_t data_bytes = n * 4;
  const uint32_t rate = static_cast<uint32_t>(buffer.sample_rate);
  os.write("RIFF", 4);
  PutU32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  PutU32(os, 16);
  PutU16(os, 3);  // IEEE float
  PutU16(os, 1);  // mono
  PutU32(os, rate);
  PutU32(os, rate * 4);
  PutU16(os, 4);
  PutU16(os, 32);
  os.write("data", 4);
  PutU32(os, data_bytes);
  for (uint32_t i = 0; i < n; ++i) {
    const float v = static_cast<float>(buffer.samples[i]);
    os.write(reinterpret_cast<const char*>(&v), 4);
  }
  if (!os) throw std::runtime_error("short write: " + path);
}

AudioBuffer ReadWav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file: " + path);
  }
  size_t pos = 12;
  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  AudioBuffer out;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t size = GetU32(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw std::runtime_error("truncated chunk in: " + path);
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw std::runtime_error("bad fmt chunk in: " + path);
      format = GetU16(bytes.data() + body);
      channels = GetU16(bytes.data() + body + 2);
      rate = GetU32(bytes.data() + body + 4);
      bits = GetU16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error("data before fmt in: " + path);
      if (format != 3 || channels != 1 || bits != 32) {
        throw std::runtime_error(
            "unsupported WAV encoding (need 32-bit float mono): " + path);
      }
      const uint32_t n = size / 4;
      out.samples.resize(n);
      for (uint32_t i = 0; i < n; ++i) {
        float v;
        std::memcpy(&v, bytes.data() + body + 4 * i, 4);
        out.samples[i] = static_cast<FPType>(v);
      }
      out.sample_rate = static_cast<FPType>(rate);
      return out;
    }
    pos = body + size + (size & 1);  // chunks are word-aligned
  }
  throw std::runtime_error("no data chunk in: " + path);
}

}  // namespace aliasfree
