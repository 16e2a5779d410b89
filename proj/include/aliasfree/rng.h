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

#ifndef ALIASFREE_RNG_H_
#define ALIASFREE_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "aliasfree/types.h"

namespace aliasfree {

// Seeded generator with hand-rolled distributions. std::mt19937_64 is
// specified bit-exactly by the standard; the distributions in <random> are
// not, so we draw doubles ourselves to keep runs byte-reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  FPType Uniform() {
    return static_cast<FPType>(engine_() >> 11) * 0x1.0p-53;
  }

  FPType Uniform(FPType lo, FPType hi) { return lo + (hi - lo) * Uniform(); }

  // Inclusive bounds. Modulo bias is irrelevant at the ranges used here.
  int UniformInt(int lo, int hi) {
    return lo + static_cast<int>(engine_() % static_cast<uint64_t>(hi - lo + 1));
  }

  // Standard normal via Box-Muller.
  FPType Normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    FPType u1 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    const FPType u2 = Uniform();
    const FPType r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  ArrayX UniformArray(Index n, FPType lo, FPType hi) {
    ArrayX out(n);
    for (Index i = 0; i < n; ++i) out[i] = Uniform(lo, hi);
    return out;
  }

  ArrayXX UniformArray(Index rows, Index cols, FPType lo, FPType hi) {
    ArrayXX out(rows, cols);
    // Column-major fill order, fixed for reproducibility.
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) out(r, c) = Uniform(lo, hi);
    return out;
  }

  ArrayX NormalArray(Index n) {
    ArrayX out(n);
    for (Index i = 0; i < n; ++i) out[i] = Normal();
    return out;
  }

  template <typename T>
  void Shuffle(std::vector<T>* items) {
    for (size_t i = items->size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(
          engine_() % static_cast<uint64_t>(i));
      std::swap((*items)[i - 1], (*items)[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  FPType spare_ = 0.0;
};

}  // namespace aliasfree

#endif  // ALIASFREE_RNG_H_
