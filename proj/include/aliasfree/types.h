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

#ifndef ALIASFREE_TYPES_H_
#define ALIASFREE_TYPES_H_

#include <Eigen/Dense>

namespace aliasfree {

using FPType = double;
using Index = Eigen::Index;

using ArrayX = Eigen::Array<FPType, Eigen::Dynamic, 1>;
using ArrayXX = Eigen::Array<FPType, Eigen::Dynamic, Eigen::Dynamic>;
using VectorX = Eigen::Matrix<FPType, Eigen::Dynamic, 1>;
using MatrixX = Eigen::Matrix<FPType, Eigen::Dynamic, Eigen::Dynamic>;

// Feature maps are channels x time: row c is one channel's time series.
using FeatureMap = ArrayXX;

inline constexpr FPType kPi = 3.14159265358979323846;
inline constexpr FPType kReferencePressurePa = 2e-5;
inline constexpr FPType kDefaultSampleRateHz = 20000.0;

}  // namespace aliasfree

#endif  // ALIASFREE_TYPES_H_
