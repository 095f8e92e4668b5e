// Copyright 2026 The Survey DP Authors.
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

#ifndef SURVEY_DP_RANDOM_H_
#define SURVEY_DP_RANDOM_H_

#include <cstdint>
#include <random>

namespace survey_dp {

// All randomness in the library flows through explicitly passed engines so
// that a run is reproducible from its seed.
using Rng = std::mt19937_64;

// Uniform draw on the open interval (0, 1). Never returns 0 or 1.
double UniformOpen01(Rng& rng);

// Uniform integer in [0, n). n must be positive.
uint64_t UniformIndex(Rng& rng, uint64_t n);

// Bernoulli(p) draw; p is clamped to [0, 1].
bool Bernoulli(Rng& rng, double p);

uint64_t SplitMix64(uint64_t x);

// Independent substream for a (seed, stream) pair, e.g. a record id or a
// pipeline stage tag.
Rng Substream(uint64_t seed, uint64_t stream);

}  // namespace survey_dp

#endif  // SURVEY_DP_RANDOM_H_
