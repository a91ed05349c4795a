// Copyright 2026 The LHPO Authors
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

#ifndef LHPO_RANDOM_H_
#define LHPO_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace lhpo {

using Rng = std::mt19937_64;

// Derives an independent seed for the stream named `label` under `base`.
// Streams are identified by name, so the randomness a component sees does
// not depend on the order in which other components draw.
std::uint64_t DeriveSeed(std::uint64_t base, std::string_view label);
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t index);

inline Rng MakeStream(std::uint64_t base, std::string_view label) {
  return Rng(DeriveSeed(base, label));
}

// Uniform integer in [0, n). n must be positive.
std::size_t UniformIndex(Rng& rng, std::size_t n);

double UniformReal(Rng& rng, double lo, double hi);

double StandardNormal(Rng& rng);

// First `k` entries of `pool` become a uniformly random ordered sample
// without replacement (partial Fisher-Yates); the rest are left permuted.
void PartialShuffle(std::vector<int>& pool, std::size_t k, Rng& rng);

}  // namespace lhpo

#endif  // LHPO_RANDOM_H_
