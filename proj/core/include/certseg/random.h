// Copyright 2026 The certseg Authors.
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
#ifndef CERTSEG_RANDOM_H_
#define CERTSEG_RANDOM_H_

#include <cstdint>
#include <optional>

namespace certseg {

// SplitMix64 finalizer. A bijection on 64-bit words.
constexpr std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for the noise stream of one (image, sample) pair. Pure, so noise
// draws do not depend on which thread evaluates which sample.
std::uint64_t DeriveStreamSeed(std::uint64_t master_seed,
                               std::uint64_t image_index,
                               std::uint64_t sample_index);

// Counter-based SplitMix64 stream with a portable Box-Muller normal
// transform (std::normal_distribution is implementation-defined).
class StreamRng {
 public:
  explicit StreamRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t NextU64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return Mix64(state_);
  }

  // Uniform in (0, 1].
  double NextOpenUnit() {
    return (static_cast<double>(NextU64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double NextNormal();

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

}  // namespace certseg

#endif  // CERTSEG_RANDOM_H_
