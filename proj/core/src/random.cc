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
#include <cmath>
#include <numbers>

#include "certseg/random.h"

namespace certseg {

std::uint64_t DeriveStreamSeed(std::uint64_t master_seed,
                               std::uint64_t image_index,
                               std::uint64_t sample_index) {
  // Each stage is a bijection of its running word, so for a fixed master
  // seed a collision needs two (image, sample) pairs to meet after the
  // second mix: the usual 2^-64 birthday odds.
  std::uint64_t z = Mix64(master_seed + 0x9e3779b97f4a7c15ULL);
  z = Mix64(z ^ Mix64(image_index + 0x632be59bd9b4e019ULL));
  z = Mix64(z + sample_index);
  return z;
}

double StreamRng::NextNormal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double u1 = NextOpenUnit();
  const double u2 = NextOpenUnit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

}  // namespace certseg
