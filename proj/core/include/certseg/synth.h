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
#ifndef CERTSEG_SYNTH_H_
#define CERTSEG_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "certseg/types.h"

namespace certseg {

enum class ShapeKind { kRectangle, kDisk };

// Axis-aligned rectangle [top, bottom) x [left, right), or a disk of integer
// radius centered on pixel (center_row, center_col) covering pixels with
// squared distance <= radius^2.
struct SceneShape {
  ShapeKind kind = ShapeKind::kRectangle;
  Label label = 1;
  std::size_t top = 0, left = 0, bottom = 0, right = 0;
  std::size_t center_row = 0, center_col = 0, radius = 0;

  bool Covers(std::size_t row, std::size_t col) const;
};

struct SceneSpec {
  // Painted in order; later shapes sit on top.
  std::vector<SceneShape> shapes;
  // Intensity of every class; class 0 is the background.
  std::vector<float> class_intensities;
  float background_intensity = 0.0f;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  Image image;
  LabelMap ground_truth;
  SceneSpec spec;
};

// Classes are limited so intensity steps of 1/k survive 8-bit quantization.
inline constexpr std::size_t kMaxSceneClasses = 256;
// Shapes keep this many background pixels to every border.
inline constexpr std::size_t kSceneMargin = 2;

// (c + 1/2) / k for c in [0, k): maximally and evenly separated, 1/k apart.
std::vector<float> SceneClassIntensities(std::size_t num_classes);

// Deterministic in all arguments. Throws Error{kDomainError} for k < 2,
// k > kMaxSceneClasses, channels other than 1 or 3, or a grid too small to
// hold shapes inside the margins.
SyntheticScene GenerateScene(std::uint64_t seed, std::size_t height,
                             std::size_t width, std::size_t num_classes,
                             std::size_t shape_count, std::size_t channels = 1);

// Smoothed probability of class 1 for the one-pixel model f(v) = [v >= theta]
// under N(0, sigma^2) noise: Phi((x - theta) / sigma).
double ExactSmoothedProb(double x, double theta, double sigma);

}  // namespace certseg

#endif  // CERTSEG_SYNTH_H_
