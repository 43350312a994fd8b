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
#include "certseg/synth.h"

#include <algorithm>
#include <string>

#include "certseg/error.h"
#include "certseg/random.h"
#include "certseg/smoothing.h"

namespace certseg {
namespace {

// Uniform integer in [lo, hi].
std::size_t UniformBetween(StreamRng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.NextU64() % (hi - lo + 1));
}

constexpr std::uint64_t kSceneStream = 0x5ce9e5ce9e5ce9e5ULL;

}  // namespace

bool SceneShape::Covers(std::size_t row, std::size_t col) const {
  if (kind == ShapeKind::kRectangle) {
    return row >= top && row < bottom && col >= left && col < right;
  }
  const auto dr = static_cast<long long>(row) - static_cast<long long>(center_row);
  const auto dc = static_cast<long long>(col) - static_cast<long long>(center_col);
  const auto r = static_cast<long long>(radius);
  return dr * dr + dc * dc <= r * r;
}

std::vector<float> SceneClassIntensities(std::size_t num_classes) {
  std::vector<float> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    out[c] = static_cast<float>((static_cast<double>(c) + 0.5) /
                                static_cast<double>(num_classes));
  }
  return out;
}

SyntheticScene GenerateScene(std::uint64_t seed, std::size_t height,
                             std::size_t width, std::size_t num_classes,
                             std::size_t shape_count, std::size_t channels) {
  if (num_classes < 2 || num_classes > kMaxSceneClasses) {
    throw Error(ErrorCode::kDomainError,
                "scene class count must lie in [2, " +
                    std::to_string(kMaxSceneClasses) + "]");
  }
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kDomainError, "scenes have 1 or 3 channels");
  }
  if (height == 0 || width == 0) {
    throw Error(ErrorCode::kDomainError, "scene must not be empty");
  }
  // Smallest shape is 2 px wide (rectangle) or 3 px (disk of radius 1).
  const std::size_t min_side = 2 * kSceneMargin + 3;
  if (shape_count > 0 && (height < min_side || width < min_side)) {
    throw Error(ErrorCode::kDomainError,
                "scene is too small to hold shapes inside its margins");
  }

  SceneSpec spec;
  spec.seed = seed;
  spec.class_intensities = SceneClassIntensities(num_classes);
  spec.background_intensity = spec.class_intensities[0];

  StreamRng rng(DeriveStreamSeed(seed, kSceneStream, 0));
  // Usable interior rows/cols: [kSceneMargin, size - kSceneMargin).
  const std::size_t row_end = height - kSceneMargin;
  const std::size_t col_end = width - kSceneMargin;
  for (std::size_t s = 0; s < shape_count; ++s) {
    SceneShape shape;
    shape.label = static_cast<Label>(UniformBetween(rng, 1, num_classes - 1));
    if (rng.NextU64() & 1) {
      shape.kind = ShapeKind::kRectangle;
      const std::size_t max_h = std::max<std::size_t>(2, (row_end - kSceneMargin) / 2);
      const std::size_t max_w = std::max<std::size_t>(2, (col_end - kSceneMargin) / 2);
      const std::size_t h = UniformBetween(rng, 2, max_h);
      const std::size_t w = UniformBetween(rng, 2, max_w);
      shape.top = UniformBetween(rng, kSceneMargin, row_end - h);
      shape.left = UniformBetween(rng, kSceneMargin, col_end - w);
      shape.bottom = shape.top + h;
      shape.right = shape.left + w;
    } else {
      shape.kind = ShapeKind::kDisk;
      const std::size_t interior =
          std::min(row_end - kSceneMargin, col_end - kSceneMargin);
      const std::size_t max_r = std::max<std::size_t>(1, (interior - 1) / 4);
      shape.radius = UniformBetween(rng, 1, max_r);
      shape.center_row = UniformBetween(rng, kSceneMargin + shape.radius,
                                        row_end - 1 - shape.radius);
      shape.center_col = UniformBetween(rng, kSceneMargin + shape.radius,
                                        col_end - 1 - shape.radius);
    }
    spec.shapes.push_back(shape);
  }

  std::vector<Label> labels(height * width, 0);
  for (const SceneShape& shape : spec.shapes) {
    std::size_t r0, r1, c0, c1;
    if (shape.kind == ShapeKind::kRectangle) {
      r0 = shape.top, r1 = shape.bottom, c0 = shape.left, c1 = shape.right;
    } else {
      r0 = shape.center_row - shape.radius;
      r1 = shape.center_row + shape.radius + 1;
      c0 = shape.center_col - shape.radius;
      c1 = shape.center_col + shape.radius + 1;
    }
    for (std::size_t r = r0; r < r1; ++r) {
      for (std::size_t c = c0; c < c1; ++c) {
        if (shape.Covers(r, c)) labels[r * width + c] = shape.label;
      }
    }
  }

  RealGrid grid(GridShape{height, width, channels});
  for (std::size_t p = 0; p < labels.size(); ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      grid.values[p * channels + c] = spec.class_intensities[labels[p]];
    }
  }
  return SyntheticScene{ValidateImage(std::move(grid)),
                        LabelMap(height, width, num_classes, std::move(labels)),
                        std::move(spec)};
}

double ExactSmoothedProb(double x, double theta, double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::kDomainError, "sigma must be positive");
  }
  return StdNormalCdf((x - theta) / sigma);
}

}  // namespace certseg
