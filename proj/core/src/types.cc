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
#include "certseg/types.h"

#include <cmath>
#include <string>
#include <utility>

#include "certseg/error.h"

namespace certseg {

RealGrid::RealGrid(GridShape s, std::vector<float> v)
    : shape(s), values(std::move(v)) {
  if (values.size() != shape.elements()) {
    throw Error(ErrorCode::kShapeMismatch,
                "grid holds " + std::to_string(values.size()) +
                    " values, shape needs " +
                    std::to_string(shape.elements()));
  }
}

RealGrid::RealGrid(GridShape s, float fill)
    : shape(s), values(s.elements(), fill) {}

Image ValidateImage(RealGrid grid) {
  const GridShape& s = grid.shape;
  if (s.height == 0 || s.width == 0) {
    throw Error(ErrorCode::kShapeMismatch, "image has an empty dimension");
  }
  if (s.channels != 1 && s.channels != 3) {
    throw Error(ErrorCode::kShapeMismatch,
                "image must have 1 or 3 channels, got " +
                    std::to_string(s.channels));
  }
  if (grid.values.size() != s.elements()) {
    throw Error(ErrorCode::kShapeMismatch,
                "image holds " + std::to_string(grid.values.size()) +
                    " values, shape needs " + std::to_string(s.elements()));
  }
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const float v = grid.values[i];
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw Error(ErrorCode::kOutOfRange,
                  "element " + std::to_string(i) + " = " + std::to_string(v) +
                      " is outside [0, 1]");
    }
  }
  return Image(std::move(grid));
}

namespace {

void CheckClassCount(std::size_t num_classes) {
  if (num_classes < 2 || num_classes > kMaxClasses) {
    throw Error(ErrorCode::kDomainError,
                "class count must be in [2, 65535], got " +
                    std::to_string(num_classes));
  }
}

}  // namespace

LabelMap::LabelMap(std::size_t height, std::size_t width,
                   std::size_t num_classes, std::vector<Label> labels)
    : height_(height),
      width_(width),
      num_classes_(num_classes),
      labels_(std::move(labels)) {
  CheckClassCount(num_classes_);
  if (labels_.size() != height_ * width_) {
    throw Error(ErrorCode::kShapeMismatch,
                "label map holds " + std::to_string(labels_.size()) +
                    " labels for a " + std::to_string(height_) + "x" +
                    std::to_string(width_) + " grid");
  }
  for (Label l : labels_) {
    if (l >= num_classes_) {
      throw Error(ErrorCode::kOutOfRange,
                  "label " + std::to_string(l) + " >= class count " +
                      std::to_string(num_classes_));
    }
  }
}

LabelMap::LabelMap(std::size_t height, std::size_t width,
                   std::size_t num_classes, Label fill)
    : LabelMap(height, width, num_classes,
               std::vector<Label>(height * width, fill)) {}

std::string_view DenoiseModeName(DenoiseMode mode) {
  switch (mode) {
    case DenoiseMode::kNone: return "none";
    case DenoiseMode::kSingleStep: return "single_step";
    case DenoiseMode::kMultiStep: return "multi_step";
  }
  return "none";
}

DenoiseMode ParseDenoiseMode(std::string_view name) {
  if (name == "none") return DenoiseMode::kNone;
  if (name == "single_step") return DenoiseMode::kSingleStep;
  if (name == "multi_step") return DenoiseMode::kMultiStep;
  throw Error(ErrorCode::kDomainError,
              "unknown denoise mode '" + std::string(name) + "'");
}

void CertifyConfig::Validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kDomainError, "sigma must be positive and finite");
  }
  if (n0 == 0) throw Error(ErrorCode::kDomainError, "n0 must be positive");
  if (n == 0) throw Error(ErrorCode::kDomainError, "n must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kDomainError, "alpha must lie in (0, 1)");
  }
  // tau > 0.5 makes the certified class unique.
  if (!(tau > 0.5 && tau < 1.0)) {
    throw Error(ErrorCode::kDomainError, "tau must lie in (0.5, 1)");
  }
}

CertifiedSegmentation::CertifiedSegmentation(std::size_t height,
                                             std::size_t width,
                                             std::size_t num_classes,
                                             std::vector<Label> labels,
                                             double radius,
                                             CertifyConfig config)
    : height_(height),
      width_(width),
      num_classes_(num_classes),
      labels_(std::move(labels)),
      radius_(radius),
      config_(config) {
  CheckClassCount(num_classes_);
  if (labels_.size() != height_ * width_) {
    throw Error(ErrorCode::kShapeMismatch,
                "certified map size does not match its grid");
  }
  for (Label l : labels_) {
    if (l > num_classes_) {
      throw Error(ErrorCode::kOutOfRange,
                  "certified label " + std::to_string(l) +
                      " is neither a class nor the abstain marker");
    }
  }
  if (!(radius_ >= 0.0)) {
    throw Error(ErrorCode::kDomainError, "radius must be nonnegative");
  }
}

}  // namespace certseg
