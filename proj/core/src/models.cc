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
#include "certseg/models.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "certseg/error.h"

namespace certseg {

ThresholdSegmenter::ThresholdSegmenter(std::vector<double> thresholds)
    : thresholds_(std::move(thresholds)) {
  if (thresholds_.empty()) {
    throw Error(ErrorCode::kNonAscendingThresholds,
                "need at least one threshold");
  }
  if (thresholds_.size() + 1 > kMaxClasses) {
    throw Error(ErrorCode::kDomainError, "too many thresholds");
  }
  for (std::size_t i = 0; i < thresholds_.size(); ++i) {
    if (!std::isfinite(thresholds_[i]) ||
        (i > 0 && !(thresholds_[i] > thresholds_[i - 1]))) {
      throw Error(ErrorCode::kNonAscendingThresholds,
                  "thresholds must be finite and strictly ascending");
    }
  }
}

LabelMap ThresholdSegmenter::Segment(const RealGrid& x) const {
  const std::size_t channels = x.shape.channels;
  std::vector<Label> labels(x.shape.pixels());
  for (std::size_t p = 0; p < labels.size(); ++p) {
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      sum += x.values[p * channels + c];
    }
    const double mean = sum / static_cast<double>(channels);
    // Number of thresholds <= mean.
    labels[p] = static_cast<Label>(
        std::upper_bound(thresholds_.begin(), thresholds_.end(), mean) -
        thresholds_.begin());
  }
  return LabelMap(x.shape.height, x.shape.width, num_classes(),
                  std::move(labels));
}

PrototypeSegmenter::PrototypeSegmenter(
    std::vector<std::vector<double>> prototypes)
    : prototypes_(std::move(prototypes)) {
  if (prototypes_.size() < 2 || prototypes_.size() > kMaxClasses) {
    throw Error(ErrorCode::kDomainError,
                "need between 2 and 65535 prototypes");
  }
  const std::size_t dim = prototypes_.front().size();
  for (const auto& proto : prototypes_) {
    if (proto.empty() || proto.size() != dim) {
      throw Error(ErrorCode::kDomainError,
                  "prototypes must share a nonzero length");
    }
    for (double v : proto) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kDomainError, "prototype is not finite");
      }
    }
  }
}

LabelMap PrototypeSegmenter::Segment(const RealGrid& x) const {
  const std::size_t channels = x.shape.channels;
  if (channels != prototypes_.front().size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "prototype length " +
                    std::to_string(prototypes_.front().size()) +
                    " does not match " + std::to_string(channels) +
                    " image channels");
  }
  std::vector<Label> labels(x.shape.pixels());
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const float* pixel = &x.values[p * channels];
    double best = 0.0;
    std::size_t best_class = 0;
    for (std::size_t k = 0; k < prototypes_.size(); ++k) {
      double dist = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = pixel[c] - prototypes_[k][c];
        dist += d * d;
      }
      if (k == 0 || dist < best) {
        best = dist;
        best_class = k;
      }
    }
    labels[p] = static_cast<Label>(best_class);
  }
  return LabelMap(x.shape.height, x.shape.width, num_classes(),
                  std::move(labels));
}

ConstantSegmenter::ConstantSegmenter(std::size_t num_classes, Label label)
    : num_classes_(num_classes), label_(label) {
  if (num_classes_ < 2 || num_classes_ > kMaxClasses || label_ >= num_classes_) {
    throw Error(ErrorCode::kDomainError,
                "constant label must be a valid class");
  }
}

LabelMap ConstantSegmenter::Segment(const RealGrid& x) const {
  return LabelMap(x.shape.height, x.shape.width, num_classes_, label_);
}

RealGrid IdentityDenoiser::PredictClean(const RealGrid& noisy,
                                        std::size_t) const {
  return noisy;
}

OracleDenoiser::OracleDenoiser(const Image& clean)
    : clean_diffusion_(clean.grid()) {
  for (float& v : clean_diffusion_.values) v = 2.0f * v - 1.0f;
}

RealGrid OracleDenoiser::PredictClean(const RealGrid& noisy,
                                      std::size_t) const {
  if (noisy.shape != clean_diffusion_.shape) {
    throw Error(ErrorCode::kShapeMismatch,
                "oracle denoiser called on a different image shape");
  }
  return clean_diffusion_;
}

}  // namespace certseg
