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
#ifndef CERTSEG_MODELS_H_
#define CERTSEG_MODELS_H_

#include <cstddef>
#include <string>
#include <vector>

#include "certseg/schedule.h"
#include "certseg/types.h"

namespace certseg {

// A base segmenter f mapping an image-shaped grid to per-pixel classes.
// Inputs may lie outside [0, 1] (noise is never clamped) and segmenters must
// handle that without clamping.
class Segmenter {
 public:
  virtual ~Segmenter() = default;

  // Deterministic: equal inputs give equal label maps.
  virtual LabelMap Segment(const RealGrid& x) const = 0;
  virtual std::size_t num_classes() const = 0;
  // False if calls must be serialized by the caller.
  virtual bool concurrency_capable() const { return true; }
  virtual std::string kind() const = 0;
};

// Bins the per-pixel channel mean into k = thresholds.size() + 1 classes
// with half-open bins [t_{i-1}, t_i): a value equal to a threshold goes to
// the upper class.
class ThresholdSegmenter final : public Segmenter {
 public:
  // Throws Error{kNonAscendingThresholds} unless the thresholds are finite
  // and strictly ascending, and there is at least one.
  explicit ThresholdSegmenter(std::vector<double> thresholds);

  LabelMap Segment(const RealGrid& x) const override;
  std::size_t num_classes() const override { return thresholds_.size() + 1; }
  std::string kind() const override { return "threshold"; }

  const std::vector<double>& thresholds() const { return thresholds_; }

 private:
  std::vector<double> thresholds_;
};

// Assigns each pixel the class of the nearest prototype intensity vector in
// Euclidean distance; ties go to the smaller class id.
class PrototypeSegmenter final : public Segmenter {
 public:
  // Throws Error{kDomainError} for fewer than two prototypes or prototypes
  // of unequal, zero or non-finite length.
  explicit PrototypeSegmenter(std::vector<std::vector<double>> prototypes);

  LabelMap Segment(const RealGrid& x) const override;
  std::size_t num_classes() const override { return prototypes_.size(); }
  std::string kind() const override { return "prototype"; }

 private:
  std::vector<std::vector<double>> prototypes_;
};

class ConstantSegmenter final : public Segmenter {
 public:
  ConstantSegmenter(std::size_t num_classes, Label label);

  LabelMap Segment(const RealGrid& x) const override;
  std::size_t num_classes() const override { return num_classes_; }
  std::string kind() const override { return "constant"; }

 private:
  std::size_t num_classes_;
  Label label_;
};

// Returns its input unchanged.
class IdentityDenoiser final : public Denoiser {
 public:
  RealGrid PredictClean(const RealGrid& noisy, std::size_t t) const override;
};

// Ignores its input and returns a stored clean image, mapped to the
// diffusion domain. Removes all noise by construction.
class OracleDenoiser final : public Denoiser {
 public:
  explicit OracleDenoiser(const Image& clean);

  RealGrid PredictClean(const RealGrid& noisy, std::size_t t) const override;

 private:
  RealGrid clean_diffusion_;
};

}  // namespace certseg

#endif  // CERTSEG_MODELS_H_
