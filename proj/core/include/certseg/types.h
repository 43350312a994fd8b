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
#ifndef CERTSEG_TYPES_H_
#define CERTSEG_TYPES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace certseg {

using Label = std::uint16_t;

// Largest supported class count. The value k itself is the in-band abstain
// marker, so it must still fit in a Label.
inline constexpr std::size_t kMaxClasses = 65535;

struct GridShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;

  std::size_t pixels() const { return height * width; }
  std::size_t elements() const { return height * width * channels; }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

// H x W x C float array in row-major (h, w, c) order with no range
// constraint. Holds noisy images and diffusion-domain tensors.
struct RealGrid {
  GridShape shape;
  std::vector<float> values;

  RealGrid() = default;
  RealGrid(GridShape s, std::vector<float> v);
  explicit RealGrid(GridShape s, float fill = 0.0f);

  float at(std::size_t h, std::size_t w, std::size_t c = 0) const {
    return values[(h * shape.width + w) * shape.channels + c];
  }
  float& at(std::size_t h, std::size_t w, std::size_t c = 0) {
    return values[(h * shape.width + w) * shape.channels + c];
  }
};

// An input image: finite intensities in the canonical domain [0, 1].
// Only constructible through ValidateImage, so every Image satisfies the
// invariants.
class Image {
 public:
  const GridShape& shape() const { return grid_.shape; }
  const RealGrid& grid() const { return grid_; }
  std::span<const float> values() const { return grid_.values; }

  friend bool operator==(const Image& a, const Image& b) {
    return a.grid_.shape == b.grid_.shape && a.grid_.values == b.grid_.values;
  }

 private:
  friend Image ValidateImage(RealGrid grid);
  explicit Image(RealGrid grid) : grid_(std::move(grid)) {}

  RealGrid grid_;
};

// Returns the grid as an Image iff channels is 1 or 3, the value count
// matches the shape, and every value is finite and inside [0, 1].
// Throws Error{kShapeMismatch} or Error{kOutOfRange}.
Image ValidateImage(RealGrid grid);

class LabelMap {
 public:
  LabelMap() = default;
  // Throws kDomainError if k < 2 or k > kMaxClasses, kShapeMismatch on a
  // length mismatch and kOutOfRange if any label is >= k.
  LabelMap(std::size_t height, std::size_t width, std::size_t num_classes,
           std::vector<Label> labels);
  LabelMap(std::size_t height, std::size_t width, std::size_t num_classes,
           Label fill = 0);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixels() const { return labels_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  std::span<const Label> labels() const { return labels_; }
  Label operator[](std::size_t i) const { return labels_[i]; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t num_classes_ = 2;
  std::vector<Label> labels_;
};

enum class DenoiseMode { kNone, kSingleStep, kMultiStep };

std::string_view DenoiseModeName(DenoiseMode mode);
// Accepts "none", "single_step" and "multi_step".
DenoiseMode ParseDenoiseMode(std::string_view name);

// Statistical protocol parameters. Defaults follow the published setup:
// n0 = 10 candidate samples, n = 100 test samples, alpha = 0.001, tau = 0.75.
struct CertifyConfig {
  double sigma = 0.25;
  std::size_t n0 = 10;
  std::size_t n = 100;
  double alpha = 0.001;
  double tau = 0.75;
  std::uint64_t seed = 0;
  DenoiseMode denoise_mode = DenoiseMode::kNone;

  // Throws Error{kDomainError} naming the first violated constraint.
  void Validate() const;

  friend bool operator==(const CertifyConfig&, const CertifyConfig&) = default;
};

// Per-pixel certified labels. A value equal to num_classes() marks an
// abstained pixel.
class CertifiedSegmentation {
 public:
  CertifiedSegmentation() = default;
  CertifiedSegmentation(std::size_t height, std::size_t width,
                        std::size_t num_classes, std::vector<Label> labels,
                        double radius, CertifyConfig config);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixels() const { return labels_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  Label abstain_label() const { return static_cast<Label>(num_classes_); }
  bool is_abstain(std::size_t i) const { return labels_[i] == abstain_label(); }
  std::span<const Label> labels() const { return labels_; }
  Label operator[](std::size_t i) const { return labels_[i]; }
  double radius() const { return radius_; }
  const CertifyConfig& config() const { return config_; }

  friend bool operator==(const CertifiedSegmentation&,
                         const CertifiedSegmentation&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t num_classes_ = 2;
  std::vector<Label> labels_;
  double radius_ = 0.0;
  CertifyConfig config_;
};

}  // namespace certseg

#endif  // CERTSEG_TYPES_H_
