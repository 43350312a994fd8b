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
#ifndef CERTSEG_TOOLS_CLI_DATASET_H_
#define CERTSEG_TOOLS_CLI_DATASET_H_

// Dataset directory layout: one <id>.image.nseg per image (f32 [H,W] or
// [H,W,C], values in [0, 1]) and, optionally, a matching <id>.gt.nseg
// (u16 [H,W]). Images are processed in lexicographic id order; an image's
// position in that order is its noise-stream index.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "certseg/types.h"

namespace certseg::cli {

inline constexpr const char* kImageSuffix = ".image.nseg";
inline constexpr const char* kGroundTruthSuffix = ".gt.nseg";
inline constexpr const char* kCertSuffix = ".cert.nseg";
inline constexpr const char* kSidecarSuffix = ".cert.json";

struct DatasetEntry {
  std::string id;
  std::filesystem::path image;
  std::optional<std::filesystem::path> ground_truth;
};

// Throws Error{kIoError} if dir is not a directory and Error{kEmptyDataset}
// if it holds no images.
std::vector<DatasetEntry> ListDataset(const std::filesystem::path& dir);

// Ids of files in dir ending in suffix, sorted.
std::vector<std::string> ListIds(const std::filesystem::path& dir,
                                 const std::string& suffix);

Image LoadImage(const std::filesystem::path& path);
LabelMap LoadLabels(const std::filesystem::path& path, std::size_t num_classes);

// Last path component of dir, ignoring a trailing separator.
std::string DatasetName(const std::filesystem::path& dir);

}  // namespace certseg::cli

#endif  // CERTSEG_TOOLS_CLI_DATASET_H_
