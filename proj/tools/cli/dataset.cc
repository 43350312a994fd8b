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
#include "cli/dataset.h"

#include <algorithm>

#include "certseg/error.h"
#include "certseg/nseg.h"

namespace certseg::cli {

namespace fs = std::filesystem;

std::vector<std::string> ListIds(const fs::path& dir,
                                 const std::string& suffix) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kIoError, "not a directory: " + dir.string());
  }
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<DatasetEntry> ListDataset(const fs::path& dir) {
  std::vector<DatasetEntry> entries;
  for (const std::string& id : ListIds(dir, kImageSuffix)) {
    DatasetEntry entry{id, dir / (id + kImageSuffix), std::nullopt};
    const fs::path gt = dir / (id + kGroundTruthSuffix);
    if (fs::exists(gt)) entry.ground_truth = gt;
    entries.push_back(std::move(entry));
  }
  if (entries.empty()) {
    throw Error(ErrorCode::kEmptyDataset,
                "no *" + std::string(kImageSuffix) + " files in " + dir.string());
  }
  return entries;
}

Image LoadImage(const fs::path& path) {
  return ValidateImage(GridFromTensor(ReadNsegFile(path)));
}

LabelMap LoadLabels(const fs::path& path, std::size_t num_classes) {
  return LabelMapFromTensor(ReadNsegFile(path), num_classes);
}

std::string DatasetName(const fs::path& dir) {
  fs::path p = dir.lexically_normal();
  if (!p.has_filename()) p = p.parent_path();
  std::string name = p.filename().string();
  return name.empty() || name == "." ? "dataset" : name;
}

}  // namespace certseg::cli
