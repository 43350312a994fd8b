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
#ifndef CERTSEG_NSEG_H_
#define CERTSEG_NSEG_H_

// NSEG tensor container: a single-line UTF-8 JSON header
//   {"dtype":"f32"|"u16","shape":[...],"order":"row-major"}\n
// followed by exactly prod(shape) little-endian elements. No padding and no
// trailing bytes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "certseg/types.h"

namespace certseg {

enum class NsegDtype { kF32, kU16 };

struct NsegTensor {
  std::vector<std::size_t> shape;
  std::variant<std::vector<float>, std::vector<std::uint16_t>> data;

  NsegDtype dtype() const {
    return data.index() == 0 ? NsegDtype::kF32 : NsegDtype::kU16;
  }
  std::size_t element_count() const;
  const std::vector<float>& f32() const { return std::get<0>(data); }
  const std::vector<std::uint16_t>& u16() const { return std::get<1>(data); }

  friend bool operator==(const NsegTensor&, const NsegTensor&) = default;
};

// The exact header line (including the trailing newline) for a tensor.
std::string NsegHeader(const NsegTensor& tensor);

void WriteNseg(std::ostream& out, const NsegTensor& tensor);

// Reads one tensor. Throws Error{kFormatError} on a malformed header or a
// truncated payload. Does not look past the payload, so several tensors can
// share a stream.
NsegTensor ReadNseg(std::istream& in);

// Parses the header line alone (without the newline). Exposed for the
// bridge, which must peek at response headers for error frames.
NsegTensor ParseNsegHeader(const std::string& line);
void ReadNsegPayload(std::istream& in, NsegTensor& tensor);

void WriteNsegFile(const std::filesystem::path& path, const NsegTensor& tensor);
// Like ReadNseg, but also rejects trailing bytes.
NsegTensor ReadNsegFile(const std::filesystem::path& path);

// Conversions. Grids serialize as f32 [H, W, C]; label maps and certified
// maps as u16 [H, W] (abstain written as k).
NsegTensor ToTensor(const RealGrid& grid);
NsegTensor ToTensor(const LabelMap& labels);
NsegTensor ToTensor(const CertifiedSegmentation& cert);
// Accepts f32 tensors of rank 2 (C = 1) or rank 3.
RealGrid GridFromTensor(const NsegTensor& tensor);
LabelMap LabelMapFromTensor(const NsegTensor& tensor, std::size_t num_classes);

}  // namespace certseg

#endif  // CERTSEG_NSEG_H_
