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
#include "certseg/nseg.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "certseg/error.h"
#include "json.hpp"

namespace certseg {
namespace {

constexpr std::size_t kMaxHeaderBytes = 1 << 16;

[[noreturn]] void FormatError(const std::string& what) {
  throw Error(ErrorCode::kFormatError, "NSEG: " + what);
}

template <typename T>
void WritePayload(std::ostream& out, const std::vector<T>& values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(T)));
  } else {
    for (T v : values) {
      unsigned char bytes[sizeof(T)];
      std::memcpy(bytes, &v, sizeof(T));
      for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.put(static_cast<char>(bytes[sizeof(T) - 1 - i]));
      }
    }
  }
}

template <typename T>
void ReadPayload(std::istream& in, std::vector<T>& values) {
  const auto bytes = static_cast<std::streamsize>(values.size() * sizeof(T));
  in.read(reinterpret_cast<char*>(values.data()), bytes);
  if (in.gcount() != bytes) {
    FormatError("truncated payload: expected " + std::to_string(bytes) +
                " bytes, got " + std::to_string(in.gcount()));
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (T& v : values) {
      unsigned char b[sizeof(T)];
      std::memcpy(b, &v, sizeof(T));
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
        std::swap(b[i], b[sizeof(T) - 1 - i]);
      }
      std::memcpy(&v, b, sizeof(T));
    }
  }
}

}  // namespace

std::size_t NsegTensor::element_count() const {
  std::size_t count = 1;
  for (std::size_t d : shape) count *= d;
  return count;
}

std::string NsegHeader(const NsegTensor& tensor) {
  nlohmann::ordered_json header;
  header["dtype"] = tensor.dtype() == NsegDtype::kF32 ? "f32" : "u16";
  header["shape"] = tensor.shape;
  header["order"] = "row-major";
  return header.dump() + "\n";
}

void WriteNseg(std::ostream& out, const NsegTensor& tensor) {
  const std::size_t expected = tensor.element_count();
  std::visit(
      [&](const auto& values) {
        if (values.size() != expected) {
          throw Error(ErrorCode::kShapeMismatch,
                      "NSEG payload length does not match shape");
        }
        out << NsegHeader(tensor);
        WritePayload(out, values);
      },
      tensor.data);
  if (!out) throw Error(ErrorCode::kIoError, "NSEG write failed");
}

NsegTensor ParseNsegHeader(const std::string& line) {
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    FormatError(std::string("header is not JSON: ") + e.what());
  }
  if (!header.is_object()) FormatError("header is not a JSON object");
  const auto dtype = header.find("dtype");
  const auto shape = header.find("shape");
  const auto order = header.find("order");
  if (dtype == header.end() || shape == header.end() ||
      order == header.end()) {
    FormatError("header needs dtype, shape and order");
  }
  if (!order->is_string() || order->get<std::string>() != "row-major") {
    FormatError("only row-major order is supported");
  }
  if (!shape->is_array()) FormatError("shape must be an array");

  NsegTensor tensor;
  std::size_t count = 1;
  for (const auto& d : *shape) {
    if (!d.is_number_unsigned()) {
      FormatError("shape entries must be nonnegative integers");
    }
    const auto dim = d.get<std::uint64_t>();
    if (dim != 0 && count > std::numeric_limits<std::uint32_t>::max() / dim) {
      FormatError("shape is too large");
    }
    count *= dim;
    tensor.shape.push_back(static_cast<std::size_t>(dim));
  }
  if (!dtype->is_string()) FormatError("dtype must be a string");
  const auto name = dtype->get<std::string>();
  if (name == "f32") {
    tensor.data = std::vector<float>(count);
  } else if (name == "u16") {
    tensor.data = std::vector<std::uint16_t>(count);
  } else {
    FormatError("unsupported dtype '" + name + "'");
  }
  return tensor;
}

void ReadNsegPayload(std::istream& in, NsegTensor& tensor) {
  std::visit([&](auto& values) { ReadPayload(in, values); }, tensor.data);
}

NsegTensor ReadNseg(std::istream& in) {
  std::string line;
  char c;
  while (in.get(c)) {
    if (c == '\n') break;
    line.push_back(c);
    if (line.size() > kMaxHeaderBytes) FormatError("header line too long");
  }
  if (!in && line.empty()) FormatError("missing header");
  if (!in) FormatError("header line is not newline-terminated");
  NsegTensor tensor = ParseNsegHeader(line);
  ReadNsegPayload(in, tensor);
  return tensor;
}

void WriteNsegFile(const std::filesystem::path& path,
                   const NsegTensor& tensor) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  }
  WriteNseg(out, tensor);
}

NsegTensor ReadNsegFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  NsegTensor tensor = ReadNseg(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    FormatError("trailing bytes after payload in " + path.string());
  }
  return tensor;
}

NsegTensor ToTensor(const RealGrid& grid) {
  return NsegTensor{{grid.shape.height, grid.shape.width, grid.shape.channels},
                    grid.values};
}

NsegTensor ToTensor(const LabelMap& labels) {
  return NsegTensor{
      {labels.height(), labels.width()},
      std::vector<std::uint16_t>(labels.labels().begin(), labels.labels().end())};
}

NsegTensor ToTensor(const CertifiedSegmentation& cert) {
  return NsegTensor{
      {cert.height(), cert.width()},
      std::vector<std::uint16_t>(cert.labels().begin(), cert.labels().end())};
}

RealGrid GridFromTensor(const NsegTensor& tensor) {
  if (tensor.dtype() != NsegDtype::kF32) {
    throw Error(ErrorCode::kFormatError, "expected an f32 tensor");
  }
  GridShape shape;
  if (tensor.shape.size() == 2) {
    shape = {tensor.shape[0], tensor.shape[1], 1};
  } else if (tensor.shape.size() == 3) {
    shape = {tensor.shape[0], tensor.shape[1], tensor.shape[2]};
  } else {
    throw Error(ErrorCode::kShapeMismatch, "image tensors must be rank 2 or 3");
  }
  return RealGrid(shape, tensor.f32());
}

LabelMap LabelMapFromTensor(const NsegTensor& tensor,
                            std::size_t num_classes) {
  if (tensor.dtype() != NsegDtype::kU16) {
    throw Error(ErrorCode::kFormatError, "expected a u16 tensor");
  }
  if (tensor.shape.size() != 2) {
    throw Error(ErrorCode::kShapeMismatch, "label tensors must be rank 2");
  }
  return LabelMap(tensor.shape[0], tensor.shape[1], num_classes, tensor.u16());
}

}  // namespace certseg
