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

#include "certseg/error.h"

#include <string>

namespace certseg {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kIndexError: return "IndexError";
    case ErrorCode::kSigmaOutOfRange: return "SigmaOutOfRange";
    case ErrorCode::kModelOutputError: return "ModelOutputError";
    case ErrorCode::kNonAscendingThresholds: return "NonAscendingThresholds";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kBridgeError: return "BridgeError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

std::string_view BridgeFailureName(BridgeFailure failure) {
  switch (failure) {
    case BridgeFailure::kTimeout: return "Timeout";
    case BridgeFailure::kBadShape: return "BadShape";
    case BridgeFailure::kProcessExit: return "ProcessExit";
    case BridgeFailure::kProtocolViolation: return "ProtocolViolation";
  }
  return "Unknown";
}

BridgeError::BridgeError(BridgeFailure failure, const std::string& message)
    : Error(ErrorCode::kBridgeError,
            std::string(BridgeFailureName(failure)) + ": " + message),
      failure_(failure) {}

}  // namespace certseg
