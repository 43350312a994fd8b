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

#ifndef CERTSEG_ERROR_H_
#define CERTSEG_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace certseg {

enum class ErrorCode {
  kOutOfRange,
  kShapeMismatch,
  kDomainError,
  kIndexError,
  kSigmaOutOfRange,
  kModelOutputError,
  kNonAscendingThresholds,
  kEmptyDataset,
  kFormatError,
  kIoError,
  kBridgeError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class BridgeFailure {
  kTimeout,
  kBadShape,
  kProcessExit,
  kProtocolViolation,
};

std::string_view BridgeFailureName(BridgeFailure failure);

class BridgeError : public Error {
 public:
  BridgeError(BridgeFailure failure, const std::string& message);

  BridgeFailure failure() const noexcept { return failure_; }

 private:
  BridgeFailure failure_;
};

}  // namespace certseg

#endif  // CERTSEG_ERROR_H_
