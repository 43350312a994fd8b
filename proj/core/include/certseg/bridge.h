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
#ifndef CERTSEG_BRIDGE_H_
#define CERTSEG_BRIDGE_H_

// Attaches external segmenters and denoisers running in child processes.
//
// Transport: the child's stdin/stdout. On start the child writes one
// handshake line
//   {"protocol":1,"ops":["segment","denoise"],"num_classes":k}\n
// Each request is a JSON op line, {"op":"segment"}\n or
// {"op":"denoise","t":<int>}\n, followed by one NSEG tensor (f32 [H,W,C]).
// The child answers with one NSEG tensor: u16 [H,W] for segment, f32 of the
// request's shape for denoise. A response header line carrying an "error"
// key instead of a tensor header reports a failed request. Closing the
// child's stdin asks it to exit.

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "certseg/error.h"
#include "certseg/models.h"
#include "certseg/nseg.h"
#include "certseg/schedule.h"

namespace certseg {

struct BridgeHandshake {
  int protocol = 1;
  std::vector<std::string> ops;
  std::size_t num_classes = 0;

  bool supports(const std::string& op) const;
};

struct BridgeOptions {
  // Program and arguments; the program is looked up on PATH.
  std::vector<std::string> argv;
  std::chrono::milliseconds timeout{60000};
};

enum class BridgeOp { kSegment, kDenoise };

struct BridgeRequest {
  BridgeOp op = BridgeOp::kSegment;
  std::size_t t = 0;  // denoise only
};

// One child process. Not thread-safe: one request in flight at a time.
class BridgeProcess {
 public:
  // Spawns the child and reads its handshake. Throws BridgeError.
  explicit BridgeProcess(const BridgeOptions& options);
  ~BridgeProcess();

  BridgeProcess(const BridgeProcess&) = delete;
  BridgeProcess& operator=(const BridgeProcess&) = delete;

  const BridgeHandshake& handshake() const { return handshake_; }

  // Sends one request and returns the validated response. Failures leave the
  // process unusable; later calls throw kProtocolViolation.
  NsegTensor Call(const BridgeRequest& request, const NsegTensor& tensor);

 private:
  void WriteAll(const std::string& bytes);
  std::string ReadLine();
  void ReadExact(char* out, std::size_t count);
  int ReadByte();
  [[noreturn]] void Fail(BridgeFailure failure, const std::string& message);

  BridgeOptions options_;
  BridgeHandshake handshake_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  bool broken_ = false;
  std::chrono::steady_clock::time_point deadline_;
  std::vector<char> buffer_;
  std::size_t buffer_pos_ = 0;
};

// A fixed set of identical child processes. Call() is thread-safe and runs
// on whichever process is idle.
class BridgePool {
 public:
  BridgePool(const BridgeOptions& options, std::size_t size);

  const BridgeHandshake& handshake() const;
  std::size_t size() const { return processes_.size(); }
  NsegTensor Call(const BridgeRequest& request, const NsegTensor& tensor);

 private:
  std::vector<std::unique_ptr<BridgeProcess>> processes_;
  std::vector<bool> busy_;
  std::mutex mu_;
  std::condition_variable idle_;
};

class BridgeSegmenter final : public Segmenter {
 public:
  // Throws BridgeError{kProtocolViolation} if the child does not offer
  // "segment" or declares fewer than two classes.
  explicit BridgeSegmenter(std::shared_ptr<BridgePool> pool);

  LabelMap Segment(const RealGrid& x) const override;
  std::size_t num_classes() const override;
  bool concurrency_capable() const override { return pool_->size() > 1; }
  std::string kind() const override { return "external"; }

 private:
  std::shared_ptr<BridgePool> pool_;
};

class BridgeDenoiser final : public Denoiser {
 public:
  explicit BridgeDenoiser(std::shared_ptr<BridgePool> pool);

  RealGrid PredictClean(const RealGrid& noisy, std::size_t t) const override;
  bool concurrency_capable() const override { return pool_->size() > 1; }

 private:
  std::shared_ptr<BridgePool> pool_;
};

}  // namespace certseg

#endif  // CERTSEG_BRIDGE_H_
