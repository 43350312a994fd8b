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
#include "certseg/bridge.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <sstream>
#include <string>
#include <thread>

#include "certseg/error.h"
#include "json.hpp"

extern char** environ;

namespace certseg {
namespace {

constexpr std::size_t kMaxLineBytes = 1 << 16;

void IgnoreSigpipeOnce() {
  static const bool done = [] {
    struct sigaction current {};
    sigaction(SIGPIPE, nullptr, &current);
    if (current.sa_handler == SIG_DFL) signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

std::string OpName(BridgeOp op) {
  return op == BridgeOp::kSegment ? "segment" : "denoise";
}

}  // namespace

bool BridgeHandshake::supports(const std::string& op) const {
  return std::find(ops.begin(), ops.end(), op) != ops.end();
}

BridgeProcess::BridgeProcess(const BridgeOptions& options)
    : options_(options) {
  if (options_.argv.empty()) {
    throw BridgeError(BridgeFailure::kProcessExit, "empty bridge command");
  }
  IgnoreSigpipeOnce();

  int in_pipe[2];   // parent -> child stdin
  int out_pipe[2];  // child stdout -> parent
  if (pipe2(in_pipe, O_CLOEXEC) != 0 || pipe2(out_pipe, O_CLOEXEC) != 0) {
    throw BridgeError(BridgeFailure::kProcessExit,
                      std::string("pipe: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> argv;
  for (const std::string& arg : options_.argv) {
    argv.push_back(const_cast<char*>(arg.c_str()));
  }
  argv.push_back(nullptr);
  pid_t pid = -1;
  const int rc =
      posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  if (rc != 0) {
    close(in_pipe[1]);
    close(out_pipe[0]);
    throw BridgeError(BridgeFailure::kProcessExit,
                      "cannot start '" + options_.argv[0] +
                          "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  deadline_ = std::chrono::steady_clock::now() + options_.timeout;
  const std::string line = ReadLine();
  nlohmann::json hello;
  try {
    hello = nlohmann::json::parse(line);
    handshake_.protocol = hello.at("protocol").get<int>();
    handshake_.ops = hello.at("ops").get<std::vector<std::string>>();
    const auto k = hello.at("num_classes").get<long long>();
    if (k < 0) throw std::out_of_range("negative num_classes");
    handshake_.num_classes = static_cast<std::size_t>(k);
  } catch (const std::exception& e) {
    Fail(BridgeFailure::kProtocolViolation,
         std::string("bad handshake: ") + e.what());
  }
  if (handshake_.protocol != 1) {
    Fail(BridgeFailure::kProtocolViolation,
         "unsupported protocol version " + std::to_string(handshake_.protocol));
  }
  for (const std::string& op : handshake_.ops) {
    if (op != "segment" && op != "denoise") {
      Fail(BridgeFailure::kProtocolViolation, "unknown op '" + op + "'");
    }
  }
}

BridgeProcess::~BridgeProcess() {
  if (to_child_ >= 0) close(to_child_);
  if (pid_ > 0) {
    int status = 0;
    bool reaped = false;
    for (int i = 0; i < 100 && !reaped; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        reaped = true;
      } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
    }
    if (!reaped) {
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
    }
  }
  if (from_child_ >= 0) close(from_child_);
}

void BridgeProcess::Fail(BridgeFailure failure, const std::string& message) {
  broken_ = true;
  if (pid_ > 0) kill(pid_, SIGKILL);
  throw BridgeError(failure, message);
}

void BridgeProcess::WriteAll(const std::string& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline_ - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      Fail(BridgeFailure::kTimeout, "timed out writing a request");
    }
    pollfd pfd{to_child_, POLLOUT, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) Fail(BridgeFailure::kTimeout, "timed out writing a request");
    const ssize_t n = write(to_child_, bytes.data() + sent, bytes.size() - sent);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      Fail(BridgeFailure::kProcessExit,
           std::string("adapter closed its input: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

// Returns the next byte, or -1 at end of stream.
int BridgeProcess::ReadByte() {
  if (buffer_pos_ < buffer_.size()) {
    return static_cast<unsigned char>(buffer_[buffer_pos_++]);
  }
  buffer_.resize(1 << 16);
  buffer_pos_ = 0;
  for (;;) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline_ - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      Fail(BridgeFailure::kTimeout, "timed out waiting for the adapter");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) {
      Fail(BridgeFailure::kTimeout, "timed out waiting for the adapter");
    }
    const ssize_t n = read(from_child_, buffer_.data(), buffer_.size());
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      Fail(BridgeFailure::kProcessExit, std::strerror(errno));
    }
    buffer_.resize(static_cast<std::size_t>(n));
    if (n == 0) return -1;
    return static_cast<unsigned char>(buffer_[buffer_pos_++]);
  }
}

std::string BridgeProcess::ReadLine() {
  std::string line;
  for (;;) {
    const int c = ReadByte();
    if (c < 0) {
      if (line.empty()) {
        Fail(BridgeFailure::kProcessExit, "adapter exited without replying");
      }
      Fail(BridgeFailure::kProtocolViolation, "truncated header line");
    }
    if (c == '\n') return line;
    line.push_back(static_cast<char>(c));
    if (line.size() > kMaxLineBytes) {
      Fail(BridgeFailure::kProtocolViolation, "header line too long");
    }
  }
}

void BridgeProcess::ReadExact(char* out, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const int c = ReadByte();
    if (c < 0) {
      Fail(BridgeFailure::kProtocolViolation,
           "truncated payload: got " + std::to_string(i) + " of " +
               std::to_string(count) + " bytes");
    }
    out[i] = static_cast<char>(c);
  }
}

NsegTensor BridgeProcess::Call(const BridgeRequest& request,
                               const NsegTensor& tensor) {
  if (broken_) {
    throw BridgeError(BridgeFailure::kProtocolViolation,
                      "bridge process is in a failed state");
  }
  const std::string op = OpName(request.op);
  if (!handshake_.supports(op)) {
    throw BridgeError(BridgeFailure::kProtocolViolation,
                      "adapter does not offer '" + op + "'");
  }
  if (tensor.dtype() != NsegDtype::kF32 || tensor.shape.size() != 3) {
    throw BridgeError(BridgeFailure::kBadShape,
                      "requests must be f32 [H, W, C] tensors");
  }

  nlohmann::ordered_json op_line;
  op_line["op"] = op;
  if (request.op == BridgeOp::kDenoise) op_line["t"] = request.t;
  std::ostringstream frame;
  frame << op_line.dump() << '\n';
  WriteNseg(frame, tensor);

  deadline_ = std::chrono::steady_clock::now() + options_.timeout;
  WriteAll(frame.str());

  const std::string header = ReadLine();
  NsegTensor response;
  try {
    const auto parsed = nlohmann::json::parse(header);
    if (parsed.is_object() && parsed.contains("error")) {
      Fail(BridgeFailure::kProtocolViolation,
           "adapter reported an error: " + parsed["error"].dump());
    }
    response = ParseNsegHeader(header);
  } catch (const BridgeError&) {
    throw;
  } catch (const std::exception& e) {
    Fail(BridgeFailure::kProtocolViolation,
         std::string("bad response header: ") + e.what());
  }

  const std::size_t element_size =
      response.dtype() == NsegDtype::kF32 ? sizeof(float) : sizeof(std::uint16_t);
  std::string payload(response.element_count() * element_size, '\0');
  ReadExact(payload.data(), payload.size());
  std::istringstream payload_stream(payload);
  ReadNsegPayload(payload_stream, response);

  if (request.op == BridgeOp::kSegment) {
    const std::vector<std::size_t> expected = {tensor.shape[0], tensor.shape[1]};
    if (response.dtype() != NsegDtype::kU16 || response.shape != expected) {
      Fail(BridgeFailure::kBadShape,
           "segment response must be u16 [H, W] matching the request");
    }
  } else {
    if (response.dtype() != NsegDtype::kF32 || response.shape != tensor.shape) {
      Fail(BridgeFailure::kBadShape,
           "denoise response must be f32 with the request's shape");
    }
  }
  return response;
}

BridgePool::BridgePool(const BridgeOptions& options, std::size_t size) {
  size = std::max<std::size_t>(size, 1);
  for (std::size_t i = 0; i < size; ++i) {
    processes_.push_back(std::make_unique<BridgeProcess>(options));
  }
  busy_.assign(size, false);
}

const BridgeHandshake& BridgePool::handshake() const {
  return processes_.front()->handshake();
}

NsegTensor BridgePool::Call(const BridgeRequest& request,
                            const NsegTensor& tensor) {
  std::size_t slot = 0;
  {
    std::unique_lock lock(mu_);
    idle_.wait(lock, [&] {
      return std::find(busy_.begin(), busy_.end(), false) != busy_.end();
    });
    slot = static_cast<std::size_t>(
        std::find(busy_.begin(), busy_.end(), false) - busy_.begin());
    busy_[slot] = true;
  }
  struct Release {
    BridgePool* pool;
    std::size_t slot;
    ~Release() {
      {
        std::lock_guard lock(pool->mu_);
        pool->busy_[slot] = false;
      }
      pool->idle_.notify_one();
    }
  } release{this, slot};
  return processes_[slot]->Call(request, tensor);
}

BridgeSegmenter::BridgeSegmenter(std::shared_ptr<BridgePool> pool)
    : pool_(std::move(pool)) {
  const BridgeHandshake& hello = pool_->handshake();
  if (!hello.supports("segment")) {
    throw BridgeError(BridgeFailure::kProtocolViolation,
                      "adapter does not offer 'segment'");
  }
  if (hello.num_classes < 2 || hello.num_classes > kMaxClasses) {
    throw BridgeError(BridgeFailure::kProtocolViolation,
                      "adapter declared an invalid class count");
  }
}

std::size_t BridgeSegmenter::num_classes() const {
  return pool_->handshake().num_classes;
}

LabelMap BridgeSegmenter::Segment(const RealGrid& x) const {
  const NsegTensor response =
      pool_->Call(BridgeRequest{BridgeOp::kSegment, 0}, ToTensor(x));
  for (std::uint16_t label : response.u16()) {
    if (label >= num_classes()) {
      throw BridgeError(BridgeFailure::kBadShape,
                        "adapter returned label " + std::to_string(label) +
                            " outside its declared classes");
    }
  }
  return LabelMap(x.shape.height, x.shape.width, num_classes(),
                  response.u16());
}

BridgeDenoiser::BridgeDenoiser(std::shared_ptr<BridgePool> pool)
    : pool_(std::move(pool)) {
  if (!pool_->handshake().supports("denoise")) {
    throw BridgeError(BridgeFailure::kProtocolViolation,
                      "adapter does not offer 'denoise'");
  }
}

RealGrid BridgeDenoiser::PredictClean(const RealGrid& noisy,
                                      std::size_t t) const {
  const NsegTensor response =
      pool_->Call(BridgeRequest{BridgeOp::kDenoise, t}, ToTensor(noisy));
  return RealGrid(noisy.shape, response.f32());
}

}  // namespace certseg
