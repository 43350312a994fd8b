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
#include <cstring>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "certseg/bridge.h"
#include "certseg/certifier.h"
#include "certseg/error.h"
#include "certseg/models.h"
#include "certseg/nseg.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace certseg {
namespace {

BridgeOptions Adapter(std::vector<std::string> args,
                      std::chrono::milliseconds timeout = std::chrono::seconds(20)) {
  args.insert(args.begin(), CERTSEG_FAKE_ADAPTER);
  return BridgeOptions{args, timeout};
}

BridgeFailure FailureOf(auto&& fn) {
  try {
    fn();
  } catch (const BridgeError& e) {
    return e.failure();
  }
  ADD_FAILURE() << "no BridgeError thrown";
  return BridgeFailure::kTimeout;
}

NsegTensor RandomTensor(std::mt19937_64& rng) {
  const std::vector<std::size_t> shape{1 + rng() % 12, 1 + rng() % 12,
                                       rng() % 2 ? 1u : 3u};
  std::vector<float> values(shape[0] * shape[1] * shape[2]);
  for (float& v : values) {
    const std::uint32_t bits = static_cast<std::uint32_t>(rng());
    std::memcpy(&v, &bits, sizeof(v));
  }
  return NsegTensor{shape, values};
}

TEST(BridgeProcessTest, Handshake) {
  BridgeProcess process(Adapter({"threshold", "0.2,0.6"}));
  EXPECT_EQ(process.handshake().protocol, 1);
  EXPECT_EQ(process.handshake().num_classes, 3u);
  EXPECT_TRUE(process.handshake().supports("segment"));
  EXPECT_TRUE(process.handshake().supports("denoise"));
  EXPECT_FALSE(process.handshake().supports("train"));
}

TEST(BridgeProcessTest, EchoRoundTripsRandomTensorsBitExactly) {
  BridgeProcess process(Adapter({"echo"}));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const NsegTensor t = RandomTensor(rng);
    const NsegTensor back = process.Call({BridgeOp::kDenoise, 7}, t);
    ASSERT_EQ(back.shape, t.shape);
    ASSERT_EQ(std::memcmp(back.f32().data(), t.f32().data(),
                          t.f32().size() * sizeof(float)),
              0);
  }
}

TEST(BridgeProcessTest, UnsupportedOpIsRejectedLocally) {
  BridgeProcess process(Adapter({"echo"}));
  EXPECT_EQ(FailureOf([&] {
              process.Call({BridgeOp::kSegment, 0}, NsegTensor{{1, 1, 1}, std::vector<float>{0}});
            }),
            BridgeFailure::kProtocolViolation);
}

TEST(BridgeSegmenterTest, MatchesBuiltinThreshold) {
  auto pool = std::make_shared<BridgePool>(Adapter({"threshold", "0.3,0.55,0.8"}), 1);
  const BridgeSegmenter external(pool);
  const ThresholdSegmenter builtin({0.3, 0.55, 0.8});
  EXPECT_EQ(external.num_classes(), 4u);
  EXPECT_FALSE(external.concurrency_capable());
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const RealGrid x = testing::RandomGrid(
        rng, {1 + rng() % 16, 1 + rng() % 16, rng() % 2 ? 1u : 3u}, -0.5, 1.5);
    ASSERT_EQ(external.Segment(x), builtin.Segment(x)) << i;
  }
}

TEST(BridgeSegmenterTest, CertificationMatchesBuiltinWithAPool) {
  auto pool = std::make_shared<BridgePool>(Adapter({"threshold", "0.5"}), 3);
  const BridgeSegmenter external(pool);
  EXPECT_TRUE(external.concurrency_capable());
  const ThresholdSegmenter builtin({0.5});
  std::mt19937_64 rng(3);
  const Image x = testing::RandomImage(rng, {12, 12, 1});
  CertifyConfig config;
  config.sigma = 0.1;
  const auto a = CertifyImage(Pipeline{&external}, x, nullptr, config, {4, 0});
  const auto b = CertifyImage(Pipeline{&builtin}, x, nullptr, config, {1, 0});
  EXPECT_EQ(a, b);
}

TEST(BridgeDenoiserTest, EchoActsAsIdentity) {
  auto pool = std::make_shared<BridgePool>(Adapter({"echo"}), 1);
  const BridgeDenoiser external(pool);
  std::mt19937_64 rng(4);
  const RealGrid x = testing::RandomGrid(rng, {5, 5, 3}, -2, 2);
  EXPECT_EQ(external.PredictClean(x, 3).values, x.values);
  EXPECT_THROW(BridgeSegmenter{pool}, BridgeError);
}

TEST(BridgeFailureTest, TruncatedResponseIsProtocolViolation) {
  BridgeProcess process(Adapter({"truncate"}));
  std::mt19937_64 rng(5);
  const NsegTensor t = RandomTensor(rng);
  EXPECT_EQ(FailureOf([&] { process.Call({BridgeOp::kDenoise, 1}, t); }),
            BridgeFailure::kProtocolViolation);
  // A failed process stays failed.
  EXPECT_EQ(FailureOf([&] { process.Call({BridgeOp::kDenoise, 1}, t); }),
            BridgeFailure::kProtocolViolation);
}

TEST(BridgeFailureTest, WrongShapeIsBadShape) {
  BridgeProcess process(Adapter({"bad_shape"}));
  const NsegTensor t{{2, 2, 1}, std::vector<float>(4, 0.5f)};
  EXPECT_EQ(FailureOf([&] { process.Call({BridgeOp::kDenoise, 1}, t); }),
            BridgeFailure::kBadShape);
  BridgeProcess seg(Adapter({"bad_shape"}));
  EXPECT_EQ(FailureOf([&] { seg.Call({BridgeOp::kSegment, 0}, t); }),
            BridgeFailure::kBadShape);
}

TEST(BridgeFailureTest, LabelOutsideDeclaredClassesIsBadShape) {
  auto pool = std::make_shared<BridgePool>(Adapter({"bad_label"}), 1);
  const BridgeSegmenter external(pool);
  EXPECT_EQ(FailureOf([&] { external.Segment(RealGrid({2, 2, 1}, 0.0f)); }),
            BridgeFailure::kBadShape);
}

TEST(BridgeFailureTest, ExitIsProcessExit) {
  BridgeProcess process(Adapter({"exit"}));
  const NsegTensor t{{1, 1, 1}, std::vector<float>{0.0f}};
  EXPECT_EQ(FailureOf([&] { process.Call({BridgeOp::kSegment, 0}, t); }),
            BridgeFailure::kProcessExit);
}

TEST(BridgeFailureTest, ErrorFrameIsProtocolViolation) {
  BridgeProcess process(Adapter({"error"}));
  const NsegTensor t{{1, 1, 1}, std::vector<float>{0.0f}};
  try {
    process.Call({BridgeOp::kDenoise, 2}, t);
    ADD_FAILURE();
  } catch (const BridgeError& e) {
    EXPECT_EQ(e.failure(), BridgeFailure::kProtocolViolation);
    EXPECT_NE(std::string(e.what()).find("model exploded"), std::string::npos);
  }
}

TEST(BridgeFailureTest, SilentAdapterTimesOut) {
  BridgeProcess process(Adapter({"hang"}, std::chrono::milliseconds(300)));
  const NsegTensor t{{1, 1, 1}, std::vector<float>{0.0f}};
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(FailureOf([&] { process.Call({BridgeOp::kDenoise, 2}, t); }),
            BridgeFailure::kTimeout);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));
}

TEST(BridgeFailureTest, HandshakeProblems) {
  EXPECT_EQ(FailureOf([] { BridgeProcess p(Adapter({"bad_handshake"})); }),
            BridgeFailure::kProtocolViolation);
  EXPECT_EQ(FailureOf([] { BridgeProcess p(Adapter({"no_handshake"})); }),
            BridgeFailure::kProcessExit);
  EXPECT_EQ(FailureOf([] {
              BridgeProcess p(BridgeOptions{{"/nonexistent/certseg-adapter"}});
            }),
            BridgeFailure::kProcessExit);
}

TEST(BridgeFailureTest, NonImageRequestIsBadShape) {
  BridgeProcess process(Adapter({"echo"}));
  EXPECT_EQ(FailureOf([&] {
              process.Call({BridgeOp::kDenoise, 0},
                           NsegTensor{{2, 2}, std::vector<std::uint16_t>(4, 0)});
            }),
            BridgeFailure::kBadShape);
}

}  // namespace
}  // namespace certseg
