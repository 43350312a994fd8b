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
#include <cmath>
#include <random>
#include <vector>

#include "certseg/error.h"
#include "certseg/models.h"
#include "certseg/schedule.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace certseg {
namespace {

std::size_t LinearScan(const NoiseSchedule& s, double sigma) {
  for (std::size_t t = 0; t < s.steps(); ++t) {
    if (SigmaAt(s, t) >= sigma) return t;
  }
  return s.steps();
}

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no certseg::Error thrown";
  return ErrorCode::kIoError;
}

class SpyDenoiser : public Denoiser {
 public:
  RealGrid PredictClean(const RealGrid& noisy, std::size_t t) const override {
    ++calls;
    timesteps.push_back(t);
    return noisy;
  }
  mutable int calls = 0;
  mutable std::vector<std::size_t> timesteps;
};

class BrokenDenoiser : public Denoiser {
 public:
  explicit BrokenDenoiser(bool nan) : nan_(nan) {}
  RealGrid PredictClean(const RealGrid& noisy, std::size_t) const override {
    if (!nan_) return RealGrid({1, 1, 1}, 0.0f);
    RealGrid out = noisy;
    out.values[0] = std::nanf("");
    return out;
  }

 private:
  bool nan_;
};

TEST(LinearScheduleTest, SingleStep) {
  const NoiseSchedule s = LinearSchedule(1, 0.01, 0.02);
  ASSERT_EQ(s.steps(), 1u);
  EXPECT_EQ(s.beta(0), 0.01);
  EXPECT_EQ(s.alpha_bar(0), 1.0 - 0.01);
}

TEST(LinearScheduleTest, DefaultTerminalAlphaBar) {
  const NoiseSchedule s = LinearSchedule();
  ASSERT_EQ(s.steps(), 1000u);
  EXPECT_EQ(s.beta(0), 1e-4);
  EXPECT_EQ(s.beta(999), 0.02);
  const double oracle = testing::TerminalAlphaBar(1000, 1e-4, 0.02);
  EXPECT_NEAR(s.alpha_bar(999), oracle, 1e-10 * oracle);
  EXPECT_NEAR(s.alpha_bar(999), 4.04e-5, 0.005e-5);
}

TEST(LinearScheduleTest, AlphaBarsStrictlyDecrease) {
  const NoiseSchedule s = LinearSchedule();
  EXPECT_EQ(s.alpha_bar(0), 1.0 - s.beta(0));
  for (std::size_t t = 0; t + 1 < s.steps(); ++t) {
    ASSERT_LT(s.alpha_bar(t + 1), s.alpha_bar(t));
    ASSERT_GT(s.beta(t), 0.0);
    ASSERT_LT(s.beta(t), 1.0);
  }
}

TEST(LinearScheduleTest, RejectsBadParameters) {
  EXPECT_EQ(CodeOf([] { LinearSchedule(0, 1e-4, 0.02); }), ErrorCode::kDomainError);
  EXPECT_EQ(CodeOf([] { LinearSchedule(10, 0.0, 0.02); }), ErrorCode::kDomainError);
  EXPECT_EQ(CodeOf([] { LinearSchedule(10, 0.03, 0.02); }), ErrorCode::kDomainError);
  EXPECT_EQ(CodeOf([] { LinearSchedule(10, 1e-4, 1.0); }), ErrorCode::kDomainError);
}

TEST(SigmaAtTest, ClosedFormPoints) {
  EXPECT_DOUBLE_EQ(SigmaAt(NoiseSchedule({0.5}), 0), 1.0);
  EXPECT_DOUBLE_EQ(SigmaAt(NoiseSchedule({0.2}), 0), 0.5);
  const NoiseSchedule s = LinearSchedule();
  const double ab = testing::TerminalAlphaBar(1000, 1e-4, 0.02);
  EXPECT_NEAR(SigmaAt(s, 999), std::sqrt((1 - ab) / ab), 1e-8);
  // 157.3 comes from alpha_bar rounded to 4.04e-5; +-0.005e-5 there moves
  // sigma by about 0.2.
  EXPECT_NEAR(SigmaAt(s, 999), 157.3, 0.2);
  EXPECT_EQ(CodeOf([&] { SigmaAt(s, 1000); }), ErrorCode::kIndexError);
}

TEST(SigmaAtTest, StrictlyIncreasing) {
  const NoiseSchedule s = LinearSchedule();
  for (std::size_t t = 0; t + 1 < s.steps(); ++t) {
    ASSERT_LT(SigmaAt(s, t), SigmaAt(s, t + 1));
  }
}

TEST(TimestepForSigmaTest, Examples) {
  const NoiseSchedule s = LinearSchedule();
  EXPECT_EQ(TimestepForSigma(s, 1e-12), 0u);
  EXPECT_EQ(TimestepForSigma(s, SigmaAt(s, 137)), 137u);
  EXPECT_EQ(TimestepForSigma(s, 0.25), LinearScan(s, 0.25));
  EXPECT_EQ(TimestepForSigma(s, SigmaAt(s, 999)), 999u);
}

TEST(TimestepForSigmaTest, AgreesWithLinearScan) {
  const NoiseSchedule s = LinearSchedule();
  std::mt19937_64 rng(17);
  for (int i = 0; i < 2000; ++i) {
    const double sigma = std::exp(std::log(1e-3) + testing::Uniform(rng) *
                                                       std::log(157.0 / 1e-3));
    const std::size_t t = TimestepForSigma(s, sigma);
    ASSERT_EQ(t, LinearScan(s, sigma)) << sigma;
    ASSERT_GE(SigmaAt(s, t), sigma);
    if (t > 0) ASSERT_LT(SigmaAt(s, t - 1), sigma);
  }
  for (std::size_t t = 0; t < s.steps(); ++t) {
    ASSERT_EQ(TimestepForSigma(s, SigmaAt(s, t)), t);
  }
}

TEST(TimestepForSigmaTest, Monotone) {
  const NoiseSchedule s = LinearSchedule();
  std::size_t last = 0;
  for (double sigma = 0.001; sigma < 150; sigma *= 1.01) {
    const std::size_t t = TimestepForSigma(s, sigma);
    ASSERT_GE(t, last);
    last = t;
  }
}

TEST(TimestepForSigmaTest, Errors) {
  const NoiseSchedule s = LinearSchedule();
  EXPECT_EQ(CodeOf([&] { TimestepForSigma(s, 158.0); }),
            ErrorCode::kSigmaOutOfRange);
  EXPECT_EQ(CodeOf([&] { TimestepForSigma(s, 0.0); }), ErrorCode::kDomainError);
  EXPECT_EQ(CodeOf([&] { TimestepForCanonicalSigma(s, 79.0); }),
            ErrorCode::kSigmaOutOfRange);
}

TEST(TimestepForSigmaTest, CanonicalSigmaIsDoubled) {
  const NoiseSchedule s = LinearSchedule();
  for (double sigma : {0.12, 0.25, 0.5, 1.0}) {
    EXPECT_EQ(TimestepForCanonicalSigma(s, sigma), TimestepForSigma(s, 2 * sigma));
  }
}

TEST(TimestepForSigmaTest, CanonicalNoiseMatchesDiffusionNoiseLevel) {
  // Noise of std sigma on [0,1] becomes sqrt(ab) * 2 sigma after scaling;
  // relative to the clean signal sqrt(ab)(2x-1) that is noise level 2 sigma,
  // which t* brackets on the schedule grid.
  const NoiseSchedule s = LinearSchedule();
  const double sigma = 0.25;
  const std::size_t t = TimestepForCanonicalSigma(s, sigma);
  RealGrid clean({1, 1, 1}, 0.3f);
  RealGrid noisy({1, 1, 1}, static_cast<float>(0.3 + sigma));
  const double diff = ScaleToDiffusion(noisy, s, t).values[0] -
                      ScaleToDiffusion(clean, s, t).values[0];
  EXPECT_NEAR(diff / std::sqrt(s.alpha_bar(t)), 2 * sigma, 1e-6);
  EXPECT_GE(SigmaAt(s, t), 2 * sigma);
  EXPECT_LT(SigmaAt(s, t - 1), 2 * sigma);
}

TEST(ScaleToDiffusionTest, Examples) {
  const NoiseSchedule unit({1e-300});
  ASSERT_EQ(unit.alpha_bar(0), 1.0);
  RealGrid x({1, 3, 1}, std::vector<float>{0.0f, 0.25f, 1.0f});
  EXPECT_EQ(ScaleToDiffusion(x, unit, 0).values,
            (std::vector<float>{-1.0f, -0.5f, 1.0f}));

  const NoiseSchedule s = LinearSchedule();
  RealGrid half({3, 3, 1}, 0.5f);
  for (std::size_t t : {0u, 100u, 999u}) {
    for (float v : ScaleToDiffusion(half, s, t).values) EXPECT_EQ(v, 0.0f);
  }
}

TEST(ScaleToDiffusionTest, FromDiffusionInverts) {
  const NoiseSchedule s = LinearSchedule();
  std::mt19937_64 rng(4);
  const RealGrid x = testing::RandomGrid(rng, {8, 8, 3}, -1.0, 2.0);
  for (std::size_t t : {0u, 50u, 500u, 999u}) {
    const RealGrid back = FromDiffusion(ScaleToDiffusion(x, s, t), s, t);
    for (std::size_t i = 0; i < x.values.size(); ++i) {
      ASSERT_NEAR(back.values[i], x.values[i], 1e-6) << t;
    }
  }
}

TEST(DenoiseTest, IdentityAtStepZeroReturnsInput) {
  const NoiseSchedule s = LinearSchedule();
  std::mt19937_64 rng(6);
  const Image x = testing::RandomImage(rng, {6, 6, 1});
  const IdentityDenoiser identity;
  for (DenoiseMode mode : {DenoiseMode::kSingleStep, DenoiseMode::kMultiStep}) {
    const Image out =
        Denoise(mode, identity, ScaleToDiffusion(x.grid(), s, 0), 0, s);
    for (std::size_t i = 0; i < x.values().size(); ++i) {
      // sqrt(alpha_bar[0]) differs from 1 by 5e-5.
      EXPECT_NEAR(out.values()[i], x.values()[i], 1e-4);
    }
  }
}

TEST(DenoiseTest, OracleRecoversCleanImageAtAnySigma) {
  const NoiseSchedule s = LinearSchedule();
  std::mt19937_64 rng(7);
  const Image clean = testing::RandomImage(rng, {8, 8, 3});
  const OracleDenoiser oracle(clean);
  for (double sigma : {0.1, 0.5, 2.0, 20.0}) {
    const std::size_t t = TimestepForCanonicalSigma(s, sigma);
    const RealGrid noisy = testing::RandomGrid(rng, {8, 8, 3}, -20.0, 20.0);
    for (DenoiseMode mode : {DenoiseMode::kSingleStep, DenoiseMode::kMultiStep}) {
      const Image out = Denoise(mode, oracle, ScaleToDiffusion(noisy, s, t), t, s);
      for (std::size_t i = 0; i < clean.values().size(); ++i) {
        // v -> 2v-1 -> (w+1)/2 costs at most one rounding step.
        ASSERT_NEAR(out.values()[i], clean.values()[i], 1.2e-7) << sigma;
      }
    }
  }
}

TEST(DenoiseTest, CallCounts) {
  const NoiseSchedule s = LinearSchedule();
  const RealGrid x({4, 4, 1}, 0.1f);
  SpyDenoiser single;
  Denoise(DenoiseMode::kSingleStep, single, x, 42, s);
  EXPECT_EQ(single.calls, 1);
  EXPECT_EQ(single.timesteps, std::vector<std::size_t>{42});
  SpyDenoiser multi;
  Denoise(DenoiseMode::kMultiStep, multi, x, 42, s);
  EXPECT_EQ(multi.calls, 43);
  EXPECT_EQ(multi.timesteps.front(), 42u);
  EXPECT_EQ(multi.timesteps.back(), 0u);
}

TEST(DenoiseTest, OutputIsClampedToUnitInterval) {
  const NoiseSchedule s = LinearSchedule();
  RealGrid x({1, 2, 1}, std::vector<float>{-5.0f, 5.0f});
  const Image out = Denoise(DenoiseMode::kSingleStep, IdentityDenoiser(), x, 3, s);
  EXPECT_EQ(out.values()[0], 0.0f);
  EXPECT_EQ(out.values()[1], 1.0f);
}

TEST(DenoiseTest, Errors) {
  const NoiseSchedule s = LinearSchedule();
  const RealGrid x({2, 2, 1}, 0.0f);
  EXPECT_EQ(CodeOf([&] { Denoise(DenoiseMode::kNone, IdentityDenoiser(), x, 1, s); }),
            ErrorCode::kDomainError);
  EXPECT_EQ(CodeOf([&] { Denoise(DenoiseMode::kSingleStep, BrokenDenoiser(true), x, 1, s); }),
            ErrorCode::kModelOutputError);
  EXPECT_EQ(CodeOf([&] { Denoise(DenoiseMode::kSingleStep, BrokenDenoiser(false), x, 1, s); }),
            ErrorCode::kModelOutputError);
  EXPECT_EQ(CodeOf([&] { Denoise(DenoiseMode::kSingleStep, IdentityDenoiser(), x, 1000, s); }),
            ErrorCode::kIndexError);
}

}  // namespace
}  // namespace certseg
