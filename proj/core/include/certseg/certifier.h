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
#ifndef CERTSEG_CERTIFIER_H_
#define CERTSEG_CERTIFIER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "certseg/models.h"
#include "certseg/schedule.h"
#include "certseg/types.h"

namespace certseg {

// The base pipeline being smoothed: an optional denoiser in front of a
// segmenter. denoiser must be set when the config's denoise_mode is not
// kNone; schedule defaults to LinearSchedule() when null.
struct Pipeline {
  const Segmenter* segmenter = nullptr;
  const Denoiser* denoiser = nullptr;
  const NoiseSchedule* schedule = nullptr;
};

struct ExecutionOptions {
  std::size_t jobs = 1;
  // Position of the image in its dataset; part of every noise stream seed.
  std::uint64_t image_index = 0;
};

enum class SamplePhase : std::uint64_t { kCandidate = 0, kCertification = 1 };

struct SampleBatch {
  std::vector<LabelMap> label_maps;
  SamplePhase source = SamplePhase::kCandidate;
};

// Evaluates the pipeline on `count` noisy copies of x. Sample j of a phase
// uses the noise stream
//   DeriveStreamSeed(config.seed, image_index, (phase << 32) + j),
// so the batch is identical for any number of jobs. With denoising, the
// noisy image is scaled into the diffusion domain at the timestep for
// config.sigma (see TimestepForCanonicalSigma), denoised and mapped back
// before segmentation.
// Throws Error{kModelOutputError} when the segmenter's output does not match
// the image or its declared class count; propagates BridgeError.
SampleBatch CollectSamples(const Pipeline& pipeline, const Image& x,
                           const CertifyConfig& config, std::size_t count,
                           SamplePhase phase,
                           const ExecutionOptions& options = {});

// Per pixel, the most frequent class over the batch; ties go to the
// smallest class id.
LabelMap SelectCandidates(const SampleBatch& batch);

// Per pixel, the number of maps in the batch agreeing with candidates.
std::vector<std::uint32_t> CountAgreement(const SampleBatch& batch,
                                          const LabelMap& candidates);

// P[Binomial(n, tau) >= k], the one-sided p-value for H0: p <= tau after
// observing k agreeing samples out of n. Summed exactly in log space; no
// normal approximation. Throws Error{kDomainError} unless k <= n and
// 0 < tau < 1.
double BinomialPValue(std::size_t k, std::size_t n, double tau);

// Holm step-down procedure at family-wise level alpha. Returns the reject
// mask in input order.
std::vector<bool> HolmCorrect(std::span<const double> p_values, double alpha);

struct PixelTest {
  std::size_t pixel_index = 0;
  Label candidate_class = 0;
  std::uint32_t agree_count = 0;
  double p_value = 1.0;
  bool certified = false;
};

// Certifies every pixel of x. Runs n0 candidate samples, then n fresh
// certification samples, tests H0: p <= tau per pixel, applies Holm over all
// H*W pixels at config.alpha and abstains wherever H0 survives. With
// probability at least 1 - alpha, every certified pixel's smoothed
// prediction is constant on the l2 ball of radius sigma * Phi^-1(tau).
//
// ground_truth, when given, must match the image's height and width. When
// audit is non-null it receives one PixelTest per pixel.
CertifiedSegmentation CertifyImage(const Pipeline& pipeline, const Image& x,
                                   const LabelMap* ground_truth,
                                   const CertifyConfig& config,
                                   const ExecutionOptions& options = {},
                                   std::vector<PixelTest>* audit = nullptr);

}  // namespace certseg

#endif  // CERTSEG_CERTIFIER_H_
