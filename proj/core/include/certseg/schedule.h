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
#ifndef CERTSEG_SCHEDULE_H_
#define CERTSEG_SCHEDULE_H_

#include <cstddef>
#include <span>
#include <vector>

#include "certseg/types.h"

namespace certseg {

// Discrete diffusion noise schedule. alpha_bars[t] is the cumulative
// product of (1 - betas[s]) for s <= t.
class NoiseSchedule {
 public:
  // Throws Error{kDomainError} unless every beta lies in (0, 1).
  explicit NoiseSchedule(std::vector<double> betas);

  std::size_t steps() const { return betas_.size(); }
  std::span<const double> betas() const { return betas_; }
  std::span<const double> alpha_bars() const { return alpha_bars_; }
  double beta(std::size_t t) const { return betas_[t]; }
  double alpha_bar(std::size_t t) const { return alpha_bars_[t]; }

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

inline constexpr std::size_t kDefaultScheduleSteps = 1000;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 0.02;

// betas linearly spaced from beta_start to beta_end inclusive. Throws
// Error{kDomainError} unless steps >= 1 and 0 < beta_start <= beta_end < 1.
NoiseSchedule LinearSchedule(std::size_t steps = kDefaultScheduleSteps,
                             double beta_start = kDefaultBetaStart,
                             double beta_end = kDefaultBetaEnd);

// sqrt((1 - alpha_bar[t]) / alpha_bar[t]): the Gaussian std, relative to a
// unit-scale signal, that x_t carries once divided by sqrt(alpha_bar[t]).
// Throws Error{kIndexError} for t >= steps.
double SigmaAt(const NoiseSchedule& schedule, std::size_t t);

// Smallest t with SigmaAt(t) >= sigma, by binary search. Throws
// Error{kSigmaOutOfRange} when sigma exceeds SigmaAt(steps - 1) and
// Error{kDomainError} when sigma is not positive.
std::size_t TimestepForSigma(const NoiseSchedule& schedule, double sigma);

// Diffusion models work on [-1, 1] while images live on [0, 1]. The map
// v -> 2v - 1 doubles noise, so canonical noise sigma corresponds to 2 sigma
// in the diffusion domain. This is the timestep to use for canonical sigma.
std::size_t TimestepForCanonicalSigma(const NoiseSchedule& schedule,
                                      double sigma);

// sqrt(alpha_bar[t]) * (2 x_rs - 1).
RealGrid ScaleToDiffusion(const RealGrid& x_rs, const NoiseSchedule& schedule,
                          std::size_t t);
// Inverse of ScaleToDiffusion: (y / sqrt(alpha_bar[t]) + 1) / 2.
RealGrid FromDiffusion(const RealGrid& y, const NoiseSchedule& schedule,
                       std::size_t t);

// A model predicting the clean diffusion-domain signal x_0 from x_t.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  // Must return a grid with the input's shape and be deterministic.
  virtual RealGrid PredictClean(const RealGrid& noisy, std::size_t t) const = 0;

  // False if calls must be serialized by the caller.
  virtual bool concurrency_capable() const { return true; }
};

// single_step: one PredictClean call at t.
// multi_step: t + 1 calls at t, t-1, ..., 0, moving x_t to the posterior
// mean of x_{t-1} given the (clipped) clean prediction; no noise is
// injected, so the iteration is deterministic.
// The final prediction is mapped back by v -> (v + 1) / 2 and clamped to
// [0, 1]. Throws Error{kModelOutputError} on a bad shape or non-finite
// output and propagates denoiser exceptions. kNone is rejected with
// Error{kDomainError}.
Image Denoise(DenoiseMode mode, const Denoiser& denoiser,
              const RealGrid& x_ddpm, std::size_t t,
              const NoiseSchedule& schedule);

}  // namespace certseg

#endif  // CERTSEG_SCHEDULE_H_
