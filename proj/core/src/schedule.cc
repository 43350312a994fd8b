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
#include "certseg/schedule.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "certseg/error.h"

namespace certseg {

NoiseSchedule::NoiseSchedule(std::vector<double> betas)
    : betas_(std::move(betas)) {
  if (betas_.empty()) {
    throw Error(ErrorCode::kDomainError, "schedule needs at least one step");
  }
  alpha_bars_.reserve(betas_.size());
  double running = 1.0;
  for (double beta : betas_) {
    if (!(beta > 0.0 && beta < 1.0)) {
      throw Error(ErrorCode::kDomainError, "betas must lie in (0, 1)");
    }
    running *= 1.0 - beta;
    alpha_bars_.push_back(running);
  }
}

NoiseSchedule LinearSchedule(std::size_t steps, double beta_start,
                             double beta_end) {
  if (steps < 1) {
    throw Error(ErrorCode::kDomainError, "schedule needs at least one step");
  }
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw Error(ErrorCode::kDomainError,
                "need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(steps);
  if (steps == 1) {
    betas[0] = beta_start;
  } else {
    const double step =
        (beta_end - beta_start) / static_cast<double>(steps - 1);
    for (std::size_t t = 0; t < steps; ++t) {
      betas[t] = beta_start + step * static_cast<double>(t);
    }
    betas.back() = beta_end;
  }
  return NoiseSchedule(std::move(betas));
}

double SigmaAt(const NoiseSchedule& schedule, std::size_t t) {
  if (t >= schedule.steps()) {
    throw Error(ErrorCode::kIndexError,
                "timestep " + std::to_string(t) + " outside schedule of " +
                    std::to_string(schedule.steps()) + " steps");
  }
  const double a = schedule.alpha_bar(t);
  return std::sqrt((1.0 - a) / a);
}

std::size_t TimestepForSigma(const NoiseSchedule& schedule, double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::kDomainError, "sigma must be positive");
  }
  const std::size_t last = schedule.steps() - 1;
  if (sigma > SigmaAt(schedule, last)) {
    throw Error(ErrorCode::kSigmaOutOfRange,
                "sigma " + std::to_string(sigma) +
                    " exceeds the schedule's terminal noise level " +
                    std::to_string(SigmaAt(schedule, last)));
  }
  std::size_t lo = 0;
  std::size_t hi = last;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (SigmaAt(schedule, mid) >= sigma) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

std::size_t TimestepForCanonicalSigma(const NoiseSchedule& schedule,
                                      double sigma) {
  return TimestepForSigma(schedule, 2.0 * sigma);
}

RealGrid ScaleToDiffusion(const RealGrid& x_rs, const NoiseSchedule& schedule,
                          std::size_t t) {
  const double scale = std::sqrt(schedule.alpha_bars()[t]);
  RealGrid out(x_rs.shape);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] =
        static_cast<float>(scale * (2.0 * x_rs.values[i] - 1.0));
  }
  return out;
}

RealGrid FromDiffusion(const RealGrid& y, const NoiseSchedule& schedule,
                       std::size_t t) {
  const double scale = std::sqrt(schedule.alpha_bars()[t]);
  RealGrid out(y.shape);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = static_cast<float>((y.values[i] / scale + 1.0) / 2.0);
  }
  return out;
}

namespace {

RealGrid CheckedPrediction(const Denoiser& denoiser, const RealGrid& x_t,
                           std::size_t t) {
  RealGrid x0 = denoiser.PredictClean(x_t, t);
  if (x0.shape != x_t.shape || x0.values.size() != x_t.values.size()) {
    throw Error(ErrorCode::kModelOutputError,
                "denoiser returned a grid of the wrong shape");
  }
  for (float v : x0.values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kModelOutputError,
                  "denoiser returned a non-finite value");
    }
  }
  return x0;
}

}  // namespace

Image Denoise(DenoiseMode mode, const Denoiser& denoiser,
              const RealGrid& x_ddpm, std::size_t t,
              const NoiseSchedule& schedule) {
  if (t >= schedule.steps()) {
    throw Error(ErrorCode::kIndexError, "denoise timestep out of range");
  }
  RealGrid x0;
  switch (mode) {
    case DenoiseMode::kNone:
      throw Error(ErrorCode::kDomainError, "Denoise called with mode none");
    case DenoiseMode::kSingleStep:
      x0 = CheckedPrediction(denoiser, x_ddpm, t);
      break;
    case DenoiseMode::kMultiStep: {
      RealGrid x_t = x_ddpm;
      for (std::size_t step = t + 1; step-- > 0;) {
        x0 = CheckedPrediction(denoiser, x_t, step);
        if (step == 0) break;
        for (float& v : x0.values) v = std::clamp(v, -1.0f, 1.0f);
        const double ab = schedule.alpha_bar(step);
        const double ab_prev = schedule.alpha_bar(step - 1);
        const double beta = schedule.beta(step);
        const double coef_clean = beta * std::sqrt(ab_prev) / (1.0 - ab);
        const double coef_noisy =
            (1.0 - ab_prev) * std::sqrt(1.0 - beta) / (1.0 - ab);
        for (std::size_t i = 0; i < x_t.values.size(); ++i) {
          x_t.values[i] = static_cast<float>(coef_clean * x0.values[i] +
                                             coef_noisy * x_t.values[i]);
        }
      }
      break;
    }
  }
  for (float& v : x0.values) {
    v = std::clamp((v + 1.0f) * 0.5f, 0.0f, 1.0f);
  }
  return ValidateImage(std::move(x0));
}

}  // namespace certseg
