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
#ifndef CERTSEG_SMOOTHING_H_
#define CERTSEG_SMOOTHING_H_

#include <cstdint>

#include "certseg/types.h"

namespace certseg {

// Standard normal CDF, evaluated through erfc so both tails keep relative
// precision.
double StdNormalCdf(double z);

// Inverse of StdNormalCdf. Acklam's rational approximation followed by one
// Newton step against the erfc-based CDF; absolute error is below 1e-9 on
// (0, 1). Throws Error{kDomainError} for p outside (0, 1).
double StdNormalQuantile(double p);

// sigma * StdNormalQuantile(p): the l2 radius within which a smoothed
// prediction with top-class probability p cannot change. The certifier
// calls it with p = tau, the threshold its per-pixel test establishes; with
// the true smoothed probability it gives the exact (unestimated) radius.
// Throws Error{kDomainError} if sigma <= 0 or p is outside (0.5, 1).
double CertifiedRadius(double sigma, double p);

// Additive Gaussian perturbation shaped like an image.
struct NoiseSample {
  RealGrid noise;
  double sigma = 0.0;
};

// i.i.d. N(0, sigma^2) entries drawn from the stream identified by
// stream_seed (see DeriveStreamSeed). Throws Error{kDomainError} if
// sigma <= 0.
NoiseSample SampleNoise(const GridShape& shape, double sigma,
                        std::uint64_t stream_seed);

// Elementwise x + eta. The sum is deliberately left unclamped.
// Throws Error{kShapeMismatch}.
RealGrid AddNoise(const Image& x, const NoiseSample& eta);
RealGrid AddNoise(const RealGrid& x, const NoiseSample& eta);

}  // namespace certseg

#endif  // CERTSEG_SMOOTHING_H_
