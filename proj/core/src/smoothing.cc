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
#include "certseg/smoothing.h"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "certseg/error.h"
#include "certseg/random.h"

namespace certseg {
namespace {

// P. J. Acklam, "An algorithm for computing the inverse normal cumulative
// distribution function" (relative error 1.15e-9 before refinement).
constexpr std::array<double, 6> kCentralNum = {
    -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
    1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
constexpr std::array<double, 5> kCentralDen = {
    -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
    6.680131188771972e+01,  -1.328068155288572e+01};
constexpr std::array<double, 6> kTailNum = {
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
    -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
constexpr std::array<double, 4> kTailDen = {
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
    3.754408661907416e+00};
constexpr double kLowBreak = 0.02425;

template <std::size_t N>
double Horner(const std::array<double, N>& coefficients, double x) {
  double acc = 0.0;
  for (double c : coefficients) acc = acc * x + c;
  return acc;
}

// Lower-tail approximation for q = min(p, 1 - p) < kLowBreak.
double TailApproximation(double q) {
  const double r = std::sqrt(-2.0 * std::log(q));
  return Horner(kTailNum, r) / (Horner(kTailDen, r) * r + 1.0);
}

double StdNormalPdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double StdNormalCdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double StdNormalQuantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kDomainError,
                "quantile argument must lie in (0, 1), got " +
                    std::to_string(p));
  }
  if (p == 0.5) return 0.0;

  double z;
  if (p < kLowBreak) {
    z = TailApproximation(p);
  } else if (p > 1.0 - kLowBreak) {
    z = -TailApproximation(1.0 - p);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    z = Horner(kCentralNum, r) * q / (Horner(kCentralDen, r) * r + 1.0);
  }

  // Newton step on the tail the point lives in; 1 - p is exact for p >= 0.5.
  const double density = StdNormalPdf(z);
  if (p < 0.5) {
    z -= (StdNormalCdf(z) - p) / density;
  } else {
    const double upper = 0.5 * std::erfc(z / std::numbers::sqrt2);
    z += (upper - (1.0 - p)) / density;
  }
  return z;
}

double CertifiedRadius(double sigma, double p) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kDomainError, "sigma must be positive");
  }
  if (!(p > 0.5 && p < 1.0)) {
    throw Error(ErrorCode::kDomainError,
                "radius needs a probability in (0.5, 1), got " +
                    std::to_string(p));
  }
  return sigma * StdNormalQuantile(p);
}

NoiseSample SampleNoise(const GridShape& shape, double sigma,
                        std::uint64_t stream_seed) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kDomainError, "noise sigma must be positive");
  }
  NoiseSample sample{RealGrid(shape), sigma};
  StreamRng rng(stream_seed);
  for (float& v : sample.noise.values) {
    v = static_cast<float>(sigma * rng.NextNormal());
  }
  return sample;
}

RealGrid AddNoise(const RealGrid& x, const NoiseSample& eta) {
  if (x.shape != eta.noise.shape) {
    throw Error(ErrorCode::kShapeMismatch,
                "noise shape does not match the image");
  }
  RealGrid out(x.shape);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = x.values[i] + eta.noise.values[i];
  }
  return out;
}

RealGrid AddNoise(const Image& x, const NoiseSample& eta) {
  return AddNoise(x.grid(), eta);
}

}  // namespace certseg
