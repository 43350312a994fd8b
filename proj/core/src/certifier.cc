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
#include "certseg/certifier.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>

#include "certseg/error.h"
#include "certseg/parallel.h"
#include "certseg/random.h"
#include "certseg/smoothing.h"

namespace certseg {
namespace {

double PairwiseSum(std::span<const double> values) {
  if (values.size() <= 8) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum;
  }
  const std::size_t half = values.size() / 2;
  return PairwiseSum(values.first(half)) + PairwiseSum(values.subspan(half));
}

// Serializes calls into a model that cannot run concurrently.
class CallGate {
 public:
  explicit CallGate(bool concurrent) : concurrent_(concurrent) {}

  template <typename Fn>
  auto Run(Fn&& fn) {
    if (concurrent_) return fn();
    std::lock_guard lock(mu_);
    return fn();
  }

 private:
  bool concurrent_;
  std::mutex mu_;
};

}  // namespace

SampleBatch CollectSamples(const Pipeline& pipeline, const Image& x,
                           const CertifyConfig& config, std::size_t count,
                           SamplePhase phase,
                           const ExecutionOptions& options) {
  if (pipeline.segmenter == nullptr) {
    throw Error(ErrorCode::kDomainError, "pipeline has no segmenter");
  }
  if (count == 0) {
    throw Error(ErrorCode::kDomainError, "sample count must be positive");
  }
  config.Validate();
  const Segmenter& segmenter = *pipeline.segmenter;
  const bool denoising = config.denoise_mode != DenoiseMode::kNone;

  std::optional<NoiseSchedule> default_schedule;
  const NoiseSchedule* schedule = pipeline.schedule;
  std::size_t t_star = 0;
  if (denoising) {
    if (pipeline.denoiser == nullptr) {
      throw Error(ErrorCode::kDomainError,
                  "denoise mode " +
                      std::string(DenoiseModeName(config.denoise_mode)) +
                      " needs a denoiser");
    }
    if (schedule == nullptr) {
      default_schedule.emplace(LinearSchedule());
      schedule = &*default_schedule;
    }
    t_star = TimestepForCanonicalSigma(*schedule, config.sigma);
  }

  CallGate segment_gate(segmenter.concurrency_capable());
  CallGate denoise_gate(!denoising || pipeline.denoiser->concurrency_capable());

  SampleBatch batch;
  batch.source = phase;
  batch.label_maps.resize(count);
  const std::uint64_t phase_base = static_cast<std::uint64_t>(phase) << 32;
  const GridShape& shape = x.shape();

  ParallelFor(count, options.jobs, [&](std::size_t j) {
    const std::uint64_t stream =
        DeriveStreamSeed(config.seed, options.image_index, phase_base + j);
    RealGrid noisy = AddNoise(x, SampleNoise(shape, config.sigma, stream));
    LabelMap labels;
    if (denoising) {
      const RealGrid x_ddpm = ScaleToDiffusion(noisy, *schedule, t_star);
      const Image clean = denoise_gate.Run([&] {
        return Denoise(config.denoise_mode, *pipeline.denoiser, x_ddpm, t_star,
                       *schedule);
      });
      labels = segment_gate.Run([&] { return segmenter.Segment(clean.grid()); });
    } else {
      labels = segment_gate.Run([&] { return segmenter.Segment(noisy); });
    }
    if (labels.height() != shape.height || labels.width() != shape.width) {
      throw Error(ErrorCode::kModelOutputError,
                  "segmenter output shape does not match the image");
    }
    if (labels.num_classes() != segmenter.num_classes()) {
      throw Error(ErrorCode::kModelOutputError,
                  "segmenter output class count changed between samples");
    }
    batch.label_maps[j] = std::move(labels);
  });
  return batch;
}

LabelMap SelectCandidates(const SampleBatch& batch) {
  if (batch.label_maps.empty()) {
    throw Error(ErrorCode::kDomainError, "empty sample batch");
  }
  const LabelMap& first = batch.label_maps.front();
  const std::size_t k = first.num_classes();
  const std::size_t pixels = first.pixels();
  for (const LabelMap& map : batch.label_maps) {
    if (map.pixels() != pixels || map.num_classes() != k ||
        map.height() != first.height()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "sample maps disagree in shape or class count");
    }
  }
  std::vector<Label> winners(pixels);
  std::vector<std::uint32_t> counts(k);
  for (std::size_t p = 0; p < pixels; ++p) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const LabelMap& map : batch.label_maps) ++counts[map[p]];
    // max_element returns the first maximum: the smallest class id.
    winners[p] = static_cast<Label>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
  }
  return LabelMap(first.height(), first.width(), k, std::move(winners));
}

std::vector<std::uint32_t> CountAgreement(const SampleBatch& batch,
                                          const LabelMap& candidates) {
  std::vector<std::uint32_t> agree(candidates.pixels(), 0);
  for (const LabelMap& map : batch.label_maps) {
    if (map.pixels() != candidates.pixels()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "sample map does not match the candidate map");
    }
    for (std::size_t p = 0; p < agree.size(); ++p) {
      agree[p] += map[p] == candidates[p];
    }
  }
  return agree;
}

double BinomialPValue(std::size_t k, std::size_t n, double tau) {
  if (k > n) {
    throw Error(ErrorCode::kDomainError,
                "agree count " + std::to_string(k) + " exceeds n = " +
                    std::to_string(n));
  }
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::kDomainError, "tau must lie in (0, 1)");
  }
  if (k == 0) return 1.0;

  const double log_tau = std::log(tau);
  const double log_rest = std::log1p(-tau);
  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);
  auto log_term = [&](std::size_t i) {
    const double di = static_cast<double>(i);
    const double dn_i = static_cast<double>(n - i);
    return log_n_fact - std::lgamma(di + 1.0) - std::lgamma(dn_i + 1.0) +
           di * log_tau + dn_i * log_rest;
  };
  // Sum of terms first..last inclusive, scaled by its largest term.
  auto tail_sum = [&](std::size_t first, std::size_t last) {
    std::vector<double> log_terms(last - first + 1);
    for (std::size_t i = first; i <= last; ++i) log_terms[i - first] = log_term(i);
    const double peak = *std::max_element(log_terms.begin(), log_terms.end());
    for (double& v : log_terms) v = std::exp(v - peak);
    return std::exp(peak) * PairwiseSum(log_terms);
  };
  // Below the mean the upper tail is close to 1; the lower tail is the
  // short sum there and 1 - lower keeps full precision.
  if (static_cast<double>(k) <= static_cast<double>(n) * tau) {
    return std::clamp(1.0 - tail_sum(0, k - 1), 0.0, 1.0);
  }
  return std::min(tail_sum(k, n), 1.0);
}

std::vector<bool> HolmCorrect(std::span<const double> p_values, double alpha) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_values[a] < p_values[b];
  });
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    const double threshold = alpha / static_cast<double>(m - i);
    if (!(p_values[order[i]] <= threshold)) break;
    reject[order[i]] = true;
  }
  return reject;
}

CertifiedSegmentation CertifyImage(const Pipeline& pipeline, const Image& x,
                                   const LabelMap* ground_truth,
                                   const CertifyConfig& config,
                                   const ExecutionOptions& options,
                                   std::vector<PixelTest>* audit) {
  config.Validate();
  const GridShape& shape = x.shape();
  if (ground_truth != nullptr && (ground_truth->height() != shape.height ||
                                  ground_truth->width() != shape.width)) {
    throw Error(ErrorCode::kShapeMismatch,
                "ground truth does not match the image shape");
  }

  const SampleBatch candidate_batch =
      CollectSamples(pipeline, x, config, config.n0, SamplePhase::kCandidate,
                     options);
  const LabelMap candidates = SelectCandidates(candidate_batch);
  const std::size_t k = candidates.num_classes();
  if (ground_truth != nullptr && ground_truth->num_classes() != k) {
    throw Error(ErrorCode::kShapeMismatch,
                "ground truth class count differs from the model's");
  }

  const SampleBatch test_batch = CollectSamples(
      pipeline, x, config, config.n, SamplePhase::kCertification, options);
  const std::vector<std::uint32_t> agree = CountAgreement(test_batch, candidates);

  // p-values depend only on the agree count; evaluate each count once.
  std::vector<double> p_of_count(config.n + 1,
                                 std::numeric_limits<double>::quiet_NaN());
  auto p_value = [&](std::uint32_t count) {
    double& p = p_of_count[count];
    if (std::isnan(p)) p = BinomialPValue(count, config.n, config.tau);
    return p;
  };

  // A count at or below n * tau has p-value >= 1/2 (the binomial median is
  // at least floor(n * tau)), so with alpha < 1/2 Holm can never reject it
  // and the step-down stops before reaching it. Such pixels skip the sort;
  // Holm's thresholds still use the full pixel count m.
  const std::size_t m = candidates.pixels();
  const double cutoff = static_cast<double>(config.n) * config.tau;
  const bool short_circuit = config.alpha < 0.5;
  std::vector<std::size_t> contenders;
  for (std::size_t p = 0; p < m; ++p) {
    if (!short_circuit || static_cast<double>(agree[p]) > cutoff) {
      contenders.push_back(p);
    }
  }
  std::stable_sort(contenders.begin(), contenders.end(),
                   [&](std::size_t a, std::size_t b) {
                     return p_value(agree[a]) < p_value(agree[b]);
                   });

  const Label abstain = static_cast<Label>(k);
  std::vector<Label> labels(m, abstain);
  for (std::size_t i = 0; i < contenders.size(); ++i) {
    const std::size_t pixel = contenders[i];
    const double threshold = config.alpha / static_cast<double>(m - i);
    if (!(p_value(agree[pixel]) <= threshold)) break;
    labels[pixel] = candidates[pixel];
  }

  if (audit != nullptr) {
    audit->clear();
    audit->reserve(m);
    for (std::size_t p = 0; p < m; ++p) {
      audit->push_back(PixelTest{p, candidates[p], agree[p], p_value(agree[p]),
                                 labels[p] != abstain});
    }
  }

  return CertifiedSegmentation(shape.height, shape.width, k, std::move(labels),
                               CertifiedRadius(config.sigma, config.tau),
                               config);
}

}  // namespace certseg
