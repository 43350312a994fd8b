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
#include "certseg/metrics.h"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

#include "certseg/error.h"

namespace certseg {
namespace {

struct Overlap {
  std::size_t predicted = 0;
  std::size_t truth = 0;
  std::size_t both = 0;
};

Overlap CountOverlap(const CertifiedSegmentation& cert, const LabelMap& gt,
                     Label c) {
  if (cert.height() != gt.height() || cert.width() != gt.width()) {
    throw Error(ErrorCode::kShapeMismatch,
                "certified map and ground truth differ in shape");
  }
  Overlap o;
  for (std::size_t i = 0; i < cert.pixels(); ++i) {
    if (!ScoredPixel(cert, i)) continue;
    const bool p = cert[i] == c;
    const bool g = gt[i] == c;
    o.predicted += p;
    o.truth += g;
    o.both += p && g;
  }
  return o;
}

// Order-independent mean: sums sorted values.
double SymmetricMean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::string CsvField(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

}  // namespace

double CertifiedDice(const CertifiedSegmentation& cert, const LabelMap& gt,
                     Label c) {
  const Overlap o = CountOverlap(cert, gt, c);
  if (o.predicted + o.truth == 0) return 1.0;
  return 2.0 * static_cast<double>(o.both) /
         static_cast<double>(o.predicted + o.truth);
}

double CertifiedIou(const CertifiedSegmentation& cert, const LabelMap& gt,
                    Label c) {
  const Overlap o = CountOverlap(cert, gt, c);
  const std::size_t uni = o.predicted + o.truth - o.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(o.both) / static_cast<double>(uni);
}

double AbstainFraction(const CertifiedSegmentation& cert) {
  if (cert.pixels() == 0) return 0.0;
  const auto abstained = std::count(cert.labels().begin(), cert.labels().end(),
                                    cert.abstain_label());
  return static_cast<double>(abstained) / static_cast<double>(cert.pixels());
}

MetricsReport EvaluateImage(const CertifiedSegmentation& cert,
                            const LabelMap& gt) {
  if (cert.num_classes() != gt.num_classes()) {
    throw Error(ErrorCode::kShapeMismatch,
                "certified map and ground truth differ in class count");
  }
  MetricsReport report;
  report.image_count = 1;
  report.abstain_fraction = AbstainFraction(cert);
  for (std::size_t c = 0; c < cert.num_classes(); ++c) {
    const auto label = static_cast<Label>(c);
    report.per_class.push_back(
        {label, CertifiedDice(cert, gt, label), CertifiedIou(cert, gt, label)});
  }
  return report;
}

MetricsReport Aggregate(std::span<const MetricsReport> reports) {
  if (reports.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no images to aggregate");
  }
  const std::size_t classes = reports.front().per_class.size();
  MetricsReport out;
  std::vector<double> abstain;
  for (const MetricsReport& r : reports) {
    if (r.per_class.size() != classes) {
      throw Error(ErrorCode::kShapeMismatch,
                  "reports cover different class sets");
    }
    abstain.push_back(r.abstain_fraction);
    out.image_count += r.image_count;
  }
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> dice;
    std::vector<double> iou;
    const Label id = reports.front().per_class[c].class_id;
    for (const MetricsReport& r : reports) {
      if (r.per_class[c].class_id != id) {
        throw Error(ErrorCode::kShapeMismatch,
                    "reports list classes in different orders");
      }
      dice.push_back(r.per_class[c].dice);
      iou.push_back(r.per_class[c].iou);
    }
    out.per_class.push_back(
        {id, SymmetricMean(std::move(dice)), SymmetricMean(std::move(iou))});
  }
  out.abstain_fraction = SymmetricMean(std::move(abstain));
  return out;
}

void WriteMetricsRows(std::ostream& out, const ReportKey& key,
                      const MetricsReport& report) {
  for (const ClassScore& score : report.per_class) {
    out << fmt::format("{},{},{},{:.6f},{},{:.6f},{:.6f},{:.6f}\n",
                       CsvField(key.dataset), CsvField(key.model), key.sigma,
                       key.radius, score.class_id, score.dice, score.iou,
                       report.abstain_fraction);
  }
}

}  // namespace certseg
