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
#ifndef CERTSEG_METRICS_H_
#define CERTSEG_METRICS_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "certseg/types.h"

namespace certseg {

// Whether pixel i takes part in certified scores. Abstained positions are
// dropped from both the prediction and the ground truth sets.
inline bool ScoredPixel(const CertifiedSegmentation& cert, std::size_t i) {
  return !cert.is_abstain(i);
}

// 2|P & G| / (|P| + |G|) over scored pixels, where P = {cert == c} and
// G = {gt == c}. 1.0 when both sets are empty. Throws Error{kShapeMismatch}.
double CertifiedDice(const CertifiedSegmentation& cert, const LabelMap& gt,
                     Label c);
// |P & G| / |P | G| over scored pixels; 1.0 when both sets are empty.
double CertifiedIou(const CertifiedSegmentation& cert, const LabelMap& gt,
                    Label c);
double AbstainFraction(const CertifiedSegmentation& cert);

struct ClassScore {
  Label class_id = 0;
  double dice = 1.0;
  double iou = 1.0;

  friend bool operator==(const ClassScore&, const ClassScore&) = default;
};

struct MetricsReport {
  std::vector<ClassScore> per_class;
  double abstain_fraction = 0.0;
  std::size_t image_count = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Scores every class 0..k-1 on one image.
MetricsReport EvaluateImage(const CertifiedSegmentation& cert,
                            const LabelMap& gt);

// Unweighted mean over images of each class score and of the abstain
// fraction. The result does not depend on the order of the reports.
// Throws Error{kEmptyDataset} for no reports and Error{kShapeMismatch} when
// the reports cover different classes.
MetricsReport Aggregate(std::span<const MetricsReport> reports);

// Identifies one group of rows in the metrics CSV.
struct ReportKey {
  std::string dataset;
  std::string model;
  double sigma = 0.0;
  double radius = 0.0;
};

inline constexpr const char* kMetricsCsvHeader =
    "dataset,model,sigma,radius,class,dice,iou,abstain_fraction\n";

// One row per class; no header.
void WriteMetricsRows(std::ostream& out, const ReportKey& key,
                      const MetricsReport& report);

}  // namespace certseg

#endif  // CERTSEG_METRICS_H_
