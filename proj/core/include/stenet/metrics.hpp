// Copyright 2026 The strided-tenet Authors.
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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stenet/image.hpp"

namespace stenet {

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;
};

/// Precision/recall at every distinct score, from the highest threshold to
/// the lowest. Tied scores form a single point.
struct PrCurve {
  std::vector<PrPoint> points;
  std::size_t positive_count = 0;
  std::size_t total_count = 0;
};

/// 2|P & T| / (|P| + |T|); 1.0 when both masks are empty.
double dice(const BinaryMask& pred, const BinaryMask& target);
double dice(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> target);

// value >= t -> 1.
BinaryMask threshold(const SoftSegmentation& soft, double t = 0.5);

PrCurve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Average precision: sum over thresholds of (R_k - R_{k-1}) * P_k.
/// Throws UndefinedMetricError when there are no positive labels.
double prauc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};
MeanStd mean_std(std::span<const double> values);

}  // namespace stenet
