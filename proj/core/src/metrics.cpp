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

#include "stenet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stenet/errors.hpp"

namespace stenet {

double dice(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> target) {
  if (pred.size() != target.size()) throw ShapeError("dice: masks differ in size");
  std::size_t inter = 0;
  std::size_t p = 0;
  std::size_t t = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    p += pred[i] != 0;
    t += target[i] != 0;
    inter += (pred[i] != 0) && (target[i] != 0);
  }
  if (p + t == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(p + t);
}

double dice(const BinaryMask& pred, const BinaryMask& target) {
  if (pred.height() != target.height() || pred.width() != target.width()) {
    throw ShapeError("dice: masks differ in shape");
  }
  return dice(pred.values(), target.values());
}

BinaryMask threshold(const SoftSegmentation& soft, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("threshold must lie in [0,1]");
  std::vector<std::uint8_t> out(soft.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = soft.values()[i] >= t ? 1 : 0;
  return BinaryMask(soft.height(), soft.width(), std::move(out));
}

PrCurve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ShapeError("pr_curve: scores and labels differ in size");
  PrCurve curve;
  curve.total_count = scores.size();
  curve.positive_count = static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](std::uint8_t v) { return v != 0; }));
  if (curve.positive_count == 0) {
    throw UndefinedMetricError("precision-recall is undefined without positive labels");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      tp += labels[order[i]] != 0;
      ++seen;
      ++i;
    }
    curve.points.push_back({static_cast<double>(tp) / static_cast<double>(curve.positive_count),
                            static_cast<double>(tp) / static_cast<double>(seen), s});
  }
  return curve;
}

double prauc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  for (double s : scores) {
    if (std::isnan(s)) throw NumericError("prauc: NaN score");
  }
  const PrCurve curve = pr_curve(scores, labels);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const auto& p : curve.points) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return std::clamp(ap, 0.0, 1.0);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

}  // namespace stenet
