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
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stenet/data_io.hpp"
#include "stenet/metrics.hpp"
#include "stenet/mps.hpp"
#include "stenet/segmenter.hpp"

namespace stenet {

struct TrainConfig {
  double learning_rate = 5e-4;
  int batch_size = 1;  // whole images per optimizer step
  int patience = 10;
  int max_epochs = 200;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  int stride = 8;
  int local_dim = 4;
  int bond_dim = 4;
  int snapshot_every = 0;  // 0 disables snapshots
  std::string feature_map = kSinusoidalFeatureMap;
  InitScheme init = InitScheme::kUnitResponse;
  double init_noise = 1e-2;
  PadMode pad = PadMode::kError;
  int threads = 1;
  // Zeroes the wall-clock column of the history so reruns are byte-identical.
  bool deterministic = false;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_dice = 0.0;
  double val_prauc = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::optional<int> best_epoch;  // epoch number with maximal val_dice, earliest on ties

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct AdamHyper {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : first_moment(n, 0.0), second_moment(n, 0.0) {}
};

/// Bias-corrected Adam update, applied in parameter index order.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& hyper);

struct BceResult {
  double loss = 0.0;          // mean over elements
  std::vector<double> grad;   // d loss / d logit
};

/// Mean of max(z,0) - t z + log(1 + exp(-|z|)); gradient (sigmoid(z) - t) / n.
BceResult bce_with_logits(std::span<const double> logits, std::span<const std::uint8_t> targets);

/// Summed BCE over one image with per-logit gradients scaled by `scale`,
/// accumulated into `grad` (same layout as flatten_parameters).
double image_loss_and_gradient(const MpsModel& model, const Sample& sample, double scale,
                               std::span<double> grad);

struct EvaluationResult {
  MeanStd dice;
  double prauc = 0.0;
  std::vector<double> per_image_dice;
  double seconds_per_image = 0.0;
};

EvaluationResult evaluate(const MpsModel& model, const Dataset& dataset,
                          const SegmentOptions& options = {});
// Scores precomputed soft maps against the dataset masks (same order).
EvaluationResult evaluate_predictions(std::span<const SoftSegmentation> predictions,
                                      const Dataset& dataset);

struct ValidationScores {
  double dice = 0.0;
  double prauc = 0.0;
};

struct TrainHooks {
  std::function<void(const EpochRecord&, const MpsModel& current)> on_epoch;
  std::function<void(const EpochRecord&, const MpsModel& best)> on_improvement;
  std::function<void(int epoch, const MpsModel& current)> on_snapshot;
  // Replaces the built-in validation pass when set.
  std::function<ValidationScores(const MpsModel&, int epoch)> validation;
};

struct TrainResult {
  MpsModel model;  // parameters from the best validation epoch
  TrainHistory history;
};

TrainResult train(MpsModel initial, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace stenet
