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

#include "stenet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "stenet/errors.hpp"
#include "stenet/parallel.hpp"

namespace stenet {
namespace {

// Patches per gradient work unit. Fixed so the reduction order never depends
// on the number of worker threads.
constexpr std::size_t kPatchChunk = 16;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Mask laid out like PatchBatch::patches.
std::vector<std::uint8_t> mask_patches(const BinaryMask& mask, int stride) {
  std::vector<std::uint8_t> out;
  out.reserve(mask.values().size());
  for (int pr = 0; pr < mask.height() / stride; ++pr) {
    for (int pc = 0; pc < mask.width() / stride; ++pc) {
      for (int r = 0; r < stride; ++r) {
        for (int c = 0; c < stride; ++c) out.push_back(mask(pr * stride + r, pc * stride + c));
      }
    }
  }
  return out;
}

struct PreparedSample {
  PatchBatch patches;
  std::vector<std::uint8_t> labels;
};

PreparedSample prepare(const Sample& sample, int stride, PadMode pad) {
  if (sample.image.height() != sample.mask.height() || sample.image.width() != sample.mask.width()) {
    throw ShapeError("sample '" + sample.name + "': image and mask differ in size");
  }
  if (pad == PadMode::kReflect) {
    const NormalizedImage img = reflect_pad(sample.image, stride);
    const BinaryMask mask = reflect_pad(sample.mask, stride);
    return {extract_patches(img, stride), mask_patches(mask, stride)};
  }
  return {extract_patches(sample.image, stride), mask_patches(sample.mask, stride)};
}

// Accumulates the summed BCE of `count` patches starting at `first` and adds
// scale * dLoss/dparams into `grad`.
double chunk_loss_and_gradient(const MpsModel& model, const PreparedSample& prepared,
                               std::size_t first, std::size_t count, double scale,
                               std::span<double> grad) {
  const DenseTensor features = patch_features(model, prepared.patches, first, count);
  const ForwardResult fwd = forward(model, features);
  const std::size_t m = model.output_dim;
  DenseTensor upstream({count, m});
  auto up = upstream.mutable_data();
  double loss = 0.0;
  const std::uint8_t* labels = prepared.labels.data() + first * m;
  for (std::size_t i = 0; i < count * m; ++i) {
    const double z = fwd.logits[i];
    const double t = labels[i];
    loss += std::max(z, 0.0) - t * z + std::log1p(std::exp(-std::abs(z)));
    up[i] = (sigmoid(z) - t) * scale;
  }
  const auto grads = backward(model, fwd.cache, upstream);
  std::size_t offset = 0;
  for (const auto& g : grads) {
    for (double v : g.data()) grad[offset++] += v;
  }
  return loss;
}

struct WorkUnit {
  std::size_t sample;
  std::size_t first;
  std::size_t count;
};

std::vector<WorkUnit> split_units(std::span<const std::size_t> samples,
                                  const std::vector<PreparedSample>& prepared) {
  std::vector<WorkUnit> units;
  for (std::size_t s : samples) {
    const std::size_t total = prepared[s].patches.count();
    for (std::size_t first = 0; first < total; first += kPatchChunk) {
      units.push_back({s, first, std::min(kPatchChunk, total - first)});
    }
  }
  return units;
}

// Loss sum and gradient over the given samples. Units are evaluated in waves
// of `threads` and folded into the accumulator in unit order.
double batch_loss_and_gradient(const MpsModel& model, const std::vector<PreparedSample>& prepared,
                               std::span<const std::size_t> samples, double scale, int threads,
                               std::vector<double>& grad) {
  const auto units = split_units(samples, prepared);
  const std::size_t n_params = grad.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t wave = static_cast<std::size_t>(std::max(threads, 1));
  std::vector<std::vector<double>> buffers(std::min(wave, units.size()),
                                           std::vector<double>(n_params));
  std::vector<double> losses(buffers.size());
  double loss = 0.0;
  for (std::size_t start = 0; start < units.size(); start += wave) {
    const std::size_t n = std::min(wave, units.size() - start);
    parallel_for(n, threads, [&](std::size_t k) {
      std::fill(buffers[k].begin(), buffers[k].end(), 0.0);
      const WorkUnit& u = units[start + k];
      losses[k] = chunk_loss_and_gradient(model, prepared[u.sample], u.first, u.count, scale,
                                          buffers[k]);
    });
    for (std::size_t k = 0; k < n; ++k) {
      loss += losses[k];
      for (std::size_t i = 0; i < n_params; ++i) grad[i] += buffers[k][i];
    }
  }
  return loss;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw UsageError("adam_beta1 must be in [0,1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw UsageError("adam_beta2 must be in [0,1)");
  if (!(adam_epsilon > 0.0)) throw UsageError("adam_epsilon must be > 0");
  if (patience < 1) throw UsageError("patience must be >= 1");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (max_epochs < 0) throw UsageError("max_epochs must be >= 0");
  if (stride < 1) throw UsageError("stride K must be >= 1");
  if (local_dim < 2) throw UsageError("local_dim d must be >= 2");
  if (bond_dim < 1) throw UsageError("bond_dim must be >= 1");
  if (snapshot_every < 0) throw UsageError("snapshot_every must be >= 0");
  if (threads < 1) throw UsageError("threads must be >= 1");
  if (!(init_noise >= 0.0)) throw UsageError("init_noise must be >= 0");
}

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out << "epoch,train_loss,val_dice,val_prauc,seconds\n";
  char line[160];
  for (const auto& e : epochs) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.6f\n", e.epoch, e.train_loss,
                  e.val_dice, e.val_prauc, e.seconds);
    out << line;
  }
  return out.str();
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write history " + path.string());
  out << to_csv();
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& hyper) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw DimensionError("adam_step: parameter, gradient and state sizes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
    v = hyper.beta2 * v + (1.0 - hyper.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

BceResult bce_with_logits(std::span<const double> logits, std::span<const std::uint8_t> targets) {
  if (logits.size() != targets.size()) throw DimensionError("bce: logits and targets differ in length");
  if (logits.empty()) throw DimensionError("bce: empty input");
  BceResult out;
  out.grad.resize(logits.size());
  const double inv = 1.0 / static_cast<double>(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    if (!std::isfinite(z)) throw NumericError("bce: non-finite logit at " + std::to_string(i));
    if (targets[i] > 1) throw DomainError("bce: targets must be binary");
    const double t = targets[i];
    sum += std::max(z, 0.0) - t * z + std::log1p(std::exp(-std::abs(z)));
    out.grad[i] = (sigmoid(z) - t) * inv;
  }
  out.loss = sum * inv;
  return out;
}

double image_loss_and_gradient(const MpsModel& model, const Sample& sample, double scale,
                               std::span<double> grad) {
  if (grad.size() != parameter_count(model)) throw DimensionError("gradient buffer size");
  const PreparedSample prepared = prepare(sample, model.stride, PadMode::kError);
  std::vector<double> buffer(grad.size());
  double loss = 0.0;
  for (std::size_t first = 0; first < prepared.patches.count(); first += kPatchChunk) {
    std::fill(buffer.begin(), buffer.end(), 0.0);
    const std::size_t count = std::min(kPatchChunk, prepared.patches.count() - first);
    loss += chunk_loss_and_gradient(model, prepared, first, count, scale, buffer);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += buffer[i];
  }
  return loss;
}

EvaluationResult evaluate_predictions(std::span<const SoftSegmentation> predictions,
                                      const Dataset& dataset) {
  if (dataset.empty()) throw UsageError("evaluate: dataset is empty");
  if (predictions.size() != dataset.size()) throw ShapeError("evaluate: prediction count mismatch");
  EvaluationResult result;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& mask = dataset[i].mask;
    const auto& soft = predictions[i];
    if (soft.height() != mask.height() || soft.width() != mask.width()) {
      throw ShapeError("evaluate: prediction for '" + dataset[i].name + "' has wrong size");
    }
    result.per_image_dice.push_back(dice(threshold(soft, 0.5), mask));
    scores.insert(scores.end(), soft.values().begin(), soft.values().end());
    labels.insert(labels.end(), mask.values().begin(), mask.values().end());
  }
  result.dice = mean_std(result.per_image_dice);
  result.prauc = prauc(scores, labels);
  return result;
}

EvaluationResult evaluate(const MpsModel& model, const Dataset& dataset,
                          const SegmentOptions& options) {
  if (dataset.empty()) throw UsageError("evaluate: dataset is empty");
  const auto start = Clock::now();
  std::vector<SoftSegmentation> preds(dataset.size());
  SegmentOptions inner = options;
  inner.threads = 1;
  parallel_for(dataset.size(), options.threads,
               [&](std::size_t i) { preds[i] = segment_image(model, dataset[i].image, inner); });
  const double elapsed = seconds_since(start);
  EvaluationResult result = evaluate_predictions(preds, dataset);
  result.seconds_per_image = elapsed / static_cast<double>(dataset.size());
  return result;
}

TrainResult train(MpsModel initial, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  initial.validate();
  TrainResult result{initial, {}};
  if (cfg.max_epochs == 0) return result;
  if (train_set.empty()) throw UsageError("train: training set is empty");
  if (val_set.empty() && !hooks.validation) throw UsageError("train: validation set is empty");

  std::vector<PreparedSample> prepared;
  prepared.reserve(train_set.size());
  for (const auto& s : train_set) prepared.push_back(prepare(s, initial.stride, cfg.pad));

  MpsModel model = std::move(initial);
  std::vector<double> params = flatten_parameters(model);
  std::vector<double> grad(params.size());
  AdamState adam(params.size());
  const AdamHyper hyper{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon};
  const SegmentOptions seg{cfg.pad, 0, cfg.threads};

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5deece66dull);

  double best_dice = -1.0;
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = Clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t epoch_pixels = 0;
    int batch_index = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size, ++batch_index) {
      const std::size_t n = std::min<std::size_t>(cfg.batch_size, order.size() - b);
      const std::span<const std::size_t> members(order.data() + b, n);
      std::size_t pixels = 0;
      for (std::size_t s : members) pixels += prepared[s].labels.size();
      double loss = 0.0;
      try {
        loss = batch_loss_and_gradient(model, prepared, members, 1.0 / static_cast<double>(pixels),
                                       cfg.threads, grad);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
      if (!std::isfinite(loss)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": non-finite loss");
      }
      epoch_loss += loss;
      epoch_pixels += pixels;
      adam_step(params, grad, adam, hyper);
      assign_parameters(model, params);
    }

    ValidationScores scores;
    if (hooks.validation) {
      scores = hooks.validation(model, epoch);
    } else {
      const EvaluationResult eval = evaluate(model, val_set, seg);
      scores = {eval.dice.mean, eval.prauc};
    }
    EpochRecord record{epoch, epoch_loss / static_cast<double>(epoch_pixels), scores.dice,
                       scores.prauc, cfg.deterministic ? 0.0 : seconds_since(start)};
    result.history.epochs.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record, model);
    if (cfg.snapshot_every > 0 && epoch % cfg.snapshot_every == 0 && hooks.on_snapshot) {
      hooks.on_snapshot(epoch, model);
    }

    if (scores.dice > best_dice) {
      best_dice = scores.dice;
      since_best = 0;
      result.model = model;
      result.history.best_epoch = epoch;
      if (hooks.on_improvement) hooks.on_improvement(record, model);
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace stenet
