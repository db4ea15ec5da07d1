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

#include "stenet/segmenter.hpp"

#include <cmath>

#include "stenet/errors.hpp"
#include "stenet/parallel.hpp"

namespace stenet {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

PatchBatch extract_patches(const NormalizedImage& img, int stride) {
  if (stride < 1) throw ShapeError("extract_patches: K must be >= 1");
  const int h = img.height();
  const int w = img.width();
  if (h % stride != 0 || w % stride != 0) {
    throw ShapeError("image " + std::to_string(h) + "x" + std::to_string(w) +
                     " is not divisible by K=" + std::to_string(stride) +
                     " (H=" + std::to_string(h) + ", W=" + std::to_string(w) +
                     "); use reflect padding");
  }
  PatchBatch batch;
  batch.stride = stride;
  batch.grid_rows = h / stride;
  batch.grid_cols = w / stride;
  batch.height = h;
  batch.width = w;
  batch.patches.reserve(static_cast<std::size_t>(h) * w);
  for (int pr = 0; pr < batch.grid_rows; ++pr) {
    for (int pc = 0; pc < batch.grid_cols; ++pc) {
      for (int r = 0; r < stride; ++r) {
        for (int c = 0; c < stride; ++c) {
          batch.patches.push_back(img(pr * stride + r, pc * stride + c));
        }
      }
    }
  }
  return batch;
}

std::vector<double> tile_predictions(std::span<const double> per_patch, int grid_rows,
                                     int grid_cols, int height, int width, int stride) {
  if (stride < 1 || grid_rows < 1 || grid_cols < 1 || grid_rows * stride != height ||
      grid_cols * stride != width) {
    throw ShapeError("tile_predictions: grid " + std::to_string(grid_rows) + "x" +
                     std::to_string(grid_cols) + " with K=" + std::to_string(stride) +
                     " does not cover " + std::to_string(height) + "x" + std::to_string(width));
  }
  const std::size_t k2 = static_cast<std::size_t>(stride) * stride;
  if (per_patch.size() != static_cast<std::size_t>(grid_rows) * grid_cols * k2) {
    throw ShapeError("tile_predictions: expected " +
                     std::to_string(static_cast<std::size_t>(grid_rows) * grid_cols) +
                     " patches of " + std::to_string(k2) + " values");
  }
  std::vector<double> out(static_cast<std::size_t>(height) * width);
  std::size_t src = 0;
  for (int pr = 0; pr < grid_rows; ++pr) {
    for (int pc = 0; pc < grid_cols; ++pc) {
      for (int r = 0; r < stride; ++r) {
        for (int c = 0; c < stride; ++c) {
          out[static_cast<std::size_t>(pr * stride + r) * width + pc * stride + c] = per_patch[src++];
        }
      }
    }
  }
  return out;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

namespace {

template <typename T>
std::vector<T> pad_values(std::span<const T> values, int h, int w, int ph, int pw) {
  std::vector<T> out(static_cast<std::size_t>(ph) * pw);
  for (int r = 0; r < ph; ++r) {
    const int sr = reflect_index(r, h);
    for (int c = 0; c < pw; ++c) out[static_cast<std::size_t>(r) * pw + c] = values[sr * w + reflect_index(c, w)];
  }
  return out;
}

int round_up(int v, int k) { return (v + k - 1) / k * k; }

}  // namespace

NormalizedImage reflect_pad(const NormalizedImage& img, int stride) {
  const int ph = round_up(img.height(), stride);
  const int pw = round_up(img.width(), stride);
  if (ph == img.height() && pw == img.width()) return img;
  return NormalizedImage(ph, pw, pad_values(img.values(), img.height(), img.width(), ph, pw));
}

BinaryMask reflect_pad(const BinaryMask& mask, int stride) {
  const int ph = round_up(mask.height(), stride);
  const int pw = round_up(mask.width(), stride);
  if (ph == mask.height() && pw == mask.width()) return mask;
  return BinaryMask(ph, pw, pad_values(mask.values(), mask.height(), mask.width(), ph, pw));
}

DenseTensor patch_features(const MpsModel& model, const PatchBatch& batch, std::size_t first,
                           std::size_t count) {
  if (batch.stride != model.stride) throw ShapeError("patch stride does not match model K");
  const auto fn = FeatureMapRegistry::instance().make(model.feature_map, model.local_dim);
  const std::size_t n = batch.patch_size();
  const std::size_t d = model.local_dim;
  DenseTensor features({count, n, d});
  auto out = features.mutable_data();
  for (std::size_t p = 0; p < count; ++p) {
    map_patch_into(batch.patch(first + p), fn, model.local_dim, out.subspan(p * n * d, n * d));
  }
  return features;
}

SoftSegmentation segment_image(const MpsModel& model, const NormalizedImage& img,
                               const SegmentOptions& options) {
  const NormalizedImage& source = img;
  NormalizedImage padded;
  const NormalizedImage* input = &source;
  if (options.pad == PadMode::kReflect) {
    padded = reflect_pad(img, model.stride);
    input = &padded;
  }
  const PatchBatch batch = extract_patches(*input, model.stride);
  const std::size_t total = batch.count();
  const std::size_t chunk = options.chunk_size == 0 ? total : options.chunk_size;
  const std::size_t chunks = (total + chunk - 1) / chunk;
  const std::size_t m = model.output_dim;
  std::vector<double> probs(total * m);
  parallel_for(chunks, options.threads, [&](std::size_t ci) {
    const std::size_t first = ci * chunk;
    const std::size_t count = std::min(chunk, total - first);
    const DenseTensor logits = forward_logits(model, patch_features(model, batch, first, count));
    for (std::size_t i = 0; i < count * m; ++i) probs[first * m + i] = sigmoid(logits[i]);
  });
  std::vector<double> map = tile_predictions(probs, batch.grid_rows, batch.grid_cols, batch.height,
                                             batch.width, batch.stride);
  if (batch.height == img.height() && batch.width == img.width()) {
    return SoftSegmentation(img.height(), img.width(), std::move(map));
  }
  std::vector<double> cropped(static_cast<std::size_t>(img.height()) * img.width());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) cropped[r * img.width() + c] = map[r * batch.width + c];
  }
  return SoftSegmentation(img.height(), img.width(), std::move(cropped));
}

}  // namespace stenet
