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

#include <span>
#include <vector>

#include "stenet/image.hpp"
#include "stenet/mps.hpp"

namespace stenet {

/// Non-overlapping K x K patches of one image, row-major over the patch
/// grid; each patch is flattened row-major.
struct PatchBatch {
  int stride = 1;
  int grid_rows = 0;
  int grid_cols = 0;
  int height = 0;
  int width = 0;
  std::vector<double> patches;  // (grid_rows * grid_cols) x K^2

  std::size_t count() const { return static_cast<std::size_t>(grid_rows) * grid_cols; }
  std::size_t patch_size() const { return static_cast<std::size_t>(stride) * stride; }
  std::span<const double> patch(std::size_t index) const {
    return std::span<const double>(patches).subspan(index * patch_size(), patch_size());
  }
};

enum class PadMode {
  kError,    // reject images whose sides are not multiples of K
  kReflect,  // mirror-pad bottom/right to the next multiple of K
};

PatchBatch extract_patches(const NormalizedImage& img, int stride);

// Inverse spatial mapping of extract_patches. Returns height x width values.
std::vector<double> tile_predictions(std::span<const double> per_patch, int grid_rows,
                                     int grid_cols, int height, int width, int stride);

// Mirror index into [0, n) without repeating the edge sample.
int reflect_index(int i, int n);

NormalizedImage reflect_pad(const NormalizedImage& img, int stride);
BinaryMask reflect_pad(const BinaryMask& mask, int stride);

struct SegmentOptions {
  PadMode pad = PadMode::kError;
  std::size_t chunk_size = 0;  // patches per forward call; 0 = all at once
  int threads = 1;
};

/// Soft segmentation: patches -> local features -> MPS logits -> sigmoid ->
/// tiled map. One set of MPS parameters serves every patch.
SoftSegmentation segment_image(const MpsModel& model, const NormalizedImage& img,
                               const SegmentOptions& options = {});

// Feature tensor (B, K^2, d) for every patch of `batch`.
DenseTensor patch_features(const MpsModel& model, const PatchBatch& batch, std::size_t first,
                           std::size_t count);

double sigmoid(double z);

}  // namespace stenet
