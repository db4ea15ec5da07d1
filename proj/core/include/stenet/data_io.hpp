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
#include <string>
#include <vector>

#include "stenet/image.hpp"
#include "stenet/raster.hpp"

namespace stenet {

enum class Normalization {
  kBitDepth,  // divide by the format's maximum sample value
  kMinMax,    // per-image (v - min) / (max - min); constant images map to 0
};

// RGB rasters are reduced to luminance 0.2126 R + 0.7152 G + 0.0722 B.
NormalizedImage image_from_raster(const Raster& raster,
                                  Normalization mode = Normalization::kBitDepth);
NormalizedImage load_image(const std::filesystem::path& path,
                           Normalization mode = Normalization::kBitDepth);

// Any nonzero sample (in any channel) is foreground.
BinaryMask mask_from_raster(const Raster& raster);
BinaryMask load_mask(const std::filesystem::path& path);

struct SamplePaths {
  std::string image;
  std::string mask;

  friend bool operator==(const SamplePaths&, const SamplePaths&) = default;
};

/// JSON manifest: {"root": ..., "train": [{"image","mask"}...], "val", "test"}.
/// Paths are relative to root; a relative root is relative to the manifest.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<SamplePaths> train;
  std::vector<SamplePaths> val;
  std::vector<SamplePaths> test;

  const std::vector<SamplePaths>& split(const std::string& name) const;
  // Throws DataError-kind exceptions for overlapping splits or missing files.
  void validate() const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
// `root` is written as given; pass "." for a manifest stored at the root.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Accepts a manifest file or a directory containing manifest.json.
std::filesystem::path resolve_manifest_path(const std::filesystem::path& path);

struct Sample {
  std::string name;
  NormalizedImage image;
  BinaryMask mask;
};
using Dataset = std::vector<Sample>;

Dataset load_split(const DatasetManifest& manifest, const std::string& split,
                   Normalization mode = Normalization::kBitDepth);

enum class ShapeKind { kRectangle, kDisc };

struct SynthConfig {
  int image_size = 64;
  int train_count = 200;
  int val_count = 50;
  int test_count = 50;
  int min_shapes = 1;
  int max_shapes = 3;
  std::vector<ShapeKind> kinds = {ShapeKind::kRectangle, ShapeKind::kDisc};
  int rect_min_side = 12;
  int rect_max_side = 32;
  int disc_min_radius = 6;
  int disc_max_radius = 16;
  double fg_min = 0.6;
  double fg_max = 0.9;
  double bg_min = 0.1;
  double bg_max = 0.35;
  double noise_std = 0.05;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// In-memory generation. Masks are the exact shape support; images are
/// fg/bg intensities plus clamped Gaussian noise.
SyntheticSplits generate_synthetic_splits(const SynthConfig& cfg);

/// Writes <out>/{train,val,test}/NNNN_image.png (16-bit) and NNNN_mask.png
/// (8-bit, {0,255}) plus <out>/manifest.json. Returns the manifest.
DatasetManifest generate_synthetic(const SynthConfig& cfg, const std::filesystem::path& out_dir);

struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;  // interleaved
};

inline constexpr std::uint8_t kTruePositiveRgb[3] = {0, 200, 0};
inline constexpr std::uint8_t kFalseNegativeRgb[3] = {128, 128, 128};
inline constexpr std::uint8_t kFalsePositiveRgb[3] = {255, 105, 180};

// TP green, FN grey, FP pink; true negatives show the input intensity.
RgbImage overlay_image(const NormalizedImage& img, const BinaryMask& pred,
                       const BinaryMask& target);
void render_overlay(const NormalizedImage& img, const BinaryMask& pred, const BinaryMask& target,
                    const std::filesystem::path& path);

// 16-bit soft map, sample = round(p * 65535).
void save_soft_png(const SoftSegmentation& soft, const std::filesystem::path& path);
SoftSegmentation load_soft_png(const std::filesystem::path& path);
// 8-bit mask with values {0,255}.
void save_mask_png(const BinaryMask& mask, const std::filesystem::path& path);
void save_image_png16(const NormalizedImage& img, const std::filesystem::path& path);

}  // namespace stenet
