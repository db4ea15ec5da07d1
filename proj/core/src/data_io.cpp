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

#include "stenet/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "stenet/errors.hpp"

namespace stenet {
namespace fs = std::filesystem;

NormalizedImage image_from_raster(const Raster& raster, Normalization mode) {
  const std::size_t n = static_cast<std::size_t>(raster.width) * raster.height;
  std::vector<double> values(n);
  const double scale = 1.0 / raster.max_value;
  for (std::size_t i = 0; i < n; ++i) {
    if (raster.channels == 3) {
      const double r = raster.samples[3 * i] * scale;
      const double g = raster.samples[3 * i + 1] * scale;
      const double b = raster.samples[3 * i + 2] * scale;
      values[i] = 0.2126 * r + 0.7152 * g + 0.0722 * b;
    } else {
      values[i] = raster.samples[i] * scale;
    }
    values[i] = std::clamp(values[i], 0.0, 1.0);
  }
  if (mode == Normalization::kMinMax && n > 0) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double low = *lo;
    const double span = *hi - *lo;
    for (double& v : values) v = span > 0.0 ? std::clamp((v - low) / span, 0.0, 1.0) : 0.0;
  }
  return NormalizedImage(raster.height, raster.width, std::move(values));
}

NormalizedImage load_image(const fs::path& path, Normalization mode) {
  return image_from_raster(read_raster(path), mode);
}

BinaryMask mask_from_raster(const Raster& raster) {
  const std::size_t n = static_cast<std::size_t>(raster.width) * raster.height;
  std::vector<std::uint8_t> values(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < raster.channels; ++c) {
      if (raster.samples[i * raster.channels + c] != 0) values[i] = 1;
    }
  }
  return BinaryMask(raster.height, raster.width, std::move(values));
}

BinaryMask load_mask(const fs::path& path) { return mask_from_raster(read_raster(path)); }

const std::vector<SamplePaths>& DatasetManifest::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw UsageError("unknown split '" + name + "' (expected train, val or test)");
}

void DatasetManifest::validate() const {
  // Structure before existence so overlap is reported even for absent files.
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto* split : {&train, &val, &test}) {
    std::set<std::pair<std::string, std::string>> local;
    for (const auto& p : *split) {
      const auto key = std::make_pair(p.image, p.mask);
      if (seen.count(key) && !local.count(key)) {
        throw FormatError("manifest: pair (" + p.image + ", " + p.mask +
                          ") appears in more than one split");
      }
      local.insert(key);
    }
    seen.insert(local.begin(), local.end());
  }
  for (const auto* split : {&train, &val, &test}) {
    for (const auto& p : *split) {
      for (const auto& rel : {p.image, p.mask}) {
        if (!fs::exists(root / rel)) throw IoError("manifest: missing file " + (root / rel).string());
      }
    }
  }
}

fs::path resolve_manifest_path(const fs::path& path) {
  if (fs::is_directory(path)) return path / "manifest.json";
  return path;
}

DatasetManifest load_manifest(const fs::path& input) {
  const fs::path path = resolve_manifest_path(input);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  DatasetManifest manifest;
  try {
    const auto j = nlohmann::json::parse(in);
    fs::path root = j.value("root", std::string("."));
    manifest.root = root.is_absolute() ? root : (path.parent_path() / root).lexically_normal();
    if (!manifest.root.has_filename() && manifest.root.has_parent_path()) {
      manifest.root = manifest.root.parent_path();
    }
    auto read_split = [&](const char* key) {
      std::vector<SamplePaths> out;
      if (!j.contains(key)) return out;
      for (const auto& e : j.at(key)) {
        out.push_back({e.at("image").get<std::string>(), e.at("mask").get<std::string>()});
      }
      return out;
    };
    manifest.train = read_split("train");
    manifest.val = read_split("val");
    manifest.test = read_split("test");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  manifest.validate();
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  nlohmann::json j;
  j["root"] = manifest.root.string();
  for (const auto& [key, split] : {std::pair{"train", &manifest.train},
                                   std::pair{"val", &manifest.val},
                                   std::pair{"test", &manifest.test}}) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : *split) arr.push_back({{"image", p.image}, {"mask", p.mask}});
    j[key] = arr;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
}

Dataset load_split(const DatasetManifest& manifest, const std::string& split,
                   Normalization mode) {
  Dataset out;
  for (const auto& p : manifest.split(split)) {
    Sample s;
    s.name = fs::path(p.image).stem().string();
    s.image = load_image(manifest.root / p.image, mode);
    s.mask = load_mask(manifest.root / p.mask);
    if (s.image.height() != s.mask.height() || s.image.width() != s.mask.width()) {
      throw ShapeError("image " + p.image + " and mask " + p.mask + " differ in size");
    }
    out.push_back(std::move(s));
  }
  return out;
}

void SynthConfig::validate() const {
  auto in_unit = [](double lo, double hi) { return 0.0 <= lo && lo <= hi && hi <= 1.0; };
  if (image_size < 4) throw UsageError("synth: image_size must be >= 4");
  if (train_count < 0 || val_count < 0 || test_count < 0) throw UsageError("synth: negative count");
  if (min_shapes < 1 || max_shapes < min_shapes) throw UsageError("synth: invalid shape count range");
  if (kinds.empty()) throw UsageError("synth: no shape kinds");
  if (rect_min_side < 2 || rect_max_side < rect_min_side) throw UsageError("synth: invalid rectangle sides");
  if (disc_min_radius < 1 || disc_max_radius < disc_min_radius) throw UsageError("synth: invalid disc radii");
  if (!in_unit(fg_min, fg_max) || !in_unit(bg_min, bg_max)) {
    throw UsageError("synth: intensity ranges must lie inside [0,1]");
  }
  if (!(noise_std >= 0.0)) throw UsageError("synth: noise std must be >= 0");
}

namespace {

Sample synthesize_one(const SynthConfig& cfg, std::mt19937_64& rng, std::string name) {
  const int size = cfg.image_size;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, std::max(lo, hi))(rng);
  };
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(size) * size, 0);
  const int shapes = uniform_int(cfg.min_shapes, cfg.max_shapes);
  for (int s = 0; s < shapes; ++s) {
    const ShapeKind kind = cfg.kinds[uniform_int(0, static_cast<int>(cfg.kinds.size()) - 1)];
    if (kind == ShapeKind::kRectangle) {
      const int h = uniform_int(std::min(cfg.rect_min_side, size), std::min(cfg.rect_max_side, size));
      const int w = uniform_int(std::min(cfg.rect_min_side, size), std::min(cfg.rect_max_side, size));
      const int r0 = uniform_int(0, size - h);
      const int c0 = uniform_int(0, size - w);
      for (int r = r0; r < r0 + h; ++r) {
        for (int c = c0; c < c0 + w; ++c) mask[r * size + c] = 1;
      }
    } else {
      const int max_r = std::min(cfg.disc_max_radius, (size - 1) / 2);
      const int rad = uniform_int(std::min(cfg.disc_min_radius, max_r), max_r);
      const int cy = uniform_int(rad, size - 1 - rad);
      const int cx = uniform_int(rad, size - 1 - rad);
      for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
          if ((r - cy) * (r - cy) + (c - cx) * (c - cx) <= rad * rad) mask[r * size + c] = 1;
        }
      }
    }
  }
  const double fg = cfg.fg_min + (cfg.fg_max - cfg.fg_min) * unit(rng);
  const double bg = cfg.bg_min + (cfg.bg_max - cfg.bg_min) * unit(rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> values(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double base = mask[i] ? fg : bg;
    values[i] = cfg.noise_std > 0.0 ? std::clamp(base + cfg.noise_std * noise(rng), 0.0, 1.0) : base;
  }
  return Sample{std::move(name), NormalizedImage(size, size, std::move(values)),
                BinaryMask(size, size, std::move(mask))};
}

std::string sample_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", index);
  return buf;
}

}  // namespace

SyntheticSplits generate_synthetic_splits(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  SyntheticSplits out;
  for (int i = 0; i < cfg.train_count; ++i) out.train.push_back(synthesize_one(cfg, rng, sample_name(i)));
  for (int i = 0; i < cfg.val_count; ++i) out.val.push_back(synthesize_one(cfg, rng, sample_name(i)));
  for (int i = 0; i < cfg.test_count; ++i) out.test.push_back(synthesize_one(cfg, rng, sample_name(i)));
  return out;
}

DatasetManifest generate_synthetic(const SynthConfig& cfg, const fs::path& out_dir) {
  const SyntheticSplits splits = generate_synthetic_splits(cfg);
  DatasetManifest manifest;
  manifest.root = ".";
  auto write_split = [&](const Dataset& data, const std::string& split,
                         std::vector<SamplePaths>& entries) {
    fs::create_directories(out_dir / split);
    for (const auto& s : data) {
      SamplePaths p{split + "/" + s.name + "_image.png", split + "/" + s.name + "_mask.png"};
      save_image_png16(s.image, out_dir / p.image);
      save_mask_png(s.mask, out_dir / p.mask);
      entries.push_back(std::move(p));
    }
  };
  try {
    write_split(splits.train, "train", manifest.train);
    write_split(splits.val, "val", manifest.val);
    write_split(splits.test, "test", manifest.test);
  } catch (const fs::filesystem_error& e) {
    throw IoError(std::string("synth: ") + e.what());
  }
  write_manifest(manifest, out_dir / "manifest.json");
  manifest.root = out_dir;
  return manifest;
}

RgbImage overlay_image(const NormalizedImage& img, const BinaryMask& pred,
                       const BinaryMask& target) {
  if (img.height() != pred.height() || img.width() != pred.width() ||
      img.height() != target.height() || img.width() != target.width()) {
    throw ShapeError("render_overlay: image, prediction and target must share dimensions");
  }
  RgbImage out{img.height(), img.width(), {}};
  const std::size_t n = img.values().size();
  out.rgb.resize(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool p = pred.values()[i];
    const bool t = target.values()[i];
    const std::uint8_t* color = nullptr;
    if (p && t) color = kTruePositiveRgb;
    else if (!p && t) color = kFalseNegativeRgb;
    else if (p && !t) color = kFalsePositiveRgb;
    if (color) {
      std::copy_n(color, 3, out.rgb.begin() + 3 * i);
    } else {
      const auto g = static_cast<std::uint8_t>(std::lround(img.values()[i] * 255.0));
      out.rgb[3 * i] = out.rgb[3 * i + 1] = out.rgb[3 * i + 2] = g;
    }
  }
  return out;
}

void render_overlay(const NormalizedImage& img, const BinaryMask& pred, const BinaryMask& target,
                    const fs::path& path) {
  const RgbImage rgb = overlay_image(img, pred, target);
  Raster raster{rgb.width, rgb.height, 3, 255, {rgb.rgb.begin(), rgb.rgb.end()}};
  write_png(path, raster);
}

void save_soft_png(const SoftSegmentation& soft, const fs::path& path) {
  Raster raster{soft.width(), soft.height(), 1, 65535, {}};
  raster.samples.reserve(soft.values().size());
  for (double p : soft.values()) {
    raster.samples.push_back(static_cast<std::uint16_t>(std::lround(p * 65535.0)));
  }
  write_png(path, raster);
}

SoftSegmentation load_soft_png(const fs::path& path) {
  const Raster raster = read_raster(path);
  if (raster.channels != 1) throw FormatError("soft map must be single-channel: " + path.string());
  std::vector<double> values(raster.samples.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<double>(raster.samples[i]) / raster.max_value;
  }
  return SoftSegmentation(raster.height, raster.width, std::move(values));
}

void save_mask_png(const BinaryMask& mask, const fs::path& path) {
  Raster raster{mask.width(), mask.height(), 1, 255, {}};
  raster.samples.reserve(mask.values().size());
  for (auto v : mask.values()) raster.samples.push_back(v ? 255 : 0);
  write_png(path, raster);
}

void save_image_png16(const NormalizedImage& img, const fs::path& path) {
  Raster raster{img.width(), img.height(), 1, 65535, {}};
  raster.samples.reserve(img.values().size());
  for (double v : img.values()) {
    raster.samples.push_back(static_cast<std::uint16_t>(std::lround(v * 65535.0)));
  }
  write_png(path, raster);
}

}  // namespace stenet
