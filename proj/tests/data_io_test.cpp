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

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "stenet/data_io.hpp"
#include "stenet/errors.hpp"
#include "test_util.hpp"

using namespace stenet;
namespace fs = std::filesystem;

namespace {

Raster gray8(int w, int h, std::vector<std::uint16_t> samples) {
  return Raster{w, h, 1, 255, std::move(samples)};
}

std::size_t count_files(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

}  // namespace

TEST_CASE("8-bit normalization") {
  testutil::TempDir dir;
  const auto p = dir.path() / "g.png";
  write_png(p, gray8(3, 1, {255, 0, 128}));
  const NormalizedImage img = load_image(p);
  CHECK(img(0, 0) == 1.0);
  CHECK(img(0, 1) == 0.0);
  CHECK(img(0, 2) == 128.0 / 255.0);
  CHECK(load_image(p) == img);
}

TEST_CASE("16-bit and RGB normalization") {
  testutil::TempDir dir;
  const auto p16 = dir.path() / "g16.png";
  write_png(p16, Raster{2, 1, 1, 65535, {65535, 32768}});
  const NormalizedImage img = load_image(p16);
  CHECK(img(0, 0) == 1.0);
  CHECK(img(0, 1) == 32768.0 / 65535.0);

  const auto prgb = dir.path() / "rgb.png";
  write_png(prgb, Raster{3, 1, 3, 255, {255, 0, 0, 0, 255, 0, 255, 255, 255}});
  const NormalizedImage rgb = load_image(prgb);
  CHECK(rgb(0, 0) == doctest::Approx(0.2126).epsilon(1e-15));
  CHECK(rgb(0, 1) == doctest::Approx(0.7152).epsilon(1e-15));
  CHECK(rgb(0, 2) == doctest::Approx(1.0).epsilon(1e-15));
  for (double v : rgb.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("min-max normalization") {
  const NormalizedImage img = image_from_raster(gray8(3, 1, {10, 20, 30}), Normalization::kMinMax);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(0, 1) == 0.5);
  CHECK(img(0, 2) == 1.0);
  const NormalizedImage flat = image_from_raster(gray8(2, 1, {7, 7}), Normalization::kMinMax);
  CHECK(flat(0, 0) == 0.0);
}

TEST_CASE("mask binarization") {
  CHECK(mask_from_raster(gray8(3, 1, {0, 0, 0})).count() == 0);
  const BinaryMask m = mask_from_raster(gray8(4, 1, {0, 255, 1, 0}));
  CHECK(std::vector<std::uint8_t>(m.values().begin(), m.values().end()) ==
        std::vector<std::uint8_t>{0, 1, 1, 0});
  const BinaryMask c = mask_from_raster(Raster{2, 1, 3, 255, {0, 0, 0, 0, 0, 9}});
  CHECK(c(0, 0) == 0);
  CHECK(c(0, 1) == 1);
}

TEST_CASE("PNM formats") {
  testutil::TempDir dir;
  const auto p2 = dir.path() / "a.pgm";
  testutil::write_file(p2, "P2\n# comment\n3 1\n255\n0 128 255\n");
  const NormalizedImage a = load_image(p2);
  CHECK(a(0, 1) == 128.0 / 255.0);

  const auto p5 = dir.path() / "b.pgm";
  testutil::write_file(p5, std::string("P5 2 1 255\n") + char(0) + char(255));
  CHECK(load_image(p5)(0, 1) == 1.0);

  const auto p5w = dir.path() / "w.pgm";
  testutil::write_file(p5w, std::string("P5 1 1 1000\n") + char(0x01) + char(0xF4));
  CHECK(load_image(p5w)(0, 0) == 0.5);

  const auto p3 = dir.path() / "c.ppm";
  testutil::write_file(p3, "P3 1 1 255 255 0 0\n");
  CHECK(load_image(p3)(0, 0) == doctest::Approx(0.2126).epsilon(1e-15));

  const auto p6 = dir.path() / "d.ppm";
  testutil::write_file(p6, std::string("P6 1 1 255\n") + char(0) + char(255) + char(0));
  CHECK(load_image(p6)(0, 0) == doctest::Approx(0.7152).epsilon(1e-15));

  const auto bad = dir.path() / "e.pgm";
  testutil::write_file(bad, std::string("P5 4 4 255\n") + char(0));
  CHECK_THROWS_AS(load_image(bad), IoError);
  const auto garbage = dir.path() / "f.bin";
  testutil::write_file(garbage, "hello world");
  CHECK_THROWS_AS(load_image(garbage), FormatError);
  const auto corrupt = dir.path() / "g.png";
  testutil::write_file(corrupt, std::string("\x89PNG\r\n\x1a\n", 8) + "broken");
  CHECK_THROWS_AS(load_image(corrupt), IoError);
  CHECK_THROWS_AS(load_image(dir.path() / "missing.png"), IoError);
}

TEST_CASE("synthetic data is deterministic and within configured ranges") {
  SynthConfig cfg;
  cfg.train_count = 40;
  cfg.val_count = 5;
  cfg.test_count = 5;
  const auto a = generate_synthetic_splits(cfg);
  const auto b = generate_synthetic_splits(cfg);
  REQUIRE(a.train.size() == 40);
  CHECK(a.val.size() == 5);
  std::size_t fg = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].image == b.train[i].image);
    CHECK(a.train[i].mask == b.train[i].mask);
    CHECK(a.train[i].image.height() == 64);
    CHECK(a.train[i].mask.count() > 0);
    fg += a.train[i].mask.count();
    total += a.train[i].mask.values().size();
    for (double v : a.train[i].image.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  const double frac = static_cast<double>(fg) / total;
  CHECK(frac >= 0.05);
  CHECK(frac <= 0.6);

  cfg.seed = 2;
  CHECK_FALSE(generate_synthetic_splits(cfg).train[0].image == a.train[0].image);
}

TEST_CASE("synthetic data without noise has exactly two intensities per image") {
  SynthConfig cfg;
  cfg.noise_std = 0.0;
  cfg.train_count = 10;
  cfg.val_count = 0;
  cfg.test_count = 0;
  for (const Sample& s : generate_synthetic_splits(cfg).train) {
    double fg = -1.0;
    double bg = -1.0;
    for (std::size_t i = 0; i < s.mask.values().size(); ++i) {
      double& slot = s.mask.values()[i] ? fg : bg;
      if (slot < 0) slot = s.image.values()[i];
      CHECK(s.image.values()[i] == slot);
    }
    CHECK(fg >= cfg.fg_min);
    CHECK(fg <= cfg.fg_max);
    CHECK(bg >= cfg.bg_min);
    CHECK(bg <= cfg.bg_max);
  }
}

TEST_CASE("generate_synthetic writes a reproducible tree") {
  testutil::TempDir dir;
  SynthConfig cfg;
  cfg.image_size = 16;
  cfg.train_count = 3;
  cfg.val_count = 2;
  cfg.test_count = 1;
  cfg.rect_min_side = 4;
  cfg.rect_max_side = 8;
  cfg.disc_min_radius = 2;
  cfg.disc_max_radius = 4;
  const DatasetManifest m = generate_synthetic(cfg, dir.path() / "a");
  generate_synthetic(cfg, dir.path() / "b");
  CHECK(fs::exists(dir.path() / "a" / "manifest.json"));
  CHECK(fs::is_directory(dir.path() / "a" / "train"));
  CHECK(fs::is_directory(dir.path() / "a" / "val"));
  CHECK(fs::is_directory(dir.path() / "a" / "test"));
  CHECK(count_files(dir.path() / "a") == 2 * 6 + 1);
  for (const auto& e : fs::recursive_directory_iterator(dir.path() / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir.path() / "a");
    CHECK(testutil::read_file(e.path()) == testutil::read_file(dir.path() / "b" / rel));
  }

  const DatasetManifest loaded = load_manifest(dir.path() / "a");
  CHECK(loaded.train == m.train);
  CHECK(loaded.val == m.val);
  CHECK(loaded.test == m.test);
  CHECK_NOTHROW(loaded.validate());

  const Dataset train = load_split(loaded, "train");
  const auto mem = generate_synthetic_splits(cfg);
  REQUIRE(train.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(train[i].mask == mem.train[i].mask);
    for (std::size_t k = 0; k < train[i].image.values().size(); ++k) {
      CHECK(std::abs(train[i].image.values()[k] - mem.train[i].image.values()[k]) <= 0.5 / 65535);
    }
  }
  CHECK_THROWS_AS(load_split(loaded, "holdout"), UsageError);
}

TEST_CASE("manifest round trip and validation") {
  testutil::TempDir dir;
  DatasetManifest m;
  m.root = ".";
  m.train = {{"x/1.png", "x/1m.png"}, {"x/2.png", "x/2m.png"}};
  m.val = {{"y/1.png", "y/1m.png"}};
  m.test = {};
  const auto path = dir.path() / "nested" / "manifest.json";
  for (const auto* split : {&m.train, &m.val}) {
    for (const auto& p : *split) {
      for (const auto& rel : {p.image, p.mask}) {
        fs::create_directories((path.parent_path() / rel).parent_path());
        testutil::write_file(path.parent_path() / rel, "x");
      }
    }
  }
  write_manifest(m, path);
  DatasetManifest back = load_manifest(path);
  CHECK(back.train == m.train);
  CHECK(back.val == m.val);
  CHECK(back.test.empty());
  CHECK(back.root == path.parent_path());
  CHECK_NOTHROW(back.validate());
  fs::remove(path.parent_path() / "y/1m.png");
  CHECK_THROWS_AS(back.validate(), IoError);
  CHECK_THROWS_AS(load_manifest(path), IoError);

  DatasetManifest overlap = m;
  overlap.val = {m.train[0]};
  CHECK_THROWS_AS(overlap.validate(), FormatError);

  testutil::write_file(dir.path() / "bad.json", "{ not json");
  CHECK_THROWS_AS(load_manifest(dir.path() / "bad.json"), FormatError);
  CHECK_THROWS_AS(load_manifest(dir.path() / "none.json"), IoError);
}

TEST_CASE("overlay colors") {
  const NormalizedImage img(1, 4, {0.0, 0.5, 1.0, 0.2});
  const BinaryMask empty(1, 4, {0, 0, 0, 0});
  const RgbImage gray = overlay_image(img, empty, empty);
  for (int i = 0; i < 4; ++i) {
    const auto v = static_cast<std::uint8_t>(std::lround(img.values()[i] * 255));
    CHECK(gray.rgb[3 * i] == v);
    CHECK(gray.rgb[3 * i + 1] == v);
    CHECK(gray.rgb[3 * i + 2] == v);
  }

  const BinaryMask ones(1, 4, {1, 1, 1, 1});
  const RgbImage pink = overlay_image(img, ones, empty);
  for (int i = 0; i < 4; ++i) {
    for (int ch = 0; ch < 3; ++ch) CHECK(pink.rgb[3 * i + ch] == kFalsePositiveRgb[ch]);
  }

  const BinaryMask some(1, 4, {1, 0, 1, 0});
  const RgbImage green = overlay_image(img, some, some);
  for (int ch = 0; ch < 3; ++ch) {
    CHECK(green.rgb[ch] == kTruePositiveRgb[ch]);
    CHECK(green.rgb[6 + ch] == kTruePositiveRgb[ch]);
  }
  CHECK(green.rgb[3] == 128);  // TN shows input 0.5

  const RgbImage grey = overlay_image(img, empty, some);
  for (int ch = 0; ch < 3; ++ch) CHECK(grey.rgb[ch] == kFalseNegativeRgb[ch]);

  CHECK_THROWS_AS(overlay_image(img, BinaryMask(2, 2, {0, 0, 0, 0}), empty), ShapeError);

  testutil::TempDir dir;
  render_overlay(img, some, ones, dir.path() / "o.png");
  const Raster r = read_raster(dir.path() / "o.png");
  CHECK(r.channels == 3);
  CHECK(r.width == 4);
  CHECK(r.samples[3] == kFalseNegativeRgb[0]);
}

TEST_CASE("soft map PNG round trip") {
  testutil::TempDir dir;
  const SoftSegmentation s(1, 4, {0.0, 0.5, 1.0, 0.123456});
  save_soft_png(s, dir.path() / "s.png");
  const Raster r = read_raster(dir.path() / "s.png");
  CHECK(r.max_value == 65535);
  CHECK(r.samples[1] == 32768);
  const SoftSegmentation back = load_soft_png(dir.path() / "s.png");
  for (int i = 0; i < 4; ++i) CHECK(std::abs(back.values()[i] - s.values()[i]) < 1e-4);

  save_mask_png(BinaryMask(1, 2, {0, 1}), dir.path() / "m.png");
  const Raster mr = read_raster(dir.path() / "m.png");
  CHECK(mr.samples == std::vector<std::uint16_t>{0, 255});
}
