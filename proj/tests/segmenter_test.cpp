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

#include <random>

#include "oracles.hpp"
#include "stenet/errors.hpp"
#include "stenet/segmenter.hpp"

using namespace stenet;

namespace {

NormalizedImage iota_image(int h, int w) {
  std::vector<double> v(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) / v.size();
  return NormalizedImage(h, w, std::move(v));
}

}  // namespace

TEST_CASE("extract_patches raster order") {
  const NormalizedImage img = iota_image(4, 4);
  const PatchBatch b = extract_patches(img, 2);
  CHECK(b.count() == 4);
  CHECK(b.grid_rows == 2);
  CHECK(b.grid_cols == 2);
  const auto p0 = b.patch(0);
  CHECK(p0[0] == img(0, 0));
  CHECK(p0[1] == img(0, 1));
  CHECK(p0[2] == img(1, 0));
  CHECK(p0[3] == img(1, 1));
  const auto p1 = b.patch(1);
  CHECK(p1[0] == img(0, 2));
  const auto p2 = b.patch(2);
  CHECK(p2[0] == img(2, 0));
}

TEST_CASE("extract_patches sizes and errors") {
  const PatchBatch big = extract_patches(NormalizedImage(128, 128, std::vector<double>(128 * 128, 0.5)), 32);
  CHECK(big.count() == 16);
  CHECK(big.patch_size() == 1024);
  CHECK(big.grid_rows == 4);

  const NormalizedImage img = iota_image(8, 8);
  const PatchBatch whole = extract_patches(img, 8);
  REQUIRE(whole.count() == 1);
  CHECK(std::vector<double>(whole.patches) ==
        std::vector<double>(img.values().begin(), img.values().end()));

  try {
    extract_patches(iota_image(6, 8), 4);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("6") != std::string::npos);
    CHECK(msg.find("8") != std::string::npos);
    CHECK(msg.find("4") != std::string::npos);
  }
}

TEST_CASE("tile_predictions golden and errors") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(tile_predictions(v, 2, 2, 2, 2, 1) == std::vector<double>{1, 2, 3, 4});
  const std::vector<double> constant(4 * 16, 0.25);
  for (double x : tile_predictions(constant, 2, 2, 8, 8, 4)) CHECK(x == 0.25);
  CHECK_THROWS_AS(tile_predictions(v, 2, 2, 4, 4, 1), ShapeError);
  CHECK_THROWS_AS(tile_predictions(v, 1, 2, 2, 2, 1), ShapeError);
}

TEST_CASE("tile(extract(img)) is the identity") {
  std::mt19937_64 rng(21);
  for (int k : {2, 4, 8, 16, 32}) {
    for (int t = 0; t < 4; ++t) {
      const NormalizedImage img = oracle::random_image(rng, 64, 64);
      const PatchBatch b = extract_patches(img, k);
      const auto back = tile_predictions(b.patches, b.grid_rows, b.grid_cols, 64, 64, k);
      CHECK(back == std::vector<double>(img.values().begin(), img.values().end()));
    }
  }
  const NormalizedImage rect = oracle::random_image(rng, 12, 20);
  const PatchBatch b = extract_patches(rect, 4);
  CHECK(tile_predictions(b.patches, 3, 5, 12, 20, 4) ==
        std::vector<double>(rect.values().begin(), rect.values().end()));
}

TEST_CASE("reflect padding") {
  CHECK(reflect_index(-1, 5) == 1);
  CHECK(reflect_index(5, 5) == 3);
  CHECK(reflect_index(6, 5) == 2);
  CHECK(reflect_index(2, 5) == 2);
  CHECK(reflect_index(3, 1) == 0);

  const NormalizedImage img = iota_image(5, 6);
  const NormalizedImage padded = reflect_pad(img, 4);
  CHECK(padded.height() == 8);
  CHECK(padded.width() == 8);
  CHECK(padded(4, 5) == img(4, 5));
  CHECK(padded(5, 0) == img(3, 0));
  CHECK(padded(0, 6) == img(0, 4));
  CHECK(reflect_pad(iota_image(8, 8), 4) == iota_image(8, 8));

  const BinaryMask m(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const BinaryMask pm = reflect_pad(m, 2);
  CHECK(pm.height() == 4);
  CHECK(pm(3, 3) == m(1, 1));
}

TEST_CASE("segment_image: zero model gives one half") {
  MpsModel model = init_mps(2, 2, 2, 0);
  for (auto& c : model.cores) {
    for (double& v : c.values.mutable_data()) v = 0.0;
  }
  std::mt19937_64 rng(22);
  const SoftSegmentation s = segment_image(model, oracle::random_image(rng, 6, 8));
  CHECK(s.height() == 6);
  CHECK(s.width() == 8);
  for (double v : s.values()) CHECK(v == 0.5);
}

TEST_CASE("segment_image equals per-patch oracle contraction") {
  const MpsModel model = init_mps(2, 2, 2, 5, {InitScheme::kIdentity, 1.0});
  std::mt19937_64 rng(23);
  const NormalizedImage img = oracle::random_image(rng, 4, 4);
  const SoftSegmentation s = segment_image(model, img);
  const PatchBatch b = extract_patches(img, 2);
  for (int pr = 0; pr < 2; ++pr) {
    for (int pc = 0; pc < 2; ++pc) {
      const auto logits = oracle::logits_by_contraction(model, b.patch(pr * 2 + pc));
      for (int o = 0; o < 4; ++o) {
        const double ref = 1.0 / (1.0 + std::exp(-logits[o]));
        const double got = s(pr * 2 + o / 2, pc * 2 + o % 2);
        CHECK(oracle::relative_error(got, ref) < 1e-10);
      }
    }
  }
}

TEST_CASE("segment_image is invariant to chunking and threads") {
  const MpsModel model = init_mps(4, 3, 4, 8);
  std::mt19937_64 rng(24);
  const NormalizedImage img = oracle::random_image(rng, 32, 24);
  const SoftSegmentation ref = segment_image(model, img);
  for (std::size_t chunk : {1u, 3u, 7u, 48u, 100u}) {
    for (int threads : {1, 2, 5}) {
      CHECK(segment_image(model, img, {PadMode::kError, chunk, threads}) == ref);
    }
  }
}

TEST_CASE("segment_image: padding modes") {
  const MpsModel model = init_mps(4, 2, 2, 1);
  std::mt19937_64 rng(25);
  const NormalizedImage img = oracle::random_image(rng, 10, 13);
  CHECK_THROWS_AS(segment_image(model, img), ShapeError);
  const SoftSegmentation s = segment_image(model, img, {PadMode::kReflect});
  CHECK(s.height() == 10);
  CHECK(s.width() == 13);
  // Top-left patch does not touch the padded region.
  const SoftSegmentation full = segment_image(model, reflect_pad(img, 4));
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 13; ++c) CHECK(s(r, c) == full(r, c));
  }
}

TEST_CASE("segment_image: edits inside one patch stay inside it") {
  const MpsModel model = init_mps(4, 3, 3, 2, {InitScheme::kIdentity, 0.3});
  std::mt19937_64 rng(26);
  const NormalizedImage img = oracle::random_image(rng, 16, 16);
  const SoftSegmentation base = segment_image(model, img);
  std::uniform_int_distribution<int> pick(0, 15);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> v(img.values().begin(), img.values().end());
    const int r = pick(rng);
    const int c = pick(rng);
    v[r * 16 + c] = u(rng);
    const SoftSegmentation s = segment_image(model, NormalizedImage(16, 16, v));
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        if (y / 4 != r / 4 || x / 4 != c / 4) CHECK(s(y, x) == base(y, x));
      }
    }
  }
}

TEST_CASE("sigmoid is stable") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-30.0) > 0.0);
}
