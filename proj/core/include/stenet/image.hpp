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

namespace stenet {

/// Single-channel image with intensities in [0,1], row-major.
class NormalizedImage {
 public:
  NormalizedImage() = default;
  NormalizedImage(int height, int width, std::vector<double> values);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator()(int row, int col) const { return values_[row * width_ + col]; }

  friend bool operator==(const NormalizedImage&, const NormalizedImage&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

/// Labels in {0,1}, row-major.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, std::vector<std::uint8_t> values);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::span<const std::uint8_t> values() const noexcept { return values_; }
  std::uint8_t operator()(int row, int col) const { return values_[row * width_ + col]; }
  std::size_t count() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> values_;
};

/// Per-pixel foreground probabilities in [0,1].
class SoftSegmentation {
 public:
  SoftSegmentation() = default;
  SoftSegmentation(int height, int width, std::vector<double> values);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator()(int row, int col) const { return values_[row * width_ + col]; }

  friend bool operator==(const SoftSegmentation&, const SoftSegmentation&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

}  // namespace stenet
