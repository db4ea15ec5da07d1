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

#include "stenet/image.hpp"

#include <algorithm>
#include <string>

#include "stenet/errors.hpp"

namespace stenet {
namespace {

void check_dims(int height, int width, std::size_t n, const char* what) {
  if (height < 1 || width < 1) {
    throw ShapeError(std::string(what) + ": dimensions must be positive");
  }
  if (static_cast<std::size_t>(height) * static_cast<std::size_t>(width) != n) {
    throw ShapeError(std::string(what) + ": " + std::to_string(n) + " values for " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
}

void check_unit_range(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
      throw DomainError(std::string(what) + ": value at " + std::to_string(i) +
                        " outside [0,1]");
    }
  }
}

}  // namespace

NormalizedImage::NormalizedImage(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims(height_, width_, values_.size(), "NormalizedImage");
  check_unit_range(values_, "NormalizedImage");
}

BinaryMask::BinaryMask(int height, int width, std::vector<std::uint8_t> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims(height_, width_, values_.size(), "BinaryMask");
  for (auto v : values_) {
    if (v > 1) throw DomainError("BinaryMask: labels must be 0 or 1");
  }
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), 1));
}

SoftSegmentation::SoftSegmentation(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims(height_, width_, values_.size(), "SoftSegmentation");
  check_unit_range(values_, "SoftSegmentation");
}

}  // namespace stenet
