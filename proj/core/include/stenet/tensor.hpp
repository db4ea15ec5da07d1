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

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace stenet {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);

/// Dense row-major array of doubles. An empty shape denotes a scalar.
class DenseTensor {
 public:
  DenseTensor() : shape_{}, data_(1, 0.0) {}
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> data);

  static DenseTensor zeros(Shape shape) { return DenseTensor(std::move(shape)); }
  static DenseTensor scalar(double value) { return DenseTensor({}, {value}); }
  static DenseTensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(std::size_t axis) const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> mutable_data() noexcept { return data_; }

  double operator[](std::size_t flat) const { return data_[flat]; }
  double& operator[](std::size_t flat) { return data_[flat]; }

  double at(std::span<const std::size_t> index) const;
  double& at(std::span<const std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

  std::size_t flat_index(std::span<const std::size_t> index) const;

  // Same data, new shape of equal total size.
  DenseTensor reshaped(Shape shape) const;
  DenseTensor scaled(double factor) const;

  double squared_norm() const;

  friend bool operator==(const DenseTensor& a, const DenseTensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Sums over paired axes. The result carries a's free axes (in order)
/// followed by b's free axes. Contracting every axis yields a scalar.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const std::size_t> axes_a,
                     std::span<const std::size_t> axes_b);

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<std::size_t> axes_a,
                     std::initializer_list<std::size_t> axes_b);

enum class ChainOrder {
  kLeftToRight,  // deterministic, used everywhere results must be bit-stable
  kBalanced,     // pairwise tree reduction
};

DenseTensor matmul(const DenseTensor& a, const DenseTensor& b);

DenseTensor matrix_chain_product(std::span<const DenseTensor> matrices,
                                 ChainOrder order = ChainOrder::kLeftToRight);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::vector<std::size_t> worst_coordinate;
  double analytic_value = 0.0;
  double numeric_value = 0.0;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Compares an analytic gradient to central differences coordinate by
/// coordinate. Relative error is |a - n| / max(|a|, |n|, 1e-12).
GradCheckReport finite_difference_check(const ScalarFunction& f,
                                        std::span<const double> x,
                                        std::span<const double> analytic_grad,
                                        double eps);

}  // namespace stenet
