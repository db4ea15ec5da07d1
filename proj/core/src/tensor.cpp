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

#include "stenet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stenet/errors.hpp"

namespace stenet {
namespace {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ')';
  return out.str();
}

std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

void validate_axes(std::span<const std::size_t> axes, std::size_t rank,
                   const char* which) {
  std::vector<bool> seen(rank, false);
  for (std::size_t axis : axes) {
    if (axis >= rank) {
      throw IndexError(std::string("contract: axis out of range in ") + which);
    }
    if (seen[axis]) {
      throw IndexError(std::string("contract: duplicate axis in ") + which);
    }
    seen[axis] = true;
  }
}

// Copies `t` into a matrix whose rows enumerate `row_axes` and columns
// enumerate `col_axes`, both in row-major order of the listed axes.
std::vector<double> permute_to_matrix(const DenseTensor& t,
                                      const std::vector<std::size_t>& row_axes,
                                      const std::vector<std::size_t>& col_axes) {
  std::vector<std::size_t> order = row_axes;
  order.insert(order.end(), col_axes.begin(), col_axes.end());
  const auto strides = row_major_strides(t.shape());
  std::vector<double> out(t.size());
  std::vector<std::size_t> counter(order.size(), 0);
  std::size_t source = 0;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out[flat] = t[source];
    // Odometer increment over the permuted axes.
    for (std::size_t k = order.size(); k-- > 0;) {
      const std::size_t axis = order[k];
      if (++counter[k] < t.shape()[axis]) {
        source += strides[axis];
        break;
      }
      source -= strides[axis] * (counter[k] - 1);
      counter[k] = 0;
    }
  }
  return out;
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  for (std::size_t e : shape_) {
    if (e == 0) throw DimensionError("tensor extents must be >= 1, got " + shape_string(shape_));
  }
  data_.assign(shape_size(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (std::size_t e : shape_) {
    if (e == 0) throw DimensionError("tensor extents must be >= 1, got " + shape_string(shape_));
  }
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

DenseTensor DenseTensor::identity(std::size_t n) {
  DenseTensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t[i * n + i] = 1.0;
  return t;
}

std::size_t DenseTensor::extent(std::size_t axis) const {
  if (axis >= shape_.size()) throw IndexError("axis out of range");
  return shape_[axis];
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw IndexError("index rank " + std::to_string(index.size()) +
                     " does not match tensor rank " + std::to_string(shape_.size()));
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= shape_[i]) throw IndexError("index out of range on axis " + std::to_string(i));
    flat = flat * shape_[i] + index[i];
  }
  return flat;
}

double DenseTensor::at(std::span<const std::size_t> index) const {
  return data_[flat_index(index)];
}

double& DenseTensor::at(std::span<const std::size_t> index) {
  return data_[flat_index(index)];
}

DenseTensor DenseTensor::reshaped(Shape shape) const {
  return DenseTensor(std::move(shape), data_);
}

DenseTensor DenseTensor::scaled(double factor) const {
  DenseTensor out = *this;
  for (double& v : out.data_) v *= factor;
  return out;
}

double DenseTensor::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const std::size_t> axes_a,
                     std::span<const std::size_t> axes_b) {
  if (axes_a.size() != axes_b.size()) {
    throw IndexError("contract: axis lists differ in length");
  }
  validate_axes(axes_a, a.rank(), "a");
  validate_axes(axes_b, b.rank(), "b");
  std::size_t inner = 1;
  for (std::size_t k = 0; k < axes_a.size(); ++k) {
    if (a.shape()[axes_a[k]] != b.shape()[axes_b[k]]) {
      throw DimensionError("contract: extent mismatch between a" +
                           shape_string(a.shape()) + " axis " + std::to_string(axes_a[k]) +
                           " and b" + shape_string(b.shape()) + " axis " +
                           std::to_string(axes_b[k]));
    }
    inner *= a.shape()[axes_a[k]];
  }

  std::vector<std::size_t> free_a;
  std::vector<std::size_t> free_b;
  Shape out_shape;
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (std::find(axes_a.begin(), axes_a.end(), i) == axes_a.end()) {
      free_a.push_back(i);
      out_shape.push_back(a.shape()[i]);
    }
  }
  for (std::size_t i = 0; i < b.rank(); ++i) {
    if (std::find(axes_b.begin(), axes_b.end(), i) == axes_b.end()) {
      free_b.push_back(i);
      out_shape.push_back(b.shape()[i]);
    }
  }

  const std::vector<std::size_t> paired_a(axes_a.begin(), axes_a.end());
  const std::vector<std::size_t> paired_b(axes_b.begin(), axes_b.end());
  const auto lhs = permute_to_matrix(a, free_a, paired_a);  // rows x inner
  const auto rhs = permute_to_matrix(b, paired_b, free_b);  // inner x cols
  const std::size_t rows = a.size() / inner;
  const std::size_t cols = b.size() / inner;

  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = lhs[r * inner + k];
      const double* brow = rhs.data() + k * cols;
      double* orow = out.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) orow[c] += av * brow[c];
    }
  }
  return DenseTensor(std::move(out_shape), std::move(out));
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<std::size_t> axes_a,
                     std::initializer_list<std::size_t> axes_b) {
  return contract(a, b, std::span<const std::size_t>(axes_a.begin(), axes_a.size()),
                  std::span<const std::size_t>(axes_b.begin(), axes_b.size()));
}

DenseTensor matmul(const DenseTensor& a, const DenseTensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul expects matrices");
  const std::size_t n = a.shape()[0];
  const std::size_t inner = a.shape()[1];
  const std::size_t m = b.shape()[1];
  if (b.shape()[0] != inner) {
    throw DimensionError("matmul: inner extent mismatch " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  }
  std::vector<double> out(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = a[i * inner + k];
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] += av * b[k * m + j];
    }
  }
  return DenseTensor({n, m}, std::move(out));
}

DenseTensor matrix_chain_product(std::span<const DenseTensor> matrices,
                                 ChainOrder order) {
  if (matrices.empty()) throw DimensionError("matrix_chain_product: empty chain");
  for (const auto& m : matrices) {
    if (m.rank() != 2) throw DimensionError("matrix_chain_product: element is not a matrix");
  }
  for (std::size_t i = 1; i < matrices.size(); ++i) {
    if (matrices[i - 1].shape()[1] != matrices[i].shape()[0]) {
      throw DimensionError("matrix_chain_product: inner extent mismatch at position " +
                           std::to_string(i));
    }
  }
  if (order == ChainOrder::kLeftToRight) {
    DenseTensor acc = matrices[0];
    for (std::size_t i = 1; i < matrices.size(); ++i) acc = matmul(acc, matrices[i]);
    return acc;
  }
  std::vector<DenseTensor> level(matrices.begin(), matrices.end());
  while (level.size() > 1) {
    std::vector<DenseTensor> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      next.push_back(matmul(level[i], level[i + 1]));
    }
    if (level.size() % 2) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  return level.front();
}

GradCheckReport finite_difference_check(const ScalarFunction& f,
                                        std::span<const double> x,
                                        std::span<const double> analytic_grad,
                                        double eps) {
  if (!(eps > 0.0)) throw DomainError("finite_difference_check: eps must be > 0");
  if (x.size() != analytic_grad.size()) {
    throw DimensionError("finite_difference_check: parameter and gradient lengths differ");
  }
  GradCheckReport report;
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + eps;
    const double up = f(probe);
    probe[i] = original - eps;
    const double down = f(probe);
    probe[i] = original;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_difference_check: non-finite function value at coordinate " +
                         std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * eps);
    const double analytic = analytic_grad[i];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    const double rel = std::abs(analytic - numeric) / denom;
    if (report.worst_coordinate.empty() || rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_coordinate = {i};
      report.analytic_value = analytic;
      report.numeric_value = numeric;
    }
  }
  return report;
}

}  // namespace stenet
