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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stenet/tensor.hpp"

namespace stenet {

inline constexpr const char* kSinusoidalFeatureMap = "sinusoidal";

struct LocalFeatureConfig {
  int local_dim = 2;
  std::string name = kSinusoidalFeatureMap;
};

// Writes the d-dimensional lift of one intensity into `out` (size d).
using LocalFeatureFn = std::function<void(double x, std::span<double> out)>;

/// Named local feature maps. "sinusoidal" is always registered.
class FeatureMapRegistry {
 public:
  using Factory = std::function<LocalFeatureFn(int local_dim)>;

  static FeatureMapRegistry& instance();

  void add(const std::string& name, Factory factory);
  bool contains(const std::string& name) const;
  LocalFeatureFn make(const std::string& name, int local_dim) const;
  std::vector<std::string> names() const;

 private:
  FeatureMapRegistry();
  std::vector<std::pair<std::string, Factory>> entries_;
};

/// sqrt(C(d-1, i)) cos(pi x / 2)^(d-1-i) sin(pi x / 2)^i for i = 0..d-1.
/// Unit Euclidean norm for every x in [0,1].
std::vector<double> local_feature_map(double x, const LocalFeatureConfig& cfg);

// sqrt of binomial coefficients C(d-1, i), by multiplicative recurrence.
std::vector<double> sqrt_binomial_row(int local_dim);

/// Maps every pixel of a flattened patch; row j holds pixel j's features.
/// Result shape is (N, d).
DenseTensor map_patch(std::span<const double> patch, const LocalFeatureConfig& cfg);

// Same as map_patch but writes into a caller-owned N*d buffer.
void map_patch_into(std::span<const double> patch, const LocalFeatureFn& fn, int local_dim,
                    std::span<double> out);

inline constexpr std::size_t kOracleCapacity = std::size_t{1} << 20;

/// Tensor product of all local maps, flattened to d^N entries with the first
/// pixel's feature index most significant. Only for small N.
DenseTensor materialize_global_feature_map(std::span<const double> patch,
                                           const LocalFeatureConfig& cfg);

}  // namespace stenet
