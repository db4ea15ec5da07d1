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

#include "stenet/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stenet/errors.hpp"

namespace stenet {
namespace {

void check_dim(int local_dim) {
  if (local_dim < 2) {
    throw DomainError("local feature dimension must be >= 2, got " + std::to_string(local_dim));
  }
  if (local_dim > 64) {
    throw DomainError("local feature dimension must be <= 64, got " + std::to_string(local_dim));
  }
}

void check_intensity(double x, std::size_t pixel) {
  // NaN fails both comparisons.
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("pixel " + std::to_string(pixel) + " intensity " + std::to_string(x) +
                      " outside [0,1]");
  }
}

LocalFeatureFn make_sinusoidal(int local_dim) {
  check_dim(local_dim);
  return [coeff = sqrt_binomial_row(local_dim)](double x, std::span<double> out) {
    const std::size_t d = coeff.size();
    const double angle = std::numbers::pi / 2.0 * x;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    // out[i] = coeff[i] * c^(d-1-i) * s^i, built from both ends.
    for (std::size_t i = 0; i < d; ++i) out[i] = coeff[i];
    double sp = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      out[i] *= sp;
      sp *= s;
    }
    double cp = 1.0;
    for (std::size_t i = d; i-- > 0;) {
      out[i] *= cp;
      cp *= c;
    }
  };
}

}  // namespace

FeatureMapRegistry::FeatureMapRegistry() {
  entries_.emplace_back(kSinusoidalFeatureMap, &make_sinusoidal);
}

FeatureMapRegistry& FeatureMapRegistry::instance() {
  static FeatureMapRegistry registry;
  return registry;
}

void FeatureMapRegistry::add(const std::string& name, Factory factory) {
  if (contains(name)) throw UsageError("feature map already registered: " + name);
  entries_.emplace_back(name, std::move(factory));
}

bool FeatureMapRegistry::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

LocalFeatureFn FeatureMapRegistry::make(const std::string& name, int local_dim) const {
  for (const auto& [key, factory] : entries_) {
    if (key == name) return factory(local_dim);
  }
  throw UsageError("unknown feature map: " + name);
}

std::vector<std::string> FeatureMapRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

std::vector<double> sqrt_binomial_row(int local_dim) {
  check_dim(local_dim);
  const int n = local_dim - 1;
  std::vector<double> row(local_dim);
  double binom = 1.0;
  for (int k = 0; k <= n; ++k) {
    row[k] = std::sqrt(binom);
    binom = binom * (n - k) / (k + 1);
  }
  return row;
}

std::vector<double> local_feature_map(double x, const LocalFeatureConfig& cfg) {
  check_intensity(x, 0);
  const auto fn = FeatureMapRegistry::instance().make(cfg.name, cfg.local_dim);
  std::vector<double> out(cfg.local_dim);
  fn(x, out);
  return out;
}

void map_patch_into(std::span<const double> patch, const LocalFeatureFn& fn, int local_dim,
                    std::span<double> out) {
  if (patch.empty()) throw DomainError("map_patch: empty patch");
  const auto d = static_cast<std::size_t>(local_dim);
  if (out.size() != patch.size() * d) throw DimensionError("map_patch: output buffer size");
  for (std::size_t j = 0; j < patch.size(); ++j) {
    check_intensity(patch[j], j);
    fn(patch[j], out.subspan(j * d, d));
  }
}

DenseTensor map_patch(std::span<const double> patch, const LocalFeatureConfig& cfg) {
  if (patch.empty()) throw DomainError("map_patch: empty patch");
  const auto fn = FeatureMapRegistry::instance().make(cfg.name, cfg.local_dim);
  const auto d = static_cast<std::size_t>(cfg.local_dim);
  DenseTensor out({patch.size(), d});
  map_patch_into(patch, fn, cfg.local_dim, out.mutable_data());
  return out;
}

DenseTensor materialize_global_feature_map(std::span<const double> patch,
                                           const LocalFeatureConfig& cfg) {
  if (patch.empty()) throw DomainError("materialize_global_feature_map: empty patch");
  const auto d = static_cast<std::size_t>(cfg.local_dim);
  std::size_t total = 1;
  for (std::size_t j = 0; j < patch.size(); ++j) {
    if (total > kOracleCapacity / d) {
      throw CapacityError("global feature map of " + std::to_string(patch.size()) +
                          " pixels with d=" + std::to_string(d) + " exceeds 2^20 entries");
    }
    total *= d;
  }
  const DenseTensor local = map_patch(patch, cfg);
  std::vector<double> phi{1.0};
  for (std::size_t j = 0; j < patch.size(); ++j) {
    std::vector<double> next(phi.size() * d);
    for (std::size_t f = 0; f < phi.size(); ++f) {
      for (std::size_t i = 0; i < d; ++i) next[f * d + i] = phi[f] * local[j * d + i];
    }
    phi = std::move(next);
  }
  return DenseTensor({total}, std::move(phi));
}

}  // namespace stenet
