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
#include <string>
#include <vector>

#include "stenet/feature_map.hpp"
#include "stenet/tensor.hpp"

namespace stenet {

/// One chain site. Ordinary sites hold (d, left_bond, right_bond); the output
/// site holds (d, left_bond, right_bond, outputs).
struct MpsCore {
  DenseTensor values;

  bool is_output() const noexcept { return values.rank() == 4; }
  std::size_t local_dim() const { return values.shape()[0]; }
  std::size_t left_bond() const { return values.shape()[1]; }
  std::size_t right_bond() const { return values.shape()[2]; }
  std::size_t outputs() const { return is_output() ? values.shape()[3] : 1; }
};

struct MpsModel {
  int stride = 1;  // K; the chain covers K*K pixels
  int n_sites = 1;
  int local_dim = 2;
  int bond_dim = 1;
  int output_dim = 1;
  int output_site = 0;
  std::uint64_t seed = 0;
  std::string feature_map = kSinusoidalFeatureMap;
  std::vector<MpsCore> cores;

  std::size_t left_bond(int site) const { return site == 0 ? 1 : bond_dim; }
  std::size_t right_bond(int site) const { return site == n_sites - 1 ? 1 : bond_dim; }
  Shape core_shape(int site) const;

  // Throws StateError when metadata and core shapes disagree or values are
  // non-finite.
  void validate() const;
};

enum class InitScheme {
  // Each feature slice is w_i * I + noise, with w fitted so that
  // sum_i w_i psi_i(x) ~= 1 on [0,1]; site matrices start near the identity.
  kUnitResponse,
  // Each feature slice is I + noise.
  kIdentity,
};

struct MpsInitOptions {
  InitScheme scheme = InitScheme::kUnitResponse;
  double noise_std = 1e-2;
  std::string feature_map = kSinusoidalFeatureMap;
};

MpsModel init_mps(int stride, int local_dim, int bond_dim, std::uint64_t seed,
                  const MpsInitOptions& options = {});

// Least-squares weights w minimizing sum_x (w . psi(x) - 1)^2 on a 1001-point
// grid of [0,1].
std::vector<double> unit_response_weights(const LocalFeatureFn& fn, int local_dim);

/// Per-sample intermediates kept by forward() for backward().
struct ForwardCache {
  std::size_t batch = 0;
  int n_sites = 0;
  int local_dim = 0;
  int bond_dim = 0;
  int output_dim = 0;
  int output_site = 0;

  std::vector<double> features;  // batch x n_sites x d
  // Contracted site matrices, bond_dim^2 slots per ordinary site and
  // bond_dim^2 * output_dim for the output site.
  std::vector<double> sites;
  // left[s][j], j = 0..output_site: row vector entering site j.
  std::vector<double> left;
  // right[s][j - output_site - 1], j = output_site+1..n_sites: column vector
  // to the right of site j-1 (right[N] is the trailing unit vector).
  std::vector<double> right;

  std::size_t site_offset(std::size_t sample, int site) const;
  std::size_t sample_site_stride() const;
  std::span<const double> left_vector(std::size_t sample, int site) const;
  std::span<const double> right_vector(std::size_t sample, int site) const;

  /// left-environment(site) * site-matrix(site) * right-environment(site)
  /// for output `channel`. Equals the forward logit for every site.
  double chain_value(const MpsModel& model, std::size_t sample, int site, int channel) const;
};

struct ForwardResult {
  DenseTensor logits;  // batch x output_dim
  ForwardCache cache;
};

/// Contracts each core with its pixel's features, then multiplies the site
/// matrices along the chain. `features` has shape (B, N, d).
ForwardResult forward(const MpsModel& model, const DenseTensor& features);

// Logits only; does not retain intermediates.
DenseTensor forward_logits(const MpsModel& model, const DenseTensor& features);

/// Gradient of a scalar loss with respect to every core entry, given the
/// loss gradient with respect to the logits (shape B x output_dim).
/// Samples are reduced in index order.
std::vector<DenseTensor> backward(const MpsModel& model, const ForwardCache& cache,
                                  const DenseTensor& upstream);

/// Full weight tensor of shape (output_dim, d^N). Oracle use only.
DenseTensor materialize_weight_tensor(const MpsModel& model);

std::size_t parameter_count(const MpsModel& model);

std::vector<double> flatten_parameters(const MpsModel& model);
void assign_parameters(MpsModel& model, std::span<const double> flat);
std::vector<double> flatten_gradients(std::span<const DenseTensor> grads);

// Overflow guard applied to every intermediate vector.
inline constexpr double kOverflowThreshold = 1e300;

}  // namespace stenet
