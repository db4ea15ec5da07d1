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

#include "stenet/mps.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "stenet/errors.hpp"

namespace stenet {
namespace {

void check_overflow(std::span<const double> v, int site) {
  for (double x : v) {
    if (!std::isfinite(x) || std::abs(x) > kOverflowThreshold) {
      throw OverflowError("chain product overflow at site " + std::to_string(site), site);
    }
  }
}

void check_features(const MpsModel& model, const DenseTensor& features) {
  if (features.rank() != 3 || features.shape()[1] != static_cast<std::size_t>(model.n_sites) ||
      features.shape()[2] != static_cast<std::size_t>(model.local_dim)) {
    throw DimensionError("forward: features must have shape (B, " +
                         std::to_string(model.n_sites) + ", " +
                         std::to_string(model.local_dim) + ")");
  }
}

// Contracts the feature index of `core` with `psi`; writes
// left_bond*right_bond*outputs values into `out`.
void contract_site(const MpsCore& core, std::span<const double> psi, double* out) {
  const std::size_t block = core.left_bond() * core.right_bond() * core.outputs();
  const double* a = core.values.data().data();
  std::fill(out, out + block, 0.0);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double w = psi[i];
    const double* slice = a + i * block;
    for (std::size_t k = 0; k < block; ++k) out[k] += w * slice[k];
  }
}

// Evaluates one sample. Site matrices and environments land in the given
// buffers, laid out as in ForwardCache.
void forward_sample(const MpsModel& model, std::span<const double> psi, double* sites,
                    double* left, double* right, double* logits) {
  const int n = model.n_sites;
  const int c = model.output_site;
  const std::size_t d = model.local_dim;
  const std::size_t beta = model.bond_dim;
  const std::size_t bb = beta * beta;
  const std::size_t m = model.output_dim;

  auto site_ptr = [&](int j) { return sites + static_cast<std::size_t>(j) * bb + (j > c ? bb * (m - 1) : 0); };

  for (int j = 0; j < n; ++j) {
    contract_site(model.cores[j], psi.subspan(j * d, d), site_ptr(j));
  }

  // Left sweep: left[j] enters site j.
  left[0] = 1.0;
  for (int j = 0; j < c; ++j) {
    const std::size_t bl = model.left_bond(j);
    const std::size_t br = model.right_bond(j);
    const double* l = left + j * beta;
    double* next = left + (j + 1) * beta;
    const double* s = site_ptr(j);
    for (std::size_t b = 0; b < br; ++b) {
      double acc = 0.0;
      for (std::size_t a = 0; a < bl; ++a) acc += l[a] * s[a * br + b];
      next[b] = acc;
    }
    check_overflow({next, br}, j);
  }

  // Right sweep: right slot k corresponds to chain position c+1+k.
  const int right_slots = n - c;
  right[(right_slots - 1) * beta] = 1.0;
  for (int j = n - 1; j > c; --j) {
    const std::size_t bl = model.left_bond(j);
    const std::size_t br = model.right_bond(j);
    const double* r = right + (j + 1 - c - 1) * beta;
    double* next = right + (j - c - 1) * beta;
    const double* s = site_ptr(j);
    for (std::size_t a = 0; a < bl; ++a) {
      double acc = 0.0;
      for (std::size_t b = 0; b < br; ++b) acc += s[a * br + b] * r[b];
      next[a] = acc;
    }
    check_overflow({next, bl}, j);
  }

  const std::size_t bl = model.left_bond(c);
  const std::size_t br = model.right_bond(c);
  const double* l = left + c * beta;
  const double* r = right;
  const double* t = site_ptr(c);
  std::fill(logits, logits + m, 0.0);
  for (std::size_t a = 0; a < bl; ++a) {
    for (std::size_t b = 0; b < br; ++b) {
      const double w = l[a] * r[b];
      const double* row = t + (a * br + b) * m;
      for (std::size_t o = 0; o < m; ++o) logits[o] += w * row[o];
    }
  }
  check_overflow({logits, m}, c);
}

// Least-squares solve by modified Gram-Schmidt QR; `cols` are the columns of
// the design matrix.
std::vector<double> least_squares(std::vector<std::vector<double>> cols, std::vector<double> rhs) {
  const std::size_t n = cols.size();
  std::vector<std::vector<double>> r(n, std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t p = 0; p < k; ++p) {
      double dot = 0.0;
      for (std::size_t i = 0; i < rhs.size(); ++i) dot += cols[p][i] * cols[k][i];
      r[p][k] = dot;
      for (std::size_t i = 0; i < rhs.size(); ++i) cols[k][i] -= dot * cols[p][i];
    }
    double norm = 0.0;
    for (double v : cols[k]) norm += v * v;
    norm = std::sqrt(norm);
    r[k][k] = norm;
    if (norm < 1e-14) throw NumericError("unit_response_weights: rank-deficient feature basis");
    for (double& v : cols[k]) v /= norm;
  }
  std::vector<double> qtb(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double dot = 0.0;
    for (std::size_t i = 0; i < rhs.size(); ++i) dot += cols[k][i] * rhs[i];
    qtb[k] = dot;
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    double acc = qtb[k];
    for (std::size_t p = k + 1; p < n; ++p) acc -= r[k][p] * x[p];
    x[k] = acc / r[k][k];
  }
  return x;
}

}  // namespace

Shape MpsModel::core_shape(int site) const {
  Shape shape{static_cast<std::size_t>(local_dim), left_bond(site), right_bond(site)};
  if (site == output_site) shape.push_back(static_cast<std::size_t>(output_dim));
  return shape;
}

void MpsModel::validate() const {
  if (stride < 1 || local_dim < 2 || bond_dim < 1) throw StateError("model: invalid K, d or bond");
  if (n_sites != stride * stride) throw StateError("model: n_sites must equal K^2");
  if (output_dim != n_sites) throw StateError("model: output_dim must equal K^2");
  if (output_site < 0 || output_site >= n_sites) throw StateError("model: output site out of range");
  if (cores.size() != static_cast<std::size_t>(n_sites)) throw StateError("model: core count mismatch");
  int outputs = 0;
  for (int j = 0; j < n_sites; ++j) {
    if (cores[j].values.shape() != core_shape(j)) {
      throw StateError("model: core " + std::to_string(j) + " has unexpected shape");
    }
    if (cores[j].is_output()) ++outputs;
    for (double v : cores[j].values.data()) {
      if (!std::isfinite(v)) throw StateError("model: core " + std::to_string(j) + " is not finite");
    }
  }
  if (outputs != 1) throw StateError("model: exactly one output core required");
}

std::vector<double> unit_response_weights(const LocalFeatureFn& fn, int local_dim) {
  constexpr int kGrid = 1001;
  const auto d = static_cast<std::size_t>(local_dim);
  std::vector<std::vector<double>> cols(d, std::vector<double>(kGrid));
  std::vector<double> psi(d);
  for (int k = 0; k < kGrid; ++k) {
    fn(static_cast<double>(k) / (kGrid - 1), psi);
    for (std::size_t i = 0; i < d; ++i) cols[i][k] = psi[i];
  }
  return least_squares(std::move(cols), std::vector<double>(kGrid, 1.0));
}

MpsModel init_mps(int stride, int local_dim, int bond_dim, std::uint64_t seed,
                  const MpsInitOptions& options) {
  if (stride < 1) throw DomainError("init_mps: stride K must be >= 1");
  if (local_dim < 2) throw DomainError("init_mps: local dimension d must be >= 2");
  if (bond_dim < 1) throw DomainError("init_mps: bond dimension must be >= 1");
  if (!(options.noise_std >= 0.0)) throw DomainError("init_mps: noise std must be >= 0");

  MpsModel model;
  model.stride = stride;
  model.n_sites = stride * stride;
  model.local_dim = local_dim;
  model.bond_dim = bond_dim;
  model.output_dim = model.n_sites;
  model.output_site = model.n_sites / 2;
  model.seed = seed;
  model.feature_map = options.feature_map;

  std::vector<double> slice_weight(local_dim, 1.0);
  if (options.scheme == InitScheme::kUnitResponse) {
    const auto fn = FeatureMapRegistry::instance().make(options.feature_map, local_dim);
    slice_weight = unit_response_weights(fn, local_dim);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  model.cores.reserve(model.n_sites);
  for (int j = 0; j < model.n_sites; ++j) {
    MpsCore core{DenseTensor(model.core_shape(j))};
    const std::size_t bl = core.left_bond();
    const std::size_t br = core.right_bond();
    const std::size_t m = core.outputs();
    auto data = core.values.mutable_data();
    for (std::size_t i = 0; i < static_cast<std::size_t>(local_dim); ++i) {
      for (std::size_t a = 0; a < bl; ++a) {
        for (std::size_t b = 0; b < br; ++b) {
          for (std::size_t o = 0; o < m; ++o) {
            const double eye = (a == b) ? slice_weight[i] : 0.0;
            data[((i * bl + a) * br + b) * m + o] = eye;
          }
        }
      }
    }
    for (double& v : data) v += options.noise_std * noise(rng);
    model.cores.push_back(std::move(core));
  }
  return model;
}

std::size_t ForwardCache::sample_site_stride() const {
  const std::size_t bb = static_cast<std::size_t>(bond_dim) * bond_dim;
  return bb * (n_sites + output_dim - 1);
}

std::size_t ForwardCache::site_offset(std::size_t sample, int site) const {
  const std::size_t bb = static_cast<std::size_t>(bond_dim) * bond_dim;
  return sample * sample_site_stride() + site * bb + (site > output_site ? bb * (output_dim - 1) : 0);
}

std::span<const double> ForwardCache::left_vector(std::size_t sample, int site) const {
  if (site < 0 || site > output_site) throw IndexError("left_vector: site out of range");
  const std::size_t len = site == 0 ? 1 : bond_dim;
  return {left.data() + (sample * (output_site + 1) + site) * bond_dim, len};
}

std::span<const double> ForwardCache::right_vector(std::size_t sample, int site) const {
  if (site <= output_site || site > n_sites) throw IndexError("right_vector: site out of range");
  const std::size_t len = site == n_sites ? 1 : bond_dim;
  return {right.data() + (sample * (n_sites - output_site) + site - output_site - 1) * bond_dim,
          len};
}

double ForwardCache::chain_value(const MpsModel& model, std::size_t sample, int site,
                                 int channel) const {
  const int c = output_site;
  const std::size_t m = output_dim;
  auto matrix = [&](int j) { return sites.data() + site_offset(sample, j); };
  // Column vector to the right of the output site, contracted through to `site`
  // when site < c.
  auto right_of_output = [&]() {
    const auto r = right_vector(sample, c + 1);
    const std::size_t bl = model.left_bond(c);
    const std::size_t br = model.right_bond(c);
    std::vector<double> v(bl, 0.0);
    const double* t = matrix(c);
    for (std::size_t a = 0; a < bl; ++a) {
      for (std::size_t b = 0; b < br; ++b) v[a] += t[(a * br + b) * m + channel] * r[b];
    }
    return v;
  };
  if (site == c) {
    const auto l = left_vector(sample, c);
    const auto v = right_of_output();
    double acc = 0.0;
    for (std::size_t a = 0; a < l.size(); ++a) acc += l[a] * v[a];
    return acc;
  }
  if (site < c) {
    std::vector<double> env = right_of_output();
    for (int j = c - 1; j > site; --j) {
      const std::size_t bl = model.left_bond(j);
      const std::size_t br = model.right_bond(j);
      std::vector<double> next(bl, 0.0);
      for (std::size_t a = 0; a < bl; ++a) {
        for (std::size_t b = 0; b < br; ++b) next[a] += matrix(j)[a * br + b] * env[b];
      }
      env = std::move(next);
    }
    const auto l = left_vector(sample, site);
    const std::size_t bl = model.left_bond(site);
    const std::size_t br = model.right_bond(site);
    double acc = 0.0;
    for (std::size_t a = 0; a < bl; ++a) {
      for (std::size_t b = 0; b < br; ++b) acc += l[a] * matrix(site)[a * br + b] * env[b];
    }
    return acc;
  }
  // site > c: row vector from the left through the output channel.
  const auto l = left_vector(sample, c);
  std::vector<double> env(model.right_bond(c), 0.0);
  {
    const std::size_t bl = model.left_bond(c);
    const std::size_t br = model.right_bond(c);
    for (std::size_t a = 0; a < bl; ++a) {
      for (std::size_t b = 0; b < br; ++b) env[b] += l[a] * matrix(c)[(a * br + b) * m + channel];
    }
  }
  for (int j = c + 1; j < site; ++j) {
    const std::size_t bl = model.left_bond(j);
    const std::size_t br = model.right_bond(j);
    std::vector<double> next(br, 0.0);
    for (std::size_t a = 0; a < bl; ++a) {
      for (std::size_t b = 0; b < br; ++b) next[b] += env[a] * matrix(j)[a * br + b];
    }
    env = std::move(next);
  }
  const auto r = right_vector(sample, site + 1);
  const std::size_t bl = model.left_bond(site);
  const std::size_t br = model.right_bond(site);
  double acc = 0.0;
  for (std::size_t a = 0; a < bl; ++a) {
    for (std::size_t b = 0; b < br; ++b) acc += env[a] * matrix(site)[a * br + b] * r[b];
  }
  return acc;
}

ForwardResult forward(const MpsModel& model, const DenseTensor& features) {
  check_features(model, features);
  const std::size_t batch = features.shape()[0];
  const std::size_t n = model.n_sites;
  const std::size_t d = model.local_dim;
  const std::size_t beta = model.bond_dim;
  const std::size_t m = model.output_dim;

  ForwardCache cache;
  cache.batch = batch;
  cache.n_sites = model.n_sites;
  cache.local_dim = model.local_dim;
  cache.bond_dim = model.bond_dim;
  cache.output_dim = model.output_dim;
  cache.output_site = model.output_site;
  cache.features.assign(features.data().begin(), features.data().end());
  cache.sites.assign(batch * cache.sample_site_stride(), 0.0);
  cache.left.assign(batch * (model.output_site + 1) * beta, 0.0);
  cache.right.assign(batch * (n - model.output_site) * beta, 0.0);

  DenseTensor logits({batch, m});
  auto out = logits.mutable_data();
  for (std::size_t s = 0; s < batch; ++s) {
    forward_sample(model, features.data().subspan(s * n * d, n * d),
                   cache.sites.data() + s * cache.sample_site_stride(),
                   cache.left.data() + s * (model.output_site + 1) * beta,
                   cache.right.data() + s * (n - model.output_site) * beta, out.data() + s * m);
  }
  return {std::move(logits), std::move(cache)};
}

DenseTensor forward_logits(const MpsModel& model, const DenseTensor& features) {
  check_features(model, features);
  const std::size_t batch = features.shape()[0];
  const std::size_t n = model.n_sites;
  const std::size_t d = model.local_dim;
  const std::size_t beta = model.bond_dim;
  const std::size_t m = model.output_dim;
  std::vector<double> sites(beta * beta * (n + m - 1));
  std::vector<double> left((model.output_site + 1) * beta);
  std::vector<double> right((n - model.output_site) * beta);
  DenseTensor logits({batch, m});
  auto out = logits.mutable_data();
  for (std::size_t s = 0; s < batch; ++s) {
    std::fill(left.begin(), left.end(), 0.0);
    std::fill(right.begin(), right.end(), 0.0);
    forward_sample(model, features.data().subspan(s * n * d, n * d), sites.data(), left.data(),
                   right.data(), out.data() + s * m);
  }
  return logits;
}

std::vector<DenseTensor> backward(const MpsModel& model, const ForwardCache& cache,
                                  const DenseTensor& upstream) {
  if (cache.n_sites != model.n_sites || cache.local_dim != model.local_dim ||
      cache.bond_dim != model.bond_dim || cache.output_dim != model.output_dim ||
      cache.output_site != model.output_site ||
      cache.features.size() != cache.batch * model.n_sites * model.local_dim) {
    throw StateError("backward: cache does not match model");
  }
  if (upstream.rank() != 2 || upstream.shape()[0] != cache.batch ||
      upstream.shape()[1] != static_cast<std::size_t>(model.output_dim)) {
    throw DimensionError("backward: upstream must have shape (B, outputs)");
  }

  const int n = model.n_sites;
  const int c = model.output_site;
  const auto d = static_cast<std::size_t>(model.local_dim);
  const auto m = static_cast<std::size_t>(model.output_dim);
  const auto beta = static_cast<std::size_t>(model.bond_dim);

  std::vector<DenseTensor> grads;
  grads.reserve(n);
  for (int j = 0; j < n; ++j) grads.emplace_back(model.core_shape(j));

  std::vector<double> g(beta);
  std::vector<double> next(beta);
  for (std::size_t s = 0; s < cache.batch; ++s) {
    const auto u = upstream.data().subspan(s * m, m);
    const double* psi = cache.features.data() + s * n * d;
    auto matrix = [&](int j) { return cache.sites.data() + cache.site_offset(s, j); };

    // Output core.
    const auto lc = cache.left_vector(s, c);
    const auto rc = cache.right_vector(s, c + 1);
    {
      const std::size_t bl = model.left_bond(c);
      const std::size_t br = model.right_bond(c);
      const std::size_t block = bl * br * m;
      auto gd = grads[c].mutable_data();
      for (std::size_t i = 0; i < d; ++i) {
        const double w = psi[c * d + i];
        double* slice = gd.data() + i * block;
        for (std::size_t a = 0; a < bl; ++a) {
          for (std::size_t b = 0; b < br; ++b) {
            const double lr = w * lc[a] * rc[b];
            double* row = slice + (a * br + b) * m;
            for (std::size_t o = 0; o < m; ++o) row[o] += lr * u[o];
          }
        }
      }
    }

    // Leftward: g holds dLoss/d(left vector entering site j+1).
    {
      const std::size_t bl = model.left_bond(c);
      const std::size_t br = model.right_bond(c);
      const double* t = matrix(c);
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t a = 0; a < bl; ++a) {
        double acc = 0.0;
        for (std::size_t b = 0; b < br; ++b) {
          const double* row = t + (a * br + b) * m;
          double dot = 0.0;
          for (std::size_t o = 0; o < m; ++o) dot += row[o] * u[o];
          acc += dot * rc[b];
        }
        g[a] = acc;
      }
    }
    for (int j = c - 1; j >= 0; --j) {
      const std::size_t bl = model.left_bond(j);
      const std::size_t br = model.right_bond(j);
      const auto l = cache.left_vector(s, j);
      const double* sm = matrix(j);
      auto gd = grads[j].mutable_data();
      for (std::size_t i = 0; i < d; ++i) {
        const double w = psi[j * d + i];
        double* slice = gd.data() + i * bl * br;
        for (std::size_t a = 0; a < bl; ++a) {
          const double wl = w * l[a];
          for (std::size_t b = 0; b < br; ++b) slice[a * br + b] += wl * g[b];
        }
      }
      for (std::size_t a = 0; a < bl; ++a) {
        double acc = 0.0;
        for (std::size_t b = 0; b < br; ++b) acc += sm[a * br + b] * g[b];
        next[a] = acc;
      }
      std::swap(g, next);
    }

    // Rightward: g holds dLoss/d(right vector to the right of site j-1).
    {
      const std::size_t bl = model.left_bond(c);
      const std::size_t br = model.right_bond(c);
      const double* t = matrix(c);
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t a = 0; a < bl; ++a) {
        for (std::size_t b = 0; b < br; ++b) {
          const double* row = t + (a * br + b) * m;
          double dot = 0.0;
          for (std::size_t o = 0; o < m; ++o) dot += row[o] * u[o];
          g[b] += lc[a] * dot;
        }
      }
    }
    for (int j = c + 1; j < n; ++j) {
      const std::size_t bl = model.left_bond(j);
      const std::size_t br = model.right_bond(j);
      const auto r = cache.right_vector(s, j + 1);
      const double* sm = matrix(j);
      auto gd = grads[j].mutable_data();
      for (std::size_t i = 0; i < d; ++i) {
        const double w = psi[j * d + i];
        double* slice = gd.data() + i * bl * br;
        for (std::size_t a = 0; a < bl; ++a) {
          const double wg = w * g[a];
          for (std::size_t b = 0; b < br; ++b) slice[a * br + b] += wg * r[b];
        }
      }
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t a = 0; a < bl; ++a) {
        for (std::size_t b = 0; b < br; ++b) next[b] += g[a] * sm[a * br + b];
      }
      std::swap(g, next);
    }
  }
  return grads;
}

DenseTensor materialize_weight_tensor(const MpsModel& model) {
  const auto d = static_cast<std::size_t>(model.local_dim);
  std::size_t features = 1;
  for (int j = 0; j < model.n_sites; ++j) {
    if (features > kOracleCapacity / d) {
      throw CapacityError("materialize_weight_tensor: d^N exceeds 2^20");
    }
    features *= d;
  }
  // acc holds (outputs_so_far, features_so_far, right_bond) row-major.
  std::size_t outs = 1;
  std::size_t feats = 1;
  std::size_t bond = 1;
  std::vector<double> acc{1.0};
  for (int j = 0; j < model.n_sites; ++j) {
    const MpsCore& core = model.cores[j];
    const std::size_t bl = core.left_bond();
    const std::size_t br = core.right_bond();
    const std::size_t m = core.outputs();
    if (bl != bond) throw StateError("materialize_weight_tensor: bond mismatch");
    const std::size_t new_outs = outs * m;
    std::vector<double> next(new_outs * feats * d * br, 0.0);
    const double* a = core.values.data().data();
    for (std::size_t o = 0; o < outs; ++o) {
      for (std::size_t f = 0; f < feats; ++f) {
        const double* x = acc.data() + (o * feats + f) * bond;
        for (std::size_t i = 0; i < d; ++i) {
          for (std::size_t al = 0; al < bl; ++al) {
            const double xv = x[al];
            for (std::size_t b = 0; b < br; ++b) {
              for (std::size_t q = 0; q < m; ++q) {
                const std::size_t oo = o * m + q;
                next[((oo * feats + f) * d + i) * br + b] +=
                    xv * a[((i * bl + al) * br + b) * m + q];
              }
            }
          }
        }
      }
    }
    acc = std::move(next);
    outs = new_outs;
    feats *= d;
    bond = br;
  }
  return DenseTensor({outs, feats}, std::move(acc));
}

std::size_t parameter_count(const MpsModel& model) {
  std::size_t total = 0;
  for (const auto& core : model.cores) total += core.values.size();
  return total;
}

std::vector<double> flatten_parameters(const MpsModel& model) {
  std::vector<double> flat;
  flat.reserve(parameter_count(model));
  for (const auto& core : model.cores) {
    flat.insert(flat.end(), core.values.data().begin(), core.values.data().end());
  }
  return flat;
}

void assign_parameters(MpsModel& model, std::span<const double> flat) {
  if (flat.size() != parameter_count(model)) {
    throw DimensionError("assign_parameters: expected " + std::to_string(parameter_count(model)) +
                         " values, got " + std::to_string(flat.size()));
  }
  std::size_t offset = 0;
  for (auto& core : model.cores) {
    auto data = core.values.mutable_data();
    std::copy_n(flat.begin() + offset, data.size(), data.begin());
    offset += data.size();
  }
}

std::vector<double> flatten_gradients(std::span<const DenseTensor> grads) {
  std::vector<double> flat;
  for (const auto& g : grads) flat.insert(flat.end(), g.data().begin(), g.data().end());
  return flat;
}

}  // namespace stenet
