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
#include <random>

#include "oracles.hpp"
#include "stenet/errors.hpp"
#include "stenet/feature_map.hpp"
#include "stenet/mps.hpp"

using namespace stenet;

namespace {

DenseTensor features_for(const MpsModel& model, const std::vector<std::vector<double>>& patches) {
  const std::size_t n = model.n_sites;
  const std::size_t d = model.local_dim;
  DenseTensor f({patches.size(), n, d});
  const LocalFeatureFn fn = FeatureMapRegistry::instance().make(model.feature_map, model.local_dim);
  for (std::size_t b = 0; b < patches.size(); ++b) {
    map_patch_into(patches[b], fn, model.local_dim, f.mutable_data().subspan(b * n * d, n * d));
  }
  return f;
}

MpsModel random_model(int k, int d, int beta, std::uint64_t seed) {
  // Unit-scale noise exercises every entry rather than a near-identity chain.
  MpsModel model = init_mps(k, d, beta, seed, {InitScheme::kIdentity, 1.0});
  return model;
}

void zero_cores(MpsModel& model) {
  for (auto& core : model.cores) {
    for (double& v : core.values.mutable_data()) v = 0.0;
  }
}

}  // namespace

TEST_CASE("init_mps shapes") {
  const MpsModel one = init_mps(1, 2, 1, 0);
  REQUIRE(one.cores.size() == 1);
  CHECK(one.cores[0].values.shape() == Shape{2, 1, 1, 1});
  CHECK(one.output_site == 0);
  CHECK(one.output_dim == 1);

  const MpsModel big = init_mps(8, 4, 4, 0);
  CHECK(big.n_sites == 64);
  CHECK(big.cores.size() == 64);
  CHECK(big.output_site == 32);
  CHECK(big.output_dim == 64);
  for (int j = 0; j < 64; ++j) {
    CHECK(big.cores[j].is_output() == (j == 32));
    CHECK(big.cores[j].values.shape() == big.core_shape(j));
  }
  CHECK(big.cores[0].left_bond() == 1);
  CHECK(big.cores[63].right_bond() == 1);
  CHECK_NOTHROW(big.validate());

  CHECK_THROWS_AS(init_mps(0, 2, 1, 0), DomainError);
  CHECK_THROWS_AS(init_mps(1, 1, 1, 0), DomainError);
  CHECK_THROWS_AS(init_mps(1, 2, 0, 0), DomainError);
}

TEST_CASE("init_mps is deterministic in the seed") {
  for (auto scheme : {InitScheme::kUnitResponse, InitScheme::kIdentity}) {
    const MpsModel a = init_mps(3, 3, 4, 77, {scheme});
    const MpsModel b = init_mps(3, 3, 4, 77, {scheme});
    const MpsModel c = init_mps(3, 3, 4, 78, {scheme});
    CHECK(flatten_parameters(a) == flatten_parameters(b));
    CHECK(flatten_parameters(a) != flatten_parameters(c));
  }
}

TEST_CASE("identity init: slices are the identity plus small noise") {
  const MpsModel m = init_mps(2, 3, 3, 9, {InitScheme::kIdentity, 1e-2});
  const MpsCore& core = m.cores[1];  // interior, 3x3 bonds
  double max_dev = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b) {
        const double expected = a == b ? 1.0 : 0.0;
        max_dev = std::max(max_dev, std::abs(core.values.at({i, a, b}) - expected));
      }
    }
  }
  CHECK(max_dev > 0.0);
  CHECK(max_dev < 0.06);
}

TEST_CASE("unit_response_weights make a nearly constant local response") {
  const auto w = unit_response_weights(FeatureMapRegistry::instance().make(kSinusoidalFeatureMap, 4), 4);
  REQUIRE(w.size() == 4);
  CHECK(w[0] == doctest::Approx(w[3]).epsilon(1e-9));
  CHECK(w[1] == doctest::Approx(w[2]).epsilon(1e-9));
  double worst = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const auto psi = local_feature_map(k / 100.0, {4});
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += w[i] * psi[i];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  CHECK(worst < 0.05);
}

TEST_CASE("parameter_count") {
  CHECK(parameter_count(init_mps(1, 2, 1, 0)) == 2);
  CHECK(parameter_count(init_mps(2, 2, 2, 0)) == 48);
  // 2 boundary (4*1*4) + 61 interior (4*4*4) + output (4*4*4*64).
  CHECK(parameter_count(init_mps(8, 4, 4, 0)) == 2 * 16 + 61 * 64 + 64 * 64);
  CHECK(parameter_count(init_mps(8, 4, 4, 0)) == 8032);
  const MpsModel m = init_mps(3, 3, 2, 1);
  CHECK(parameter_count(m) == flatten_parameters(m).size());
}

TEST_CASE("forward equals the materialized weight tensor contracted with the global map") {
  const int configs[4][3] = {{2, 2, 2}, {2, 2, 4}, {2, 3, 2}, {3, 2, 2}};
  for (const auto& cfg : configs) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const MpsModel model = random_model(cfg[0], cfg[1], cfg[2], seed);
      std::mt19937_64 rng(seed * 31 + 7);
      const auto patch = oracle::random_unit_values(rng, model.n_sites);
      const DenseTensor logits = forward_logits(model, features_for(model, {patch}));
      const auto ref = oracle::logits_by_contraction(model, patch);
      CHECK(oracle::max_relative_error(logits.data(), ref) < 1e-10);
      // Library materialization agrees with the contraction-only oracle.
      const DenseTensor theta = materialize_weight_tensor(model);
      const DenseTensor theta_ref = oracle::weight_tensor_by_contraction(model);
      CHECK(oracle::max_relative_error(theta.data(), theta_ref.data()) < 1e-12);
    }
  }
}

TEST_CASE("forward golden: K=2, d=2, beta=4, seed 42, zero patch") {
  const MpsModel model = init_mps(2, 2, 4, 42);
  const std::vector<double> patch(4, 0.0);
  const DenseTensor logits = forward_logits(model, features_for(model, {patch}));
  const auto ref = oracle::logits_by_contraction(model, patch);
  CHECK(oracle::max_relative_error(logits.data(), ref) < 1e-10);
}

TEST_CASE("materialize_weight_tensor: degenerate cases and guard") {
  MpsModel zero = init_mps(2, 2, 2, 3);
  zero_cores(zero);
  const DenseTensor theta_zero = materialize_weight_tensor(zero);
  for (double v : theta_zero.data()) CHECK(v == 0.0);

  const MpsModel single = init_mps(1, 3, 1, 5);
  const DenseTensor theta = materialize_weight_tensor(single);
  REQUIRE(theta.shape() == Shape{1, 3});
  for (std::size_t i = 0; i < 3; ++i) CHECK(theta[i] == single.cores[0].values[i]);

  CHECK_THROWS_AS(materialize_weight_tensor(init_mps(5, 2, 1, 0)), CapacityError);
}

TEST_CASE("full-rank bond dimension represents an arbitrary target exactly") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    DenseTensor target({4, 16});
    for (double& v : target.mutable_data()) v = g(rng);
    const MpsModel model = oracle::tt_svd(target, 2, 2, 4);
    CHECK_NOTHROW(model.validate());
    const DenseTensor theta = materialize_weight_tensor(model);
    CHECK(oracle::max_relative_error(theta.data(), target.data()) < 1e-10);
  }
}

TEST_CASE("forward: zero cores give zero logits") {
  MpsModel model = init_mps(2, 3, 2, 1);
  zero_cores(model);
  std::mt19937_64 rng(2);
  const DenseTensor logits =
      forward_logits(model, features_for(model, {oracle::random_unit_values(rng, 4)}));
  for (double v : logits.data()) CHECK(v == 0.0);
}

TEST_CASE("forward is linear in each core") {
  std::mt19937_64 rng(3);
  const MpsModel base = random_model(2, 2, 3, 4);
  const DenseTensor f = features_for(
      base, {oracle::random_unit_values(rng, 4), oracle::random_unit_values(rng, 4)});
  const DenseTensor z = forward_logits(base, f);
  for (int site = 0; site < base.n_sites; ++site) {
    MpsModel scaled = base;
    scaled.cores[site].values = base.cores[site].values.scaled(2.0);
    const DenseTensor z2 = forward_logits(scaled, f);
    CHECK(oracle::max_relative_error(z2.data(), z.scaled(2.0).data()) < 1e-12);

    MpsModel other = base;
    const MpsModel donor = random_model(2, 2, 3, 100 + site);
    other.cores[site] = donor.cores[site];
    MpsModel sum = base;
    for (std::size_t k = 0; k < sum.cores[site].values.size(); ++k) {
      sum.cores[site].values.mutable_data()[k] += other.cores[site].values[k];
    }
    const DenseTensor za = forward_logits(other, f);
    const DenseTensor zs = forward_logits(sum, f);
    std::vector<double> expected(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) expected[k] = z[k] + za[k];
    CHECK(oracle::max_relative_error(zs.data(), expected) < 1e-12);
  }
}

TEST_CASE("forward is bit-identical on repeated calls and batch-independent") {
  std::mt19937_64 rng(12);
  const MpsModel model = init_mps(3, 4, 4, 6);
  std::vector<std::vector<double>> patches;
  for (int b = 0; b < 5; ++b) patches.push_back(oracle::random_unit_values(rng, 9));
  const DenseTensor all = forward_logits(model, features_for(model, patches));
  CHECK(forward_logits(model, features_for(model, patches)) == all);
  for (std::size_t b = 0; b < patches.size(); ++b) {
    const DenseTensor one = forward_logits(model, features_for(model, {patches[b]}));
    for (int o = 0; o < model.output_dim; ++o) {
      CHECK(one[o] == all[b * model.output_dim + o]);
    }
  }
  CHECK(forward(model, features_for(model, patches)).logits == all);
}

TEST_CASE("ForwardCache::chain_value reproduces the logits at every site") {
  std::mt19937_64 rng(13);
  const MpsModel model = random_model(2, 3, 3, 8);
  const ForwardResult res = forward(
      model, features_for(model, {oracle::random_unit_values(rng, 4), oracle::random_unit_values(rng, 4)}));
  for (std::size_t s = 0; s < 2; ++s) {
    for (int site = 0; site < model.n_sites; ++site) {
      for (int o = 0; o < model.output_dim; ++o) {
        const double ref = res.logits[s * model.output_dim + o];
        CHECK(oracle::relative_error(res.cache.chain_value(model, s, site, o), ref) < 1e-10);
      }
    }
  }
}

TEST_CASE("forward rejects mismatched features") {
  const MpsModel model = init_mps(2, 2, 2, 0);
  CHECK_THROWS_AS(forward(model, DenseTensor({1, 4, 3})), DimensionError);
  CHECK_THROWS_AS(forward(model, DenseTensor({1, 5, 2})), DimensionError);
  CHECK_THROWS_AS(forward(model, DenseTensor({4, 2})), DimensionError);
}

TEST_CASE("forward overflow reports the site") {
  MpsModel model = init_mps(2, 2, 1, 0);
  for (auto& core : model.cores) {
    for (double& v : core.values.mutable_data()) v = 1e200;
  }
  const std::vector<double> patch(4, 0.0);
  try {
    forward(model, features_for(model, {patch}));
    FAIL("expected OverflowError");
  } catch (const OverflowError& e) {
    CHECK(e.site() == 1);
    CHECK(e.kind() == ErrorKind::kNumeric);
  }
  CHECK_THROWS_AS(forward_logits(model, features_for(model, {patch})), OverflowError);
}

TEST_CASE("backward matches finite differences") {
  const int configs[3][3] = {{2, 2, 2}, {2, 3, 2}, {3, 2, 2}};
  for (const auto& cfg : configs) {
    MpsModel model = random_model(cfg[0], cfg[1], cfg[2], 3);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    const DenseTensor f = features_for(
        model, {oracle::random_unit_values(rng, model.n_sites),
                oracle::random_unit_values(rng, model.n_sites)});
    DenseTensor upstream({2, static_cast<std::size_t>(model.output_dim)});
    for (double& v : upstream.mutable_data()) v = g(rng);

    const ForwardResult res = forward(model, f);
    const auto grads = flatten_gradients(backward(model, res.cache, upstream));
    const auto x0 = flatten_parameters(model);
    MpsModel probe = model;
    auto loss = [&](std::span<const double> p) {
      assign_parameters(probe, p);
      const DenseTensor z = forward_logits(probe, f);
      double s = 0.0;
      for (std::size_t k = 0; k < z.size(); ++k) s += upstream[k] * z[k];
      return s;
    };
    const auto report = finite_difference_check(loss, x0, grads, 1e-6);
    CHECK(report.max_relative_error < 1e-5);
  }
}

TEST_CASE("backward: zero upstream, single-site model, mismatched cache") {
  const MpsModel model = random_model(2, 2, 2, 5);
  std::mt19937_64 rng(19);
  const DenseTensor f = features_for(model, {oracle::random_unit_values(rng, 4)});
  const ForwardResult res = forward(model, f);
  for (const auto& g : backward(model, res.cache, DenseTensor({1, 4}))) {
    for (double v : g.data()) CHECK(v == 0.0);
  }

  const MpsModel single = init_mps(1, 3, 1, 5);
  const std::vector<double> px{0.3};
  const ForwardResult r1 = forward(single, features_for(single, {px}));
  const auto g1 = backward(single, r1.cache, DenseTensor({1, 1}, {1.0}));
  const auto psi = local_feature_map(0.3, {3});
  REQUIRE(g1.size() == 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g1[0][i] == doctest::Approx(psi[i]).epsilon(1e-15));

  const MpsModel other = init_mps(2, 2, 3, 5);
  CHECK_THROWS_AS(backward(other, res.cache, DenseTensor({1, 4})), StateError);
  CHECK_THROWS_AS(backward(model, res.cache, DenseTensor({2, 4})), DimensionError);
}

TEST_CASE("flatten/assign round trip and validate") {
  MpsModel model = init_mps(2, 2, 3, 5);
  auto flat = flatten_parameters(model);
  for (double& v : flat) v += 1.0;
  assign_parameters(model, flat);
  CHECK(flatten_parameters(model) == flat);
  CHECK_THROWS_AS(assign_parameters(model, std::vector<double>(3)), DimensionError);

  MpsModel broken = model;
  broken.cores[1].values.mutable_data()[0] = NAN;
  CHECK_THROWS_AS(broken.validate(), StateError);
  broken = model;
  broken.output_site = 0;
  CHECK_THROWS_AS(broken.validate(), StateError);
}
