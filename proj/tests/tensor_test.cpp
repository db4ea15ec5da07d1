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
#include "stenet/tensor.hpp"

using namespace stenet;

namespace {

DenseTensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> data(shape_size(shape));
  for (double& v : data) v = u(rng);
  return DenseTensor(std::move(shape), std::move(data));
}

}  // namespace

TEST_CASE("DenseTensor enforces its shape invariants") {
  CHECK_THROWS_AS(DenseTensor({2, 0}), DimensionError);
  CHECK_THROWS_AS(DenseTensor({2, 3}, std::vector<double>(5)), DimensionError);
  const DenseTensor t({2, 3}, {0, 1, 2, 3, 4, 5});
  CHECK(t.at({1, 2}) == 5.0);
  CHECK_THROWS_AS(t.at({2, 0}), IndexError);
  CHECK(DenseTensor::scalar(3.0).rank() == 0);
  CHECK(DenseTensor::scalar(3.0).size() == 1);
}

TEST_CASE("contract: golden examples") {
  SUBCASE("vector dot product") {
    const DenseTensor a({2}, {1, 2});
    const DenseTensor b({2}, {3, 4});
    const DenseTensor r = contract(a, b, {0}, {0});
    CHECK(r.rank() == 0);
    CHECK(r[0] == 11.0);
  }
  SUBCASE("identity leaves the other operand unchanged") {
    std::mt19937_64 rng(1);
    const DenseTensor b = random_tensor(rng, {3, 5});
    const DenseTensor r = contract(DenseTensor::identity(3), b, {1}, {0});
    CHECK(r == b);
  }
  SUBCASE("order-3 dot product over all axes") {
    std::mt19937_64 rng(2);
    const DenseTensor a = random_tensor(rng, {4, 3, 2});
    const DenseTensor b = random_tensor(rng, {4, 3, 2});
    const DenseTensor r = contract(a, b, {0, 1, 2}, {0, 1, 2});
    double expected = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) expected += a[i] * b[i];
    CHECK(r.rank() == 0);
    CHECK(r[0] == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("free axes order: a's then b's") {
    std::mt19937_64 rng(3);
    const DenseTensor a = random_tensor(rng, {2, 3, 4});
    const DenseTensor b = random_tensor(rng, {5, 3});
    const DenseTensor r = contract(a, b, {1}, {1});
    REQUIRE(r.shape() == Shape{2, 4, 5});
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t k = 0; k < 4; ++k) {
        for (std::size_t l = 0; l < 5; ++l) {
          double s = 0.0;
          for (std::size_t j = 0; j < 3; ++j) s += a.at({i, j, k}) * b.at({l, j});
          CHECK(r.at({i, k, l}) == doctest::Approx(s).epsilon(1e-14));
        }
      }
    }
  }
}

TEST_CASE("contract: errors") {
  const DenseTensor a({2, 3});
  const DenseTensor b({4, 3});
  CHECK_THROWS_AS(contract(a, b, {0}, {0}), DimensionError);
  CHECK_THROWS_AS(contract(a, b, {2}, {1}), IndexError);
  CHECK_THROWS_AS(contract(a, b, {1, 1}, {1, 1}), IndexError);
}

TEST_CASE("contract is bilinear and full self-contraction is the squared norm") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseTensor a = random_tensor(rng, {3, 2, 4});
    const DenseTensor b = random_tensor(rng, {4, 3});
    const double alpha = std::uniform_real_distribution<double>(-3, 3)(rng);
    const DenseTensor lhs = contract(a.scaled(alpha), b, {0, 2}, {1, 0});
    const DenseTensor rhs = contract(a, b, {0, 2}, {1, 0}).scaled(alpha);
    CHECK(oracle::max_relative_error(lhs.data(), rhs.data()) < 1e-12);

    const DenseTensor self = contract(a, a, {0, 1, 2}, {0, 1, 2});
    CHECK(self[0] >= 0.0);
    CHECK(self[0] == doctest::Approx(a.squared_norm()).epsilon(1e-14));
  }
}

TEST_CASE("matrix_chain_product: golden examples and errors") {
  std::vector<DenseTensor> eyes(5, DenseTensor::identity(4));
  CHECK(matrix_chain_product(eyes) == DenseTensor::identity(4));

  std::vector<DenseTensor> scalars = {DenseTensor({1, 1}, {2}), DenseTensor({1, 1}, {3}),
                                      DenseTensor({1, 1}, {4})};
  CHECK(matrix_chain_product(scalars)[0] == 24.0);

  std::mt19937_64 rng(7);
  const std::vector<DenseTensor> pair = {random_tensor(rng, {3, 3}), random_tensor(rng, {3, 3})};
  const DenseTensor via_contract = contract(pair[0], pair[1], {1}, {0});
  CHECK(oracle::max_relative_error(matrix_chain_product(pair).data(), via_contract.data()) < 1e-15);

  const std::vector<DenseTensor> bad = {DenseTensor({2, 3}), DenseTensor({2, 2})};
  CHECK_THROWS_AS(matrix_chain_product(bad), DimensionError);
  CHECK_THROWS_AS(matrix_chain_product(std::span<const DenseTensor>{}), DimensionError);
}

TEST_CASE("matrix_chain_product agrees with pairwise contract folds") {
  std::mt19937_64 rng(8);
  for (std::size_t len : {1u, 2u, 7u, 33u, 64u}) {
    std::vector<DenseTensor> chain;
    for (std::size_t i = 0; i < len; ++i) chain.push_back(random_tensor(rng, {8, 8}));
    DenseTensor fold = chain[0];
    for (std::size_t i = 1; i < len; ++i) fold = contract(fold, chain[i], {1}, {0});
    const DenseTensor ltr = matrix_chain_product(chain);
    const DenseTensor balanced = matrix_chain_product(chain, ChainOrder::kBalanced);
    CHECK(oracle::max_relative_error(ltr.data(), fold.data()) < 1e-10);
    CHECK(oracle::max_relative_error(balanced.data(), fold.data()) < 1e-10);
    // Default reduction is deterministic.
    CHECK(matrix_chain_product(chain) == ltr);
  }
}

TEST_CASE("finite_difference_check") {
  SUBCASE("quadratic") {
    const std::vector<double> x{3.0};
    const std::vector<double> g{6.0};
    const auto report = finite_difference_check(
        [](std::span<const double> p) { return p[0] * p[0]; }, x, g, 1e-5);
    CHECK(report.max_relative_error < 1e-8);
    CHECK(report.worst_coordinate == std::vector<std::size_t>{0});
  }
  SUBCASE("constant function") {
    const std::vector<double> x{1.0, -2.0, 0.5};
    const std::vector<double> g(3, 0.0);
    const auto report =
        finite_difference_check([](std::span<const double>) { return 4.0; }, x, g, 1e-5);
    CHECK(report.max_relative_error == 0.0);
  }
  SUBCASE("detects a wrong gradient") {
    const std::vector<double> x{1.0, 2.0};
    const std::vector<double> g{2.0, -4.0};  // true gradient is (2, 4)
    const auto report = finite_difference_check(
        [](std::span<const double> p) { return p[0] * p[0] + p[1] * p[1]; }, x, g, 1e-5);
    CHECK(report.max_relative_error > 1.0);
    CHECK(report.worst_coordinate == std::vector<std::size_t>{1});
    CHECK(report.analytic_value == -4.0);
    CHECK(report.numeric_value == doctest::Approx(4.0));
  }
  SUBCASE("errors") {
    const std::vector<double> x{1.0};
    const std::vector<double> g{1.0};
    auto f = [](std::span<const double> p) { return p[0]; };
    CHECK_THROWS_AS(finite_difference_check(f, x, g, 0.0), DomainError);
    CHECK_THROWS_AS(finite_difference_check(f, x, std::vector<double>{1, 2}, 1e-5), DimensionError);
    CHECK_THROWS_AS(finite_difference_check([](std::span<const double>) { return NAN; }, x, g, 1e-5),
                    NumericError);
  }
}
