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

// Microbenchmarks for the hot paths: chain forward/backward over a patch
// batch, whole-image segmentation, and PRAUC.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "stenet/image.hpp"
#include "stenet/metrics.hpp"
#include "stenet/mps.hpp"
#include "stenet/segmenter.hpp"

namespace {

using namespace stenet;

NormalizedImage random_image(int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> values(static_cast<std::size_t>(side) * side);
  for (double& v : values) v = u(rng);
  return NormalizedImage(side, side, std::move(values));
}

// Args: K, d, bond. A 64x64 image gives (64/K)^2 patches.
void BM_Forward(benchmark::State& state) {
  const int k = state.range(0);
  const MpsModel model = init_mps(k, state.range(1), state.range(2), 1);
  const PatchBatch batch = extract_patches(random_image(64, 2), k);
  const DenseTensor features = patch_features(model, batch, 0, batch.count());
  for (auto _ : state) benchmark::DoNotOptimize(forward_logits(model, features));
  state.SetItemsProcessed(state.iterations() * batch.count());
}
BENCHMARK(BM_Forward)->Args({4, 2, 4})->Args({8, 2, 4})->Args({8, 4, 4})->Args({8, 4, 16});

void BM_ForwardBackward(benchmark::State& state) {
  const int k = state.range(0);
  const MpsModel model = init_mps(k, state.range(1), state.range(2), 1);
  const PatchBatch batch = extract_patches(random_image(64, 3), k);
  const DenseTensor features = patch_features(model, batch, 0, batch.count());
  for (auto _ : state) {
    const ForwardResult fr = forward(model, features);
    DenseTensor upstream = fr.logits;
    for (double& v : upstream.mutable_data()) v = 1.0;
    benchmark::DoNotOptimize(backward(model, fr.cache, upstream));
  }
  state.SetItemsProcessed(state.iterations() * batch.count());
}
BENCHMARK(BM_ForwardBackward)->Args({4, 2, 4})->Args({8, 2, 4})->Args({8, 4, 4})->Args({8, 4, 16});

// Args: image side, threads.
void BM_SegmentImage(benchmark::State& state) {
  const MpsModel model = init_mps(8, 4, 4, 1);
  const NormalizedImage img = random_image(state.range(0), 4);
  const SegmentOptions options{PadMode::kError, 0, static_cast<int>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(segment_image(model, img, options));
}
BENCHMARK(BM_SegmentImage)->Args({64, 1})->Args({256, 1})->Args({256, 4})->UseRealTime();

void BM_Prauc(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> scores(state.range(0));
  std::vector<std::uint8_t> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = u(rng);
    labels[i] = u(rng) < 0.3;
  }
  labels[0] = 1;
  for (auto _ : state) benchmark::DoNotOptimize(prauc(scores, labels));
  state.SetItemsProcessed(state.iterations() * scores.size());
}
BENCHMARK(BM_Prauc)->Arg(4096)->Arg(1 << 16)->Arg(1 << 20);

}  // namespace
BENCHMARK_MAIN();
